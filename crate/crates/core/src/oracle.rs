//! Exact finite-step laws of the lattice chain by dynamic programming, plus
//! closed-form reference laws validated against them.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::SurfaceField;

/// Exact probability distribution of the chain state after `steps` steps.
#[derive(Clone, Debug)]
pub struct LatticeLaw {
    pub dim: usize,
    pub resolution: u64,
    pub steps: usize,
    /// Flattened states, row-major `len() x dim`, lexicographically sorted.
    states: Vec<i64>,
    mass: Vec<f64>,
}

impl LatticeLaw {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn state(&self, i: usize) -> &[i64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.states.chunks_exact(self.dim).zip(self.mass.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Marginal law of one coordinate as sorted `(lattice value, mass)` atoms.
    pub fn marginal(&self, coord: usize) -> Vec<(i64, f64)> {
        assert!(coord < self.dim);
        let mut acc = std::collections::BTreeMap::new();
        for (state, p) in self.iter() {
            *acc.entry(state[coord]).or_insert(0.0) += p;
        }
        acc.into_iter().collect()
    }

    /// Marginal atoms rescaled by `1/sqrt(n)`.
    pub fn marginal_scaled(&self, coord: usize) -> Vec<(f64, f64)> {
        let inv = 1.0 / (self.resolution as f64).sqrt();
        self.marginal(coord).into_iter().map(|(v, p)| (v as f64 * inv, p)).collect()
    }
}

/// Mass split of the first coordinate by sign: `(below, at, above)` zero.
/// The atom at zero is the lattice artifact that vanishes as `n` grows.
pub fn sign_probability(law: &LatticeLaw) -> (f64, f64, f64) {
    let mut below = 0.0;
    let mut at = 0.0;
    let mut above = 0.0;
    for (state, p) in law.iter() {
        match state[0].cmp(&0) {
            std::cmp::Ordering::Less => below += p,
            std::cmp::Ordering::Equal => at += p,
            std::cmp::Ordering::Greater => above += p,
        }
    }
    (below, at, above)
}

/// Exact law of the configured chain after `steps` steps.
pub fn exact_chain_law(cfg: &SimConfig, steps: usize) -> Result<LatticeLaw> {
    exact_law(&cfg.field, &cfg.lattice_start, cfg.resolution, steps)
}

/// Forward dynamic program over the full reachable rectangle. Supports
/// `d = 1` (any step count) and `d = 2` (up to the 512-step budget).
pub fn exact_law<F: SurfaceField>(
    field: &F,
    start: &[i64],
    n: u64,
    steps: usize,
) -> Result<LatticeLaw> {
    let d = field.dim();
    assert_eq!(start.len(), d);
    match d {
        1 => exact_law_d1(field, start[0], n, steps),
        2 => exact_law_d2(field, [start[0], start[1]], n, steps),
        _ => Err(Error::DimensionTooLarge(d)),
    }
}

fn exact_law_d1<F: SurfaceField>(field: &F, start: i64, n: u64, steps: usize) -> Result<LatticeLaw> {
    let size = 2 * steps + 1;
    let offset = start - steps as i64;
    let mut cur = vec![0.0f64; size];
    let mut next = vec![0.0f64; size];
    cur[steps] = 1.0;
    let mut coeff = [0.0f64];
    field.eval(&[], &mut coeff);
    let p_up = 0.5 * (1.0 + coeff[0]);
    let p_down = 1.0 - p_up;
    for _ in 0..steps {
        next.fill(0.0);
        for (idx, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = offset + idx as i64;
            let (up, down) = if v != 0 { (0.5 * p, 0.5 * p) } else { (p_up * p, p_down * p) };
            if up > 0.0 {
                next[idx + 1] += up;
            }
            if down > 0.0 {
                next[idx - 1] += down;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut states = Vec::new();
    let mut mass = Vec::new();
    for (idx, &p) in cur.iter().enumerate() {
        if p > 0.0 {
            states.push(offset + idx as i64);
            mass.push(p);
        }
    }
    finish_law(1, n, steps, states, mass)
}

fn exact_law_d2<F: SurfaceField>(
    field: &F,
    start: [i64; 2],
    n: u64,
    steps: usize,
) -> Result<LatticeLaw> {
    if steps > 512 {
        return Err(Error::BudgetExceeded(format!(
            "d = 2 exact law capped at 512 steps, requested {steps}"
        )));
    }
    // Transverse displacement per step is bounded by the even shift plus one.
    let mut probe = [0.0f64; 2];
    field.eval(&[0.0], &mut probe);
    let coeff_bound = transverse_bound(field);
    let max_disp = coeff_bound.ceil() as i64 + 2;
    let rows = 2 * steps + 1;
    let cols = 2 * steps * max_disp as usize + 1;
    let bytes = rows * cols * 2 * std::mem::size_of::<f64>();
    if bytes > 2_000_000_000 {
        return Err(Error::BudgetExceeded(format!(
            "state rectangle needs {bytes} bytes"
        )));
    }
    let row_off = start[0] - steps as i64;
    let col_off = start[1] - steps as i64 * max_disp;

    // The surface transition law only depends on the column; precompute it.
    let root = (n as f64).sqrt();
    let mut p1_up = vec![0.0f64; cols];
    let mut p2_up = vec![0.0f64; cols];
    let mut shift2 = vec![0i64; cols];
    let mut coeff = [0.0f64; 2];
    for c in 0..cols {
        let v2 = col_off + c as i64;
        field.eval(&[v2 as f64 / root], &mut coeff);
        p1_up[c] = 0.5 * (1.0 + coeff[0]);
        let split = crate::chain::split_displacement(coeff[1]).expect("validated field");
        shift2[c] = split.even_shift;
        p2_up[c] = 0.5 * (1.0 + split.bias);
    }

    let mut cur = vec![0.0f64; rows * cols];
    let mut next = vec![0.0f64; rows * cols];
    let start_idx = (start[0] - row_off) as usize * cols + (start[1] - col_off) as usize;
    cur[start_idx] = 1.0;
    for _ in 0..steps {
        next.fill(0.0);
        for r in 0..rows {
            let v1 = row_off + r as i64;
            let row = r * cols;
            if v1 != 0 {
                for c in 0..cols {
                    let p = cur[row + c];
                    if p == 0.0 {
                        continue;
                    }
                    let q = 0.25 * p;
                    next[row + cols + c + 1] += q;
                    next[row + cols + c - 1] += q;
                    next[row - cols + c + 1] += q;
                    next[row - cols + c - 1] += q;
                }
            } else {
                for c in 0..cols {
                    let p = cur[row + c];
                    if p == 0.0 {
                        continue;
                    }
                    let cc = (c as i64 + shift2[c]) as usize;
                    let pairs = [
                        (row + cols, p1_up[c]),
                        (row - cols, 1.0 - p1_up[c]),
                    ];
                    for (target_row, p1) in pairs {
                        if p1 == 0.0 {
                            continue;
                        }
                        let up = p * p1 * p2_up[c];
                        let down = p * p1 * (1.0 - p2_up[c]);
                        if up > 0.0 {
                            next[target_row + cc + 1] += up;
                        }
                        if down > 0.0 {
                            next[target_row + cc - 1] += down;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut states = Vec::new();
    let mut mass = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let p = cur[r * cols + c];
            if p > 0.0 {
                states.push(row_off + r as i64);
                states.push(col_off + c as i64);
                mass.push(p);
            }
        }
    }
    finish_law(2, n, steps, states, mass)
}

/// Upper bound on `|b_2|`; conservative probing for non-parametric fields.
fn transverse_bound<F: SurfaceField>(field: &F) -> f64 {
    // The Euclidean sup bound dominates every coordinate bound.
    field.sup_bound()
}

fn finish_law(
    dim: usize,
    n: u64,
    steps: usize,
    states: Vec<i64>,
    mass: Vec<f64>,
) -> Result<LatticeLaw> {
    let law = LatticeLaw { dim, resolution: n, steps, states, mass };
    debug_assert!((law.total_mass() - 1.0).abs() < 1e-10);
    Ok(law)
}

/// Terminal CDF of the constant-skew scaling limit started at the surface:
/// density `2 alpha phi_t(y)` above zero and `2 (1 - alpha) phi_t(y)` below.
/// Treated as a derived reference; trusted only after the dynamic-programming
/// cross-checks pass.
#[derive(Clone, Copy, Debug)]
pub struct SkewBmCdf {
    pub alpha: f64,
    pub t: f64,
}

/// Builds the reference CDF; `alpha` must lie in `[0, 1]` and `t` must be
/// positive.
pub fn skew_bm_reference_cdf(alpha: f64, t: f64) -> Result<SkewBmCdf> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::AlphaRange(alpha));
    }
    assert!(t > 0.0, "time horizon must be positive");
    Ok(SkewBmCdf { alpha, t })
}

impl SkewBmCdf {
    pub fn cdf(&self, y: f64) -> f64 {
        let phi = normal_cdf(y / self.t.sqrt());
        if y < 0.0 {
            2.0 * (1.0 - self.alpha) * phi
        } else {
            1.0 - 2.0 * self.alpha * (1.0 - phi)
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Mean local time at zero of a reflected Brownian motion from zero, i.e. the
/// mean of `|N(0, t)|`, by quadrature of the folded normal (not hard-coded).
pub fn reflected_local_time_mean(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let sigma = t.sqrt();
    let density = |y: f64| {
        2.0 * y * (-y * y / (2.0 * t)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    simpson(density, 0.0, 12.0 * sigma, 1 << 14)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::one_step_law;
    use crate::field::{FieldParams, FieldSpec};

    fn law_d1(b1: f64, start: i64, n: u64, steps: usize) -> LatticeLaw {
        let field = FieldSpec::constant(vec![b1]).unwrap();
        exact_law(&field, &[start], n, steps).unwrap()
    }

    #[test]
    fn two_step_laws_match_brute_force() {
        // Enumerate all step sequences by hand.
        let law = law_d1(0.0, 0, 4, 2);
        let atoms: Vec<(i64, f64)> = law.marginal(0);
        assert_eq!(atoms, vec![(-2, 0.25), (0, 0.5), (2, 0.25)]);

        let law = law_d1(1.0, 0, 4, 2);
        assert_eq!(law.marginal(0), vec![(0, 0.5), (2, 0.5)]);

        let law = law_d1(0.5, 0, 4, 1);
        assert_eq!(law.marginal(0), vec![(-1, 0.25), (1, 0.75)]);
    }

    #[test]
    fn one_step_dp_equals_enumerated_law() {
        let field = FieldSpec::new(
            FieldParams::SigmoidAffine {
                offset: vec![0.2, 1.0],
                amplitude: vec![0.5, 1.5],
                frequency: vec![0.8],
            },
            2,
        )
        .unwrap();
        for start in [[0i64, 3], [2, -1]] {
            let law = exact_law(&field, &start, 64, 1).unwrap();
            let mut expect = std::collections::BTreeMap::new();
            for (inc, p) in one_step_law(&start, 64, &field) {
                let key = (start[0] + inc[0], start[1] + inc[1]);
                *expect.entry(key).or_insert(0.0) += p;
            }
            let expect: Vec<((i64, i64), f64)> =
                expect.into_iter().filter(|&(_, p)| p > 0.0).collect();
            let got: Vec<((i64, i64), f64)> =
                law.iter().map(|(s, p)| ((s[0], s[1]), p)).collect();
            assert_eq!(expect.len(), got.len());
            for (e, g) in expect.iter().zip(&got) {
                assert_eq!(e.0, g.0);
                assert!((e.1 - g.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_is_conserved_for_sigmoid_field() {
        let field = FieldSpec::new(
            FieldParams::SigmoidAffine {
                offset: vec![0.0, 0.3],
                amplitude: vec![0.7, 1.4],
                frequency: vec![1.3],
            },
            2,
        )
        .unwrap();
        let law = exact_law(&field, &[0, 0], 256, 40).unwrap();
        assert!((law.total_mass() - 1.0).abs() < 1e-10);
        // Support is confined to the advertised rectangle.
        for (state, _) in law.iter() {
            assert!(state[0].abs() <= 40);
            assert!(state[1].abs() <= 40 * 4);
        }
    }

    #[test]
    fn symmetric_field_gives_symmetric_sign_split() {
        let law = law_d1(0.0, 0, 100, 64);
        let (below, at, above) = sign_probability(&law);
        assert!((below - above).abs() < 1e-12);
        assert!(at > 0.0);
        assert!((below + at + above - 1.0).abs() < 1e-12);

        let law = law_d1(1.0, 0, 100, 64);
        let (below, _, _) = sign_probability(&law);
        assert_eq!(below, 0.0);
    }

    #[test]
    fn dimension_and_budget_guards() {
        let field = FieldSpec::zero(3);
        assert!(matches!(
            exact_law(&field, &[0, 0, 0], 10, 4),
            Err(Error::DimensionTooLarge(3))
        ));
        let field = FieldSpec::zero(2);
        assert!(matches!(
            exact_law(&field, &[0, 0], 10, 513),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn skew_cdf_special_cases() {
        let sym = skew_bm_reference_cdf(0.5, 1.0).unwrap();
        for z in [-2.0, -0.3, 0.0, 0.7, 2.5] {
            assert!((sym.cdf(z) - normal_cdf(z)).abs() < 1e-12);
        }
        let folded = skew_bm_reference_cdf(1.0, 1.0).unwrap();
        assert_eq!(folded.cdf(-0.1), 0.0);
        assert!((folded.cdf(1.0) - (2.0 * normal_cdf(1.0) - 1.0)).abs() < 1e-12);
        let tilted = skew_bm_reference_cdf(0.75, 1.0).unwrap();
        assert!((tilted.cdf(0.0) - 0.25).abs() < 1e-12);
        assert!(skew_bm_reference_cdf(1.2, 1.0).is_err());
        assert!(skew_bm_reference_cdf(-0.2, 1.0).is_err());
    }

    #[test]
    fn skew_cdf_scales_with_time() {
        let c = skew_bm_reference_cdf(0.75, 4.0).unwrap();
        let unit = skew_bm_reference_cdf(0.75, 1.0).unwrap();
        for z in [-1.0, 0.5, 2.0] {
            assert!((c.cdf(2.0 * z) - unit.cdf(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn reflected_mean_matches_quadrature_expectations() {
        let v1 = reflected_local_time_mean(1.0);
        assert!((v1 - 0.79788).abs() < 1e-4, "{v1}");
        assert!((v1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);
        let v4 = reflected_local_time_mean(4.0);
        assert!((v4 - 2.0 * v1).abs() < 1e-9);
        assert!(reflected_local_time_mean(1e-12) < 1e-5);
        assert_eq!(reflected_local_time_mean(0.0), 0.0);
    }
}
