//! Lattice skew random walk.
//!
//! Off the surface `{v_1 = 0}` the chain is a plain walk with increments
//! uniform on `{-1, 1}^d`. On the surface, coordinate 1 steps `+1` with
//! probability `(1 + b_1)/2`, and every transverse coordinate takes a
//! deterministic even shift plus a `+/-1` step biased so the conditional mean
//! displacement equals the surface coefficient exactly. A plain walk `W`, the
//! visit counter `L`, the signed sum `Z` and its coin-completed walk `Z*` are
//! built on the same draws so the pathwise identities hold in integer
//! arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::SurfaceField;

/// Split of a real displacement into an even lattice shift plus a fractional
/// part realizable as a `+/-1` step bias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisplacementSplit {
    /// Even integer part, `2 * floor((c + 1) / 2)`.
    pub even_shift: i64,
    /// Remainder in `[-1, 1]`; the step bias `(1 + bias) / 2`.
    pub bias: f64,
}

/// Splits a finite displacement; errors on NaN or infinity.
pub fn split_displacement(c: f64) -> Result<DisplacementSplit> {
    if !c.is_finite() {
        return Err(Error::NonFinite(format!("displacement {c}")));
    }
    Ok(split_unchecked(c))
}

#[inline]
fn split_unchecked(c: f64) -> DisplacementSplit {
    let even = 2.0 * ((c + 1.0) / 2.0).floor();
    DisplacementSplit { even_shift: even as i64, bias: c - even }
}

/// One-step law on the surface: per-coordinate even shifts and up-step
/// probabilities. Coordinates are independent, so this determines the full
/// `2^d`-atom law.
#[derive(Clone, Debug, PartialEq)]
pub struct StepLaw {
    /// Deterministic even displacement; zero in coordinate 1.
    pub shift: Vec<i64>,
    /// Probability of the `+1` step per coordinate.
    pub p_up: Vec<f64>,
}

impl StepLaw {
    /// Probability of the `-1` step per coordinate.
    pub fn p_down(&self, i: usize) -> f64 {
        1.0 - self.p_up[i]
    }

    /// Expected displacement in coordinate `i`: `shift_i + (p_up - p_down)`.
    pub fn mean(&self, i: usize) -> f64 {
        self.shift[i] as f64 + (2.0 * self.p_up[i] - 1.0)
    }
}

/// Surface transition law at transverse position `xi`. Coordinate 1 uses the
/// coefficient directly (no split); the rest are split into shift plus bias.
pub fn step_law<F: SurfaceField>(xi: &[f64], field: &F) -> StepLaw {
    let d = field.dim();
    let mut coeff = vec![0.0; d];
    field.eval(xi, &mut coeff);
    let mut shift = vec![0i64; d];
    let mut p_up = vec![0.0; d];
    p_up[0] = 0.5 * (1.0 + coeff[0]);
    for i in 1..d {
        let split = split_unchecked(coeff[i]);
        shift[i] = split.even_shift;
        p_up[i] = 0.5 * (1.0 + split.bias);
    }
    StepLaw { shift, p_up }
}

/// Exact one-step law from `state`: the `2^d` atoms `(increment, probability)`.
pub fn one_step_law<F: SurfaceField>(state: &[i64], n: u64, field: &F) -> Vec<(Vec<i64>, f64)> {
    let d = state.len();
    let mut atoms = Vec::with_capacity(1 << d);
    if state[0] != 0 {
        let p = 0.5f64.powi(d as i32);
        for mask in 0..(1usize << d) {
            let inc: Vec<i64> =
                (0..d).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            atoms.push((inc, p));
        }
    } else {
        let root = (n as f64).sqrt();
        let xi: Vec<f64> = state[1..].iter().map(|&v| v as f64 / root).collect();
        let law = step_law(&xi, field);
        for mask in 0..(1usize << d) {
            let mut p = 1.0;
            let mut inc = vec![0i64; d];
            for i in 0..d {
                let up = mask >> i & 1 == 1;
                p *= if up { law.p_up[i] } else { law.p_down(i) };
                inc[i] = law.shift[i] + if up { 1 } else { -1 };
            }
            atoms.push((inc, p));
        }
    }
    atoms
}

/// Scale parameters of one lattice simulation.
#[derive(Clone, Debug)]
pub struct ChainParams {
    pub dim: usize,
    pub resolution: u64,
    pub steps: usize,
    pub horizon: f64,
    pub start: Vec<i64>,
    pub seed: u64,
}

impl ChainParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        ChainParams {
            dim: cfg.dim,
            resolution: cfg.resolution,
            steps: cfg.steps(),
            horizon: cfg.horizon,
            start: cfg.lattice_start.clone(),
            seed: cfg.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub on_surface: bool,
}

/// Single-path chain iterator.
///
/// RNG contract: path `j` draws from stream `j` of a ChaCha8 generator keyed
/// by the config seed, so the stream is a pure function of `(seed, j)` and
/// results are independent of worker count. Within a step, draws are consumed
/// in a fixed order: chain coordinates `1..d`, then (surface steps only) the
/// `d` coupling draws for `W`, then the completion coin. The coin is consumed
/// whether or not anyone records `Z*`, so recording flags never shift the
/// stream.
pub struct ChainWalker<'f, F: SurfaceField> {
    dim: usize,
    inv_root_n: f64,
    field: &'f F,
    rng: ChaCha8Rng,
    step_index: usize,
    x: Vec<i64>,
    w: Vec<i64>,
    local: u64,
    sign_sum: i64,
    coin_sum: i64,
    dx: Vec<i64>,
    dw: Vec<i64>,
    last_coin: i64,
    xi_buf: Vec<f64>,
    coeff_buf: Vec<f64>,
}

#[inline]
fn pm(up: bool) -> i64 {
    if up {
        1
    } else {
        -1
    }
}

#[inline]
fn sgn(v: i64) -> i64 {
    match v.cmp(&0) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Less => -1,
    }
}

impl<'f, F: SurfaceField> ChainWalker<'f, F> {
    pub fn new(params: &ChainParams, field: &'f F, path_index: u64) -> Self {
        assert_eq!(field.dim(), params.dim);
        assert_eq!(params.start.len(), params.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(path_index);
        ChainWalker {
            dim: params.dim,
            inv_root_n: 1.0 / (params.resolution as f64).sqrt(),
            field,
            rng,
            step_index: 0,
            x: params.start.clone(),
            w: vec![0; params.dim],
            local: 0,
            sign_sum: 0,
            coin_sum: 0,
            dx: vec![0; params.dim],
            dw: vec![0; params.dim],
            last_coin: 0,
            xi_buf: vec![0.0; params.dim - 1],
            coeff_buf: vec![0.0; params.dim],
        }
    }

    /// Advances one step; all cumulative processes update together.
    pub fn advance(&mut self) -> StepOutcome {
        let d = self.dim;
        let u_before = self.x[0];
        let on_surface = u_before == 0;
        if !on_surface {
            for i in 0..d {
                let s = pm(self.rng.random::<f64>() < 0.5);
                self.dx[i] = s;
                self.dw[i] = s;
            }
            let dz = sgn(u_before) * self.dx[0];
            self.sign_sum += dz;
            self.coin_sum += dz;
            self.last_coin = dz;
        } else {
            for i in 1..d {
                self.xi_buf[i - 1] = self.x[i] as f64 * self.inv_root_n;
            }
            self.field.eval(&self.xi_buf, &mut self.coeff_buf);
            let p1 = 0.5 * (1.0 + self.coeff_buf[0]);
            debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p1));
            self.dx[0] = pm(self.rng.random::<f64>() < p1);
            for i in 1..d {
                let split = split_unchecked(self.coeff_buf[i]);
                let p = 0.5 * (1.0 + split.bias);
                self.dx[i] = split.even_shift + pm(self.rng.random::<f64>() < p);
            }
            for i in 0..d {
                self.dw[i] = pm(self.rng.random::<f64>() < 0.5);
            }
            let coin = pm(self.rng.random::<f64>() < 0.5);
            self.local += 1;
            self.coin_sum += coin;
            self.last_coin = coin;
        }
        for i in 0..d {
            self.x[i] += self.dx[i];
            self.w[i] += self.dw[i];
        }
        self.step_index += 1;
        StepOutcome { on_surface }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn state(&self) -> &[i64] {
        &self.x
    }

    pub fn walk(&self) -> &[i64] {
        &self.w
    }

    /// Visit count of the surface before the current step index.
    pub fn local_count(&self) -> u64 {
        self.local
    }

    /// Signed increment sum `sum sgn(U_k) dU_k`.
    pub fn sign_sum(&self) -> i64 {
        self.sign_sum
    }

    /// Sign sum completed to a simple walk by fair coins on surface steps.
    pub fn coin_sum(&self) -> i64 {
        self.coin_sum
    }

    pub fn last_dx(&self) -> &[i64] {
        &self.dx
    }

    pub fn last_dw(&self) -> &[i64] {
        &self.dw
    }

    /// Surface coefficients evaluated during the last surface step.
    pub fn last_coeff(&self) -> &[f64] {
        &self.coeff_buf
    }

    pub fn last_coin(&self) -> i64 {
        self.last_coin
    }
}

/// Fully recorded lattice run. Arrays are row-major `(steps + 1) x dim`.
#[derive(Clone, Debug)]
pub struct LatticeRun {
    pub dim: usize,
    pub resolution: u64,
    pub steps: usize,
    pub horizon: f64,
    pub x: Vec<i64>,
    pub w: Vec<i64>,
    /// Surface visit counter; `local_time[k]` counts visits before step `k`.
    pub local_time: Vec<u64>,
    /// Signed increment sum of the first coordinate.
    pub sign_walk: Vec<i64>,
    /// Signed sum completed to a simple walk by independent fair coins.
    pub coin_walk: Vec<i64>,
    /// On-surface residuals `dX - b` (step index, residual vector); recorded
    /// only when diagnostics are requested.
    pub surface_residuals: Option<Vec<(usize, Vec<f64>)>>,
}

impl LatticeRun {
    pub fn state(&self, k: usize) -> &[i64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn walk_state(&self, k: usize) -> &[i64] {
        &self.w[k * self.dim..(k + 1) * self.dim]
    }

    /// First coordinate (the one carrying the surface).
    pub fn u(&self, k: usize) -> i64 {
        self.x[k * self.dim]
    }
}

/// Runs one path of the configured chain, recording every process.
pub fn run_chain(cfg: &SimConfig, path_index: u64) -> LatticeRun {
    run_chain_with(&ChainParams::from_config(cfg), &cfg.field, path_index, false)
}

/// As [`run_chain`] with control over residual diagnostics.
pub fn run_chain_with<F: SurfaceField>(
    params: &ChainParams,
    field: &F,
    path_index: u64,
    diagnostics: bool,
) -> LatticeRun {
    let d = params.dim;
    let steps = params.steps;
    let mut walker = ChainWalker::new(params, field, path_index);
    let mut x = Vec::with_capacity((steps + 1) * d);
    let mut w = Vec::with_capacity((steps + 1) * d);
    let mut local_time = Vec::with_capacity(steps + 1);
    let mut sign_walk = Vec::with_capacity(steps + 1);
    let mut coin_walk = Vec::with_capacity(steps + 1);
    let mut residuals = diagnostics.then(Vec::new);
    x.extend_from_slice(walker.state());
    w.extend_from_slice(walker.walk());
    local_time.push(0);
    sign_walk.push(0);
    coin_walk.push(0);
    for k in 0..steps {
        let outcome = walker.advance();
        x.extend_from_slice(walker.state());
        w.extend_from_slice(walker.walk());
        local_time.push(walker.local_count());
        sign_walk.push(walker.sign_sum());
        coin_walk.push(walker.coin_sum());
        if outcome.on_surface {
            if let Some(res) = residuals.as_mut() {
                let r: Vec<f64> = (0..d)
                    .map(|i| walker.last_dx()[i] as f64 - walker.last_coeff()[i])
                    .collect();
                res.push((k, r));
            }
        }
    }
    LatticeRun {
        dim: d,
        resolution: params.resolution,
        steps,
        horizon: params.horizon,
        x,
        w,
        local_time,
        sign_walk,
        coin_walk,
        surface_residuals: residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    #[test]
    fn split_matches_hand_values() {
        assert_eq!(
            split_displacement(0.0).unwrap(),
            DisplacementSplit { even_shift: 0, bias: 0.0 }
        );
        assert_eq!(
            split_displacement(1.0).unwrap(),
            DisplacementSplit { even_shift: 2, bias: -1.0 }
        );
        let s = split_displacement(3.2).unwrap();
        assert_eq!(s.even_shift, 4);
        assert!((s.bias + 0.8).abs() < 1e-12);
        assert_eq!(
            split_displacement(-1.0).unwrap(),
            DisplacementSplit { even_shift: 0, bias: -1.0 }
        );
        assert!(split_displacement(f64::NAN).is_err());
        assert!(split_displacement(f64::INFINITY).is_err());
    }

    #[test]
    fn step_law_matches_direct_arithmetic() {
        let field = FieldSpec::constant(vec![0.5, 3.2]).unwrap();
        let law = step_law(&[0.0], &field);
        assert_eq!(law.shift, vec![0, 4]);
        assert!((law.p_up[0] - 0.75).abs() < 1e-15);
        assert!((law.p_down(0) - 0.25).abs() < 1e-15);
        assert!((law.p_up[1] - 0.1).abs() < 1e-12);
        assert!((law.p_down(1) - 0.9).abs() < 1e-12);
        assert!((law.mean(0) - 0.5).abs() < 1e-12);
        assert!((law.mean(1) - 3.2).abs() < 1e-12);

        let flat = FieldSpec::constant(vec![0.0, 0.0]).unwrap();
        let law = step_law(&[1.0], &flat);
        assert_eq!(law.shift, vec![0, 0]);
        assert_eq!(law.p_up, vec![0.5, 0.5]);

        let reflect = FieldSpec::constant(vec![1.0, 0.0]).unwrap();
        let law = step_law(&[0.0], &reflect);
        assert_eq!(law.p_up[0], 1.0);
    }

    #[test]
    fn one_step_law_off_surface_is_uniform() {
        let field = FieldSpec::constant(vec![0.9, -2.0]).unwrap();
        let atoms = one_step_law(&[3, 0], 100, &field);
        assert_eq!(atoms.len(), 4);
        for (inc, p) in &atoms {
            assert!(inc.iter().all(|&c| c == 1 || c == -1));
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn one_step_law_on_surface_matches_enumeration() {
        let field = FieldSpec::constant(vec![0.0, 3.2]).unwrap();
        let atoms = one_step_law(&[0, 7], 100, &field);
        let mut mass = 0.0;
        let mut p_up2 = 0.0;
        for (inc, p) in &atoms {
            mass += p;
            assert!(inc[0] == 1 || inc[0] == -1);
            assert!(inc[1] == 3 || inc[1] == 5);
            if inc[1] == 5 {
                p_up2 += p;
            }
        }
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((p_up2 - 0.1).abs() < 1e-12);

        // Conditional mean equals the coefficient, coordinatewise.
        for i in 0..2 {
            let mean: f64 = atoms.iter().map(|(inc, p)| inc[i] as f64 * p).sum();
            let want = if i == 0 { 0.0 } else { 3.2 };
            assert!((mean - want).abs() < 1e-12);
        }
    }

    fn params(dim: usize, steps: usize, seed: u64) -> ChainParams {
        ChainParams {
            dim,
            resolution: 100,
            steps,
            horizon: steps as f64 / 100.0,
            start: vec![0; dim],
            seed,
        }
    }

    #[test]
    fn reflecting_chain_stays_nonnegative_and_counts_visits() {
        let field = FieldSpec::constant(vec![1.0]).unwrap();
        let run = run_chain_with(&params(1, 500, 11), &field, 0, false);
        let mut visits = 0u64;
        for k in 0..=500 {
            assert!(run.u(k) >= 0);
            assert_eq!(run.local_time[k], visits);
            if run.u(k) == 0 {
                visits += 1;
            }
        }
        assert!(run.local_time[500] > 0);
    }

    #[test]
    fn pathwise_identities_hold_exactly() {
        let field = FieldSpec::new(
            crate::field::FieldParams::SigmoidAffine {
                offset: vec![0.1, 0.5],
                amplitude: vec![0.4, 1.7],
                frequency: vec![0.9],
            },
            2,
        )
        .unwrap();
        let p = ChainParams { start: vec![0, 2], ..params(2, 400, 23) };
        for j in 0..8 {
            let run = run_chain_with(&p, &field, j, true);
            let x1 = p.start[0].abs();
            for k in 0..=400 {
                // |U_k| = |x_1| + Z_k + L_k in integer arithmetic.
                assert_eq!(
                    run.u(k).abs(),
                    x1 + run.sign_walk[k] + run.local_time[k] as i64
                );
            }
            for k in 0..400 {
                let du = run.u(k + 1) - run.u(k);
                let dz = run.sign_walk[k + 1] - run.sign_walk[k];
                let dzs = run.coin_walk[k + 1] - run.coin_walk[k];
                assert!(dzs == 1 || dzs == -1);
                if run.u(k) != 0 {
                    // Coupling: off the surface the walk takes the same step.
                    assert_eq!(run.state(k + 1), {
                        let mut v = run.state(k).to_vec();
                        for i in 0..2 {
                            v[i] += run.walk_state(k + 1)[i] - run.walk_state(k)[i];
                        }
                        &v.clone()[..]
                    });
                    assert_eq!(dz, run.u(k).signum() * du);
                } else {
                    assert_eq!(dz, 0);
                }
                // W is a plain walk: increments in {-1, +1}^d.
                for i in 0..2 {
                    let dw = run.walk_state(k + 1)[i] - run.walk_state(k)[i];
                    assert!(dw == 1 || dw == -1);
                }
            }
            // On-surface residual bound (3 + 2 sup|b|) sqrt(d).
            let bound = (3.0 + 2.0 * field.sup_bound()) * 2f64.sqrt();
            for (_, r) in run.surface_residuals.as_ref().unwrap() {
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= bound);
            }
        }
    }

    #[test]
    fn two_step_law_from_origin_matches_brute_force() {
        // d = 1, b = 0: enumerate both steps by hand. The chain from 0 takes a
        // fair step, then a fair step again, so the law is {-2: 1/4, 0: 1/2, 2: 1/4}.
        let field = FieldSpec::constant(vec![0.0]).unwrap();
        let mut law = std::collections::BTreeMap::new();
        for (inc1, p1) in one_step_law(&[0], 4, &field) {
            for (inc2, p2) in one_step_law(&[inc1[0]], 4, &field) {
                *law.entry(inc1[0] + inc2[0]).or_insert(0.0) += p1 * p2;
            }
        }
        assert_eq!(law.len(), 3);
        assert!((law[&-2] - 0.25).abs() < 1e-15);
        assert!((law[&0] - 0.5).abs() < 1e-15);
        assert!((law[&2] - 0.25).abs() < 1e-15);

        // Monte Carlo frequencies agree at 4 sigma with a fixed seed.
        let p = params(1, 2, 99);
        let m = 20_000;
        let mut hits = std::collections::BTreeMap::new();
        for j in 0..m {
            let run = run_chain_with(&p, &field, j, false);
            *hits.entry(run.u(2)).or_insert(0usize) += 1;
        }
        for (v, want) in [(-2i64, 0.25), (0, 0.5), (2, 0.25)] {
            let freq = hits[&v] as f64 / m as f64;
            let sigma = (want * (1.0 - want) / m as f64).sqrt();
            assert!((freq - want).abs() < 4.0 * sigma, "{v}: {freq} vs {want}");
        }
    }

    #[test]
    fn config_level_run_uses_lattice_start_and_step_count() {
        let cfg = crate::config::RawConfig {
            dimension: 2,
            resolution_n: 100,
            horizon_t: 0.5,
            paths_m: 1,
            start: vec![0.7, -0.2],
            field: Some(crate::field::FieldParams::Constant { value: vec![0.5, 0.0] }),
            drift: None,
            seed: Some(3),
            output: None,
            collision: None,
        }
        .validate()
        .unwrap();
        let run = run_chain(&cfg, 0);
        assert_eq!(run.steps, 50);
        assert_eq!(run.state(0), &[7, -2]);
        assert_eq!(run.x.len(), 51 * 2);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let field = FieldSpec::constant(vec![0.5]).unwrap();
        let p = params(1, 200, 7);
        let a = run_chain_with(&p, &field, 3, false);
        let b = run_chain_with(&p, &field, 3, false);
        assert_eq!(a.x, b.x);
        assert_eq!(a.w, b.w);
        let c = run_chain_with(&p, &field, 4, false);
        assert_ne!(a.x, c.x);
    }
}
