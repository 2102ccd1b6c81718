//! Empirical laws, Kolmogorov-Smirnov distances and distribution-free bands.

use crate::error::{Error, Result};

/// Sorted sample of one coordinate.
#[derive(Clone, Debug)]
pub struct EmpiricalLaw {
    values: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn from_samples(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalLaw { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous empirical CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        self.rank_at_most(x) as f64 / self.values.len() as f64
    }

    /// Number of samples `<= x`.
    fn rank_at_most(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    /// Number of samples `< x`.
    fn rank_below(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Sup-distance between the empirical CDF and a continuous reference,
/// evaluating both one-sided gaps at every sample point.
pub fn ks_distance(emp: &EmpiricalLaw, cdf: impl Fn(f64) -> f64) -> f64 {
    let m = emp.len() as f64;
    let mut sup: f64 = 0.0;
    let mut below = 0usize;
    let mut i = 0usize;
    let vals = emp.values();
    while i < vals.len() {
        let v = vals[i];
        let mut j = i;
        while j < vals.len() && vals[j] == v {
            j += 1;
        }
        let f = cdf(v);
        sup = sup.max((f - below as f64 / m).abs());
        sup = sup.max((f - j as f64 / m).abs());
        below = j;
        i = j;
    }
    sup
}

/// Sup-distance between the empirical CDF and a discrete reference given as
/// sorted `(value, mass)` atoms. Both CDFs are step functions, so the sup is
/// attained at (left limits of) the union of jump points.
pub fn ks_distance_discrete(emp: &EmpiricalLaw, atoms: &[(f64, f64)]) -> f64 {
    debug_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
    let m = emp.len() as f64;
    let mut sup: f64 = 0.0;
    let mut ref_cum = 0.0;
    let mut k = 0usize;
    let mut probe = |x: f64, ref_below: f64, ref_at: f64, emp_law: &EmpiricalLaw| {
        let below = emp_law.rank_below(x) as f64 / m;
        let at = emp_law.rank_at_most(x) as f64 / m;
        let s = (ref_below - below).abs().max((ref_at - at).abs());
        if s > sup {
            sup = s;
        }
    };
    // Walk the union of atom locations and sample values.
    let mut points: Vec<f64> = emp.values().to_vec();
    points.extend(atoms.iter().map(|&(v, _)| v));
    points.sort_by(f64::total_cmp);
    points.dedup();
    for x in points {
        while k < atoms.len() && atoms[k].0 < x {
            ref_cum += atoms[k].1;
            k += 1;
        }
        let ref_below = ref_cum;
        let ref_at = if k < atoms.len() && atoms[k].0 == x {
            ref_cum + atoms[k].1
        } else {
            ref_cum
        };
        probe(x, ref_below, ref_at, emp);
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance_two_sample(a: &EmpiricalLaw, b: &EmpiricalLaw) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut sup: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let (va, vb) = (a.values(), b.values());
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < va.len() && va[i] <= x {
            i += 1;
        }
        while j < vb.len() && vb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Sup-distance between a discrete CDF (sorted atoms) and a continuous one,
/// checking both sides of every jump.
pub fn cdf_sup_distance(atoms: &[(f64, f64)], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sup: f64 = 0.0;
    let mut cum = 0.0;
    for &(v, p) in atoms {
        let f = cdf(v);
        sup = sup.max((f - cum).abs());
        cum += p;
        sup = sup.max((f - cum).abs());
    }
    sup
}

/// Distribution-free band: with probability `confidence` the empirical CDF of
/// `m` samples stays within `sqrt(ln(2 / (1 - confidence)) / (2 m))` of its
/// generating CDF in sup norm.
pub fn dkw_band(m: usize, confidence: f64) -> f64 {
    assert!(m >= 1 && (0.0..1.0).contains(&confidence));
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * m as f64)).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dkw_band_matches_formula() {
        let eps = dkw_band(100_000, 0.99);
        assert!((eps - 0.00515).abs() < 2e-5, "{eps}");
        assert!(dkw_band(100, 0.95) > dkw_band(1000, 0.95));
    }

    #[test]
    fn quantile_samples_sit_close_to_reference() {
        // Samples placed exactly at reference quantiles i/(m+1).
        let m = 999;
        let cdf = |x: f64| x.clamp(0.0, 1.0); // uniform on [0,1]
        let samples: Vec<f64> = (1..=m).map(|i| i as f64 / (m + 1) as f64).collect();
        let emp = EmpiricalLaw::from_samples(samples).unwrap();
        let d = ks_distance(&emp, cdf);
        assert!(d <= 1.0 / (m + 1) as f64 + 1e-12, "{d}");
    }

    #[test]
    fn discrete_distance_sees_missing_atoms() {
        let atoms = vec![(-1.0, 0.5), (1.0, 0.5)];
        let emp = EmpiricalLaw::from_samples(vec![-1.0; 10]).unwrap();
        let d = ks_distance_discrete(&emp, &atoms);
        assert!((d - 0.5).abs() < 1e-12);

        let balanced =
            EmpiricalLaw::from_samples(vec![-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(ks_distance_discrete(&balanced, &atoms) < 1e-12);
    }

    #[test]
    fn two_sample_distance_on_disjoint_supports_is_one() {
        let a = EmpiricalLaw::from_samples(vec![0.0, 1.0, 2.0]).unwrap();
        let b = EmpiricalLaw::from_samples(vec![10.0, 11.0]).unwrap();
        assert!((ks_distance_two_sample(&a, &b) - 1.0).abs() < 1e-12);
        assert!(ks_distance_two_sample(&a, &a) < 1e-12);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(EmpiricalLaw::from_samples(vec![]).is_err());
    }

    #[test]
    fn calibration_false_positive_rate_is_small() {
        // Sampling from the reference itself: the distance exceeds the 99%
        // band only rarely. 100 repetitions at m = 2000 with a fixed seed.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
        let m = 2000;
        let band = dkw_band(m, 0.99);
        let mut exceed = 0;
        for _ in 0..100 {
            let samples: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let emp = EmpiricalLaw::from_samples(samples).unwrap();
            if ks_distance(&emp, |x| x.clamp(0.0, 1.0)) > band {
                exceed += 1;
            }
        }
        assert!(exceed <= 3, "{exceed} exceedances in 100 runs");
    }
}
