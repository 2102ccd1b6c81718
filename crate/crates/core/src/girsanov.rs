//! Drift by exponential reweighting.
//!
//! The chain never sees the drift. A zero-drift ensemble is reweighted with
//! the discrete exponential martingale built from left-point (predictable)
//! evaluation of the drift along the path, which keeps the mean weight at one
//! for every resolution.

use crate::config::grid_index;
use crate::error::{Error, Result};
use crate::field::DriftField;
use crate::scale::ScaledPath;

/// A rescaled path carrying its exponential weight.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    pub path: ScaledPath,
    pub weight: f64,
}

/// Discrete exponential weight over `[0, horizon]`:
/// `exp( sum_k a(X(t_k)) . dW_k - 1/2 sum_k |a(X(t_k))|^2 dt )`.
pub fn girsanov_weight<D: DriftField>(path: &ScaledPath, drift: &D, horizon: f64) -> Result<f64> {
    Ok(log_girsanov_weight(path, drift, horizon)?.exp())
}

/// Log-weight; exact zero for the zero drift.
pub fn log_girsanov_weight<D: DriftField>(
    path: &ScaledPath,
    drift: &D,
    horizon: f64,
) -> Result<f64> {
    let end = path.steps as f64 / path.resolution as f64;
    if horizon > end + 1e-9 {
        return Err(Error::HorizonExceedsPath { horizon, path_end: end });
    }
    if drift.is_zero() {
        return Ok(0.0);
    }
    let d = path.dim;
    let dt = path.dt();
    let last = grid_index(path.resolution, horizon, path.steps);
    let mut acc = 0.0;
    let mut a = vec![0.0; d];
    for k in 0..last {
        drift.eval(path.state(k), &mut a);
        let mut dot = 0.0;
        let mut norm2 = 0.0;
        for i in 0..d {
            let dw = path.w[(k + 1) * d + i] - path.w[k * d + i];
            dot += a[i] * dw;
            norm2 += a[i] * a[i];
        }
        acc += dot - 0.5 * norm2 * dt;
    }
    Ok(acc)
}

/// Streaming log-weight accumulator for ensemble folds that never materialize
/// a [`ScaledPath`]. Feed the lattice state before each step and the lattice
/// walk increment of that step.
pub struct WeightAccumulator<'d, D: DriftField> {
    drift: &'d D,
    inv_root_n: f64,
    dt: f64,
    log_weight: f64,
    x_buf: Vec<f64>,
    a_buf: Vec<f64>,
}

impl<'d, D: DriftField> WeightAccumulator<'d, D> {
    pub fn new(drift: &'d D, resolution: u64) -> Self {
        let d = drift.dim();
        WeightAccumulator {
            drift,
            inv_root_n: 1.0 / (resolution as f64).sqrt(),
            dt: 1.0 / resolution as f64,
            log_weight: 0.0,
            x_buf: vec![0.0; d],
            a_buf: vec![0.0; d],
        }
    }

    #[inline]
    pub fn step(&mut self, state_before: &[i64], walk_increment: &[i64]) {
        if self.drift.is_zero() {
            return;
        }
        for (b, &v) in self.x_buf.iter_mut().zip(state_before) {
            *b = v as f64 * self.inv_root_n;
        }
        self.drift.eval(&self.x_buf, &mut self.a_buf);
        let mut dot = 0.0;
        let mut norm2 = 0.0;
        for (a, &dw) in self.a_buf.iter().zip(walk_increment) {
            dot += a * dw as f64 * self.inv_root_n;
            norm2 += a * a;
        }
        self.log_weight += dot - 0.5 * norm2 * self.dt;
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Driving Brownian motion of the reweighted solution:
/// `w~(t_k) = W(t_k) - sum_{j<k} a(X(t_j)) dt` on the grid.
pub fn shifted_brownian<D: DriftField>(path: &ScaledPath, drift: &D) -> Vec<f64> {
    let d = path.dim;
    let dt = path.dt();
    let mut out = vec![0.0; (path.steps + 1) * d];
    let mut a = vec![0.0; d];
    let mut drift_sum = vec![0.0; d];
    for k in 0..=path.steps {
        for i in 0..d {
            out[k * d + i] = path.w[k * d + i] - drift_sum[i];
        }
        if k < path.steps {
            drift.eval(path.state(k), &mut a);
            for i in 0..d {
                drift_sum[i] += a[i] * dt;
            }
        }
    }
    out
}

/// Self-normalized importance-sampling estimate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WeightedEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub ess: f64,
}

const MIN_ESS: f64 = 10.0;

/// Self-normalized mean of `values` under `weights`, with delta-method
/// standard error. Errors when the ensemble is empty or the weights are so
/// uneven that fewer than [`MIN_ESS`] effective samples remain.
pub fn weighted_expectation(weights: &[f64], values: &[f64]) -> Result<WeightedEstimate> {
    if weights.is_empty() || weights.len() != values.len() {
        return Err(Error::EmptyEnsemble);
    }
    let w_sum: f64 = weights.iter().sum();
    let w2_sum: f64 = weights.iter().map(|w| w * w).sum();
    let ess = w_sum * w_sum / w2_sum;
    if ess < MIN_ESS {
        return Err(Error::DegenerateWeights { ess, min: MIN_ESS });
    }
    let estimate: f64 =
        weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / w_sum;
    let var: f64 = weights
        .iter()
        .zip(values)
        .map(|(w, v)| (w * (v - estimate)).powi(2))
        .sum::<f64>();
    Ok(WeightedEstimate { estimate, stderr: var.sqrt() / w_sum, ess })
}

/// As [`weighted_expectation`] for materialized samples and a path functional.
pub fn weighted_expectation_paths<T>(
    samples: &[WeightedSample],
    functional: T,
) -> Result<WeightedEstimate>
where
    T: Fn(&ScaledPath) -> f64,
{
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let values: Vec<f64> = samples.iter().map(|s| functional(&s.path)).collect();
    weighted_expectation(&weights, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{run_chain_with, ChainParams};
    use crate::field::{DriftSpec, FieldSpec};
    use crate::scale::rescale;

    fn sample_path(seed: u64, j: u64, n: u64, steps: usize) -> ScaledPath {
        let field = FieldSpec::constant(vec![0.2]).unwrap();
        let p = ChainParams {
            dim: 1,
            resolution: n,
            steps,
            horizon: steps as f64 / n as f64,
            start: vec![0],
            seed,
        };
        rescale(&run_chain_with(&p, &field, j, false))
    }

    #[test]
    fn zero_drift_weight_is_exactly_one() {
        let path = sample_path(1, 0, 100, 100);
        let drift = DriftSpec::zero(1);
        assert_eq!(girsanov_weight(&path, &drift, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn constant_drift_weight_telescopes_to_closed_form() {
        let path = sample_path(2, 3, 100, 100);
        let c = 0.7;
        let drift = DriftSpec::constant(vec![c]).unwrap();
        let got = girsanov_weight(&path, &drift, 1.0).unwrap();
        let w_end = path.w[path.steps];
        let want = (c * w_end - 0.5 * c * c * 1.0).exp();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn horizon_beyond_path_is_an_error() {
        let path = sample_path(3, 0, 100, 50); // path ends at 0.5
        let drift = DriftSpec::constant(vec![0.1]).unwrap();
        assert!(matches!(
            girsanov_weight(&path, &drift, 1.0),
            Err(Error::HorizonExceedsPath { .. })
        ));
    }

    #[test]
    fn accumulator_matches_path_weight() {
        let field = FieldSpec::constant(vec![0.2]).unwrap();
        let drift = DriftSpec::constant(vec![0.4]).unwrap();
        let p = ChainParams {
            dim: 1,
            resolution: 64,
            steps: 64,
            horizon: 1.0,
            start: vec![2],
            seed: 5,
        };
        let run = run_chain_with(&p, &field, 1, false);
        let path = rescale(&run);
        let want = log_girsanov_weight(&path, &drift, 1.0).unwrap();

        let mut acc = WeightAccumulator::new(&drift, 64);
        for k in 0..64 {
            let dw = [run.walk_state(k + 1)[0] - run.walk_state(k)[0]];
            acc.step(run.state(k), &dw);
        }
        assert!((acc.log_weight() - want).abs() < 1e-12);
    }

    #[test]
    fn shifted_brownian_round_trip() {
        let path = sample_path(4, 7, 100, 100);
        let drift = DriftSpec::constant(vec![0.9]).unwrap();
        let shifted = shifted_brownian(&path, &drift);
        // Zero drift is the identity.
        let zero = DriftSpec::zero(1);
        assert_eq!(shifted_brownian(&path, &zero), path.w);
        // Constant drift subtracts c * floor(nt)/n.
        for k in 0..=path.steps {
            let want = path.w[k] - 0.9 * k as f64 / 100.0;
            assert!((shifted[k] - want).abs() < 1e-12);
        }
        // Shifting by -c along the same path returns W exactly.
        let neg = DriftSpec::constant(vec![-0.9]).unwrap();
        let back = shifted_brownian(&path, &neg);
        for k in 0..=path.steps {
            assert!((shifted[k] + back[k] - 2.0 * path.w[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_expectation_reduces_to_plain_mean_for_unit_weights() {
        let values: Vec<f64> = (1..=16).map(|v| v as f64).collect();
        let weights = vec![1.0; 16];
        let est = weighted_expectation(&weights, &values).unwrap();
        assert!((est.estimate - 8.5).abs() < 1e-15);
        assert!((est.ess - 16.0).abs() < 1e-12);

        // Constant functional has zero spread.
        let ones = vec![1.0; 16];
        let est = weighted_expectation(&weights, &ones).unwrap();
        assert!((est.estimate - 1.0).abs() < 1e-15);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn path_functional_form_matches_numeric_form() {
        let drift = DriftSpec::constant(vec![0.25]).unwrap();
        let samples: Vec<WeightedSample> = (0..12)
            .map(|j| {
                let path = sample_path(6, j, 100, 100);
                let weight = girsanov_weight(&path, &drift, 1.0).unwrap();
                WeightedSample { path, weight }
            })
            .collect();
        let terminal = |p: &ScaledPath| p.u(p.steps);
        let est = weighted_expectation_paths(&samples, terminal).unwrap();
        let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
        let values: Vec<f64> = samples.iter().map(|s| terminal(&s.path)).collect();
        let direct = weighted_expectation(&weights, &values).unwrap();
        assert_eq!(est, direct);
    }

    #[test]
    fn degenerate_weights_rejected() {
        let mut weights = vec![1e-30; 100];
        weights[0] = 1.0;
        let values = vec![0.0; 100];
        assert!(matches!(
            weighted_expectation(&weights, &values),
            Err(Error::DegenerateWeights { .. })
        ));
        assert!(matches!(weighted_expectation(&[], &[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn mean_weight_is_one_within_monte_carlo_error() {
        let drift = DriftSpec::constant(vec![0.5]).unwrap();
        let field = FieldSpec::constant(vec![0.0]).unwrap();
        let n = 400u64;
        let p = ChainParams {
            dim: 1,
            resolution: n,
            steps: 400,
            horizon: 1.0,
            start: vec![0],
            seed: 11,
        };
        let m = 20_000;
        let weights: Vec<f64> = (0..m)
            .map(|j| {
                let run = run_chain_with(&p, &field, j, false);
                let mut acc = WeightAccumulator::new(&drift, n);
                for k in 0..p.steps {
                    let dw = [run.walk_state(k + 1)[0] - run.walk_state(k)[0]];
                    acc.step(run.state(k), &dw);
                }
                acc.weight()
            })
            .collect();
        let (mean, stderr) = crate::stats::mean_stderr(&weights);
        assert!(
            (mean - 1.0).abs() <= 3.0 * stderr,
            "mean {mean}, stderr {stderr}"
        );
    }
}
