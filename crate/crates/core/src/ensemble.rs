//! Path-parallel ensemble driver.
//!
//! Paths are embarrassingly parallel: path `j` owns RNG stream `j`, folds run
//! per path, and results are collected in path-index order, so ensembles are
//! bit-identical regardless of worker count.

use rayon::prelude::*;

use crate::chain::{ChainParams, ChainWalker};
use crate::field::{DriftField, SurfaceField};
use crate::girsanov::WeightAccumulator;

/// Runs `paths` independent chains, folding each with `fold`.
pub fn fold_paths<F, R, G>(params: &ChainParams, field: &F, paths: usize, fold: G) -> Vec<R>
where
    F: SurfaceField + Sync,
    R: Send,
    G: Fn(u64, &mut ChainWalker<F>) -> R + Sync,
{
    (0..paths as u64)
        .into_par_iter()
        .map(|j| {
            let mut walker = ChainWalker::new(params, field, j);
            fold(j, &mut walker)
        })
        .collect()
}

/// Per-path summary used by the batch front end and the verification suites.
#[derive(Clone, Debug)]
pub struct PathRecord {
    /// Terminal lattice state.
    pub terminal: Vec<i64>,
    /// Rescaled local time at the marked grid indices.
    pub local_at: Vec<f64>,
    /// Exponential drift weight accumulated along the path.
    pub log_weight: f64,
}

/// Streams every path once, recording terminal state, rescaled local time at
/// `mark_steps` (grid indices, ascending) and the drift weight.
pub fn collect_records<F, D>(
    params: &ChainParams,
    field: &F,
    drift: &D,
    paths: usize,
    mark_steps: &[usize],
) -> Vec<PathRecord>
where
    F: SurfaceField + Sync,
    D: DriftField + Sync,
{
    debug_assert!(mark_steps.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(mark_steps.iter().all(|&k| k <= params.steps));
    let weighted = !drift.is_zero();
    let inv_root_n = 1.0 / (params.resolution as f64).sqrt();
    fold_paths(params, field, paths, |_, walker| {
        let mut acc = WeightAccumulator::new(drift, params.resolution);
        let mut local_at = Vec::with_capacity(mark_steps.len());
        let mut marks = mark_steps.iter().peekable();
        let mut state_buf = vec![0i64; params.dim];
        for k in 0..=params.steps {
            while marks.peek() == Some(&&k) {
                local_at.push(walker.local_count() as f64 * inv_root_n);
                marks.next();
            }
            if k < params.steps {
                if weighted {
                    state_buf.copy_from_slice(walker.state());
                    walker.advance();
                    acc.step(&state_buf, walker.last_dw());
                } else {
                    walker.advance();
                }
            }
        }
        PathRecord {
            terminal: walker.state().to_vec(),
            local_at,
            log_weight: acc.log_weight(),
        }
    })
}
