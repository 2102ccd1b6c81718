//! Diffusion rescaling, the one-dimensional Skorohod map and local-time
//! estimators on grid paths.
//!
//! All paths are piecewise constant on the uniform grid `t_k = k/n` with
//! left-limit (`floor(nt)`) indexing; linear interpolation is never used in
//! estimators.

use crate::chain::LatticeRun;
use crate::config::grid_index;
use crate::error::{Error, Result};
use crate::field::SurfaceField;

/// Rescaled lattice path bundle on the grid `t_k = k / n`, `k = 0..=steps`.
#[derive(Clone, Debug)]
pub struct ScaledPath {
    pub dim: usize,
    pub resolution: u64,
    pub horizon: f64,
    pub steps: usize,
    /// Row-major `(steps + 1) x dim`.
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub local_time: Vec<f64>,
    pub sign_walk: Vec<f64>,
    pub coin_walk: Vec<f64>,
    /// Coupling remainder `X - x0 - W - sum b dL`, present with diagnostics.
    pub remainder: Option<Vec<f64>>,
}

impl ScaledPath {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    /// First coordinate of the rescaled chain.
    pub fn u(&self, k: usize) -> f64 {
        self.x[k * self.dim]
    }

    pub fn u_path(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.u(k)).collect()
    }

    pub fn grid_index(&self, t: f64) -> usize {
        grid_index(self.resolution, t, self.steps)
    }

    /// Piecewise-constant evaluation of a per-grid scalar series.
    pub fn value_at(series: &[f64], n: u64, t: f64) -> f64 {
        series[grid_index(n, t, series.len() - 1)]
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.resolution as f64
    }
}

/// Rescales a lattice run by `1/sqrt(n)` in space and `1/n` in time.
pub fn rescale(run: &LatticeRun) -> ScaledPath {
    rescale_inner(run, None)
}

/// As [`rescale`], additionally computing the coupling remainder, which needs
/// the surface coefficients along the path.
pub fn rescale_with_remainder<F: SurfaceField>(run: &LatticeRun, field: &F) -> ScaledPath {
    rescale_inner(run, Some(field as &dyn SurfaceField))
}

fn rescale_inner(run: &LatticeRun, field: Option<&dyn SurfaceField>) -> ScaledPath {
    let d = run.dim;
    let root = (run.resolution as f64).sqrt();
    let inv = 1.0 / root;
    let scale_i = |v: &[i64]| v.iter().map(|&c| c as f64 * inv).collect::<Vec<f64>>();
    let x = scale_i(&run.x);
    let w = scale_i(&run.w);
    let local_time = run.local_time.iter().map(|&c| c as f64 * inv).collect::<Vec<f64>>();
    let sign_walk = scale_i(&run.sign_walk);
    let coin_walk = scale_i(&run.coin_walk);
    let remainder = field.map(|f| {
        let mut rem = vec![0.0; (run.steps + 1) * d];
        let mut coeff = vec![0.0; d];
        let mut drift_sum = vec![0.0; d];
        let mut xi = vec![0.0; d - 1];
        for k in 0..=run.steps {
            for i in 0..d {
                rem[k * d + i] = x[k * d + i] - x[i] - w[k * d + i] - drift_sum[i];
            }
            if k < run.steps && run.u(k) == 0 {
                for i in 1..d {
                    xi[i - 1] = run.state(k)[i] as f64 * inv;
                }
                f.eval(&xi, &mut coeff);
                for i in 0..d {
                    // dL at a surface step is 1/sqrt(n).
                    drift_sum[i] += coeff[i] * inv;
                }
            }
        }
        rem
    });
    ScaledPath {
        dim: d,
        resolution: run.resolution,
        horizon: run.horizon,
        steps: run.steps,
        x,
        w,
        local_time,
        sign_walk,
        coin_walk,
        remainder,
    }
}

/// Reflection map on grid paths: `f = g - min(running_min(g), 0)` together
/// with the minimal regulator `h`, so `f = g + h >= 0`, `h` is nondecreasing
/// with `h(0) = 0`, and `h` increases only while `f` sits at zero.
pub fn skorohod_map(g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut f = Vec::with_capacity(g.len());
    let mut h = Vec::with_capacity(g.len());
    let mut run_min = 0.0f64;
    for &v in g {
        run_min = run_min.min(v);
        let reg = -run_min.min(0.0);
        h.push(reg);
        f.push(v + reg);
    }
    (f, h)
}

/// Reflected path plus regulator for a start `y1 >= 0` driven by `b`.
#[derive(Clone, Debug)]
pub struct ReflectedPair {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

/// Explicit solution of the reflection problem: `S = y1 + B - min(y1 + B, 0)`
/// running, `V = S - y1 - B`.
pub fn reflected_pair(y1: f64, b: &[f64]) -> Result<ReflectedPair> {
    if y1 < 0.0 {
        return Err(Error::NegativeStart(y1));
    }
    let shifted: Vec<f64> = b.iter().map(|&v| y1 + v).collect();
    let mut run_min = f64::INFINITY;
    let mut s = Vec::with_capacity(b.len());
    let mut v = Vec::with_capacity(b.len());
    for (k, &g) in shifted.iter().enumerate() {
        run_min = run_min.min(g);
        let si = g - run_min.min(0.0);
        s.push(si);
        v.push(si - y1 - b[k]);
    }
    Ok(ReflectedPair { s, v })
}

/// Symmetric local time at zero from the discrete Tanaka sum:
/// `L_m = |Z_m| - |Z_0| - sum_{k<m} sgn(Z_k) (Z_{k+1} - Z_k)`, `sgn(0) = 0`.
pub fn tanaka_local_time(z: &[f64]) -> Vec<f64> {
    let mut l = Vec::with_capacity(z.len());
    let mut stoch = 0.0;
    l.push(0.0);
    for k in 1..z.len() {
        stoch += sign(z[k - 1]) * (z[k] - z[k - 1]);
        l.push(z[k].abs() - z[0].abs() - stoch);
    }
    l
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Occupation-time estimator of the symmetric local time with two-sided
/// window `(-eps, eps)` and left-endpoint sampling:
/// `L_m = (1 / 2 eps) * sum_{k<m} 1{|Z_k| < eps} dt`.
pub fn occupation_local_time(z: &[f64], dt: f64, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEps(eps));
    }
    let unit = dt / (2.0 * eps);
    let mut l = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    l.push(0.0);
    for k in 1..z.len() {
        if z[k - 1].abs() < eps {
            acc += unit;
        }
        l.push(acc);
    }
    Ok(l)
}

/// One-sided local times: `L+` from the positive-part Tanaka sum, `L-` as
/// `L+` of the negated path. Their sum telescopes to the symmetric estimator.
pub fn one_sided_local_times(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let plus = one_sided(z, 1.0);
    let minus = one_sided(z, -1.0);
    (plus, minus)
}

fn one_sided(z: &[f64], orient: f64) -> Vec<f64> {
    let pos = |v: f64| (orient * v).max(0.0);
    let mut l = Vec::with_capacity(z.len());
    let mut stoch = 0.0;
    l.push(0.0);
    for k in 1..z.len() {
        if orient * z[k - 1] > 0.0 {
            stoch += orient * (z[k] - z[k - 1]);
        }
        l.push(pos(z[k]) - pos(z[0]) - stoch);
    }
    l
}
