//! Two-particle skew-elastic collision model.
//!
//! Two Brownian particles on the line interact through local-time kicks at
//! collisions. The pair is simulated by transforming to the gap/center
//! coordinates `(Y, U) = (X1 - X2, X1 + X2)`, which solve a planar skew
//! equation with unit diffusion per coordinate, running the lattice engine on
//! `(Y, U)`, and transforming back. The particle equations carry `1/sqrt(2)`
//! diffusion; after the transform the driving noises are standard, so the
//! engine runs with unit diffusion and all scaling lives in the transforms.

use serde::{Deserialize, Serialize};

use crate::chain::{run_chain_with, ChainParams};
use crate::config::round_ties_to_zero;
use crate::error::{ConfigIssue, Error, Result};
use crate::field::{DriftField, FieldParams, ScalarField2, SurfaceField};
use crate::scale::rescale;

/// JSON form of the collision section; same family encoding as `field`.
/// Scalar coefficients on the plane, so `frequency` has two entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<FieldParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<FieldParams>,
    pub zeta1: FieldParams,
    pub zeta2: FieldParams,
    pub eta1: FieldParams,
    pub eta2: FieldParams,
}

/// Validated collision model: drifts `k1, k2` and local-time coefficients
/// `zeta1, zeta2, eta1, eta2`, all bounded Lipschitz scalar fields on the
/// plane.
#[derive(Clone, Debug, Serialize)]
pub struct CollisionModel {
    pub k1: ScalarField2,
    pub k2: ScalarField2,
    pub zeta1: ScalarField2,
    pub zeta2: ScalarField2,
    pub eta1: ScalarField2,
    pub eta2: ScalarField2,
    #[serde(skip)]
    params: CollisionParams,
}

impl CollisionModel {
    pub fn new(params: CollisionParams) -> std::result::Result<Self, Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        let mut build = |p: &Option<FieldParams>, what: &str| match p {
            None => ScalarField2::zero(),
            Some(p) => match ScalarField2::new(p.clone(), what) {
                Ok(f) => f,
                Err(mut errs) => {
                    issues.append(&mut errs);
                    ScalarField2::zero()
                }
            },
        };
        let k1 = build(&params.k1, "collision.k1");
        let k2 = build(&params.k2, "collision.k2");
        let zeta1 = build(&Some(params.zeta1.clone()), "collision.zeta1");
        let zeta2 = build(&Some(params.zeta2.clone()), "collision.zeta2");
        let eta1 = build(&Some(params.eta1.clone()), "collision.eta1");
        let eta2 = build(&Some(params.eta2.clone()), "collision.eta2");
        if issues.is_empty() {
            Ok(CollisionModel { k1, k2, zeta1, zeta2, eta1, eta2, params })
        } else {
            Err(issues)
        }
    }

    /// Frictionless motion: all collision coefficients equal one, so the
    /// local-time terms vanish from both particle equations.
    pub fn frictionless() -> Self {
        let one = FieldParams::Constant { value: vec![1.0] };
        CollisionModel::new(CollisionParams {
            k1: None,
            k2: None,
            zeta1: one.clone(),
            zeta2: one.clone(),
            eta1: one.clone(),
            eta2: one,
        })
        .expect("constant model is valid")
    }

    /// Perfect reflection: the first particle bounces off the second, which
    /// does not feel the collisions at all.
    pub fn perfect_reflection() -> Self {
        let one = FieldParams::Constant { value: vec![1.0] };
        let neg = FieldParams::Constant { value: vec![-1.0] };
        CollisionModel::new(CollisionParams {
            k1: None,
            k2: None,
            zeta1: neg.clone(),
            zeta2: one.clone(),
            eta1: neg,
            eta2: one,
        })
        .expect("constant model is valid")
    }

    pub fn params(&self) -> &CollisionParams {
        &self.params
    }

    pub fn has_drift(&self) -> bool {
        !(self.k1.is_zero() && self.k2.is_zero())
    }
}

/// Derived coefficient bundle at one point of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficients {
    pub zeta: f64,
    pub eta: f64,
    pub zeta_bar: f64,
    pub eta_bar: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Evaluates the derived coefficients at `x`, checking the admissibility
/// constraints pointwise.
pub fn derive_coefficients(model: &CollisionModel, x: [f64; 2]) -> Result<Coefficients> {
    let z1 = model.zeta1.eval(x);
    let z2 = model.zeta2.eval(x);
    let e1 = model.eta1.eval(x);
    let e2 = model.eta2.eval(x);
    let zeta = 1.0 + 0.5 * (z1 - z2);
    let eta = 1.0 - 0.5 * (e1 - e2);
    let zeta_bar = 1.0 - 0.5 * (z1 + z2);
    let eta_bar = 1.0 - 0.5 * (e1 + e2);
    let violation = |detail: String| Error::ConstraintViolation { detail, x1: x[0], x2: x[1] };
    if zeta < 0.0 {
        return Err(violation(format!("zeta = {zeta} < 0")));
    }
    if eta < 0.0 {
        return Err(violation(format!("eta = {eta} < 0")));
    }
    if zeta + eta == 0.0 {
        return Err(violation("zeta + eta = 0".to_string()));
    }
    let alpha = eta / (eta + zeta);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(violation(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(Coefficients {
        zeta,
        eta,
        zeta_bar,
        eta_bar,
        alpha,
        beta1: 2.0 * alpha - 1.0,
        beta2: zeta_bar * alpha + eta_bar * (1.0 - alpha),
    })
}

/// Inverse of the gap/center transform: `psi(u, y) = ((u+y)/2, (u-y)/2)`.
pub fn psi(u: f64, y: f64) -> [f64; 2] {
    [0.5 * (u + y), 0.5 * (u - y)]
}

/// Surface-field form of a collision model for the planar engine with state
/// `(Y, U)`: coordinate 1 is the gap (the skew coordinate), coordinate 2 the
/// center. The field depends only on the center coordinate evaluated on the
/// collision set, `b_i(u) = beta_i(psi(u, 0))`.
///
/// Construct through [`to_skew_form`]; admissibility on the reachable lattice
/// is checked by [`validate_reachable`] / [`simulate_particles`] before any
/// run, so evaluation itself is infallible.
#[derive(Clone, Debug)]
pub struct SkewForm {
    model: CollisionModel,
}

pub fn to_skew_form(model: &CollisionModel) -> SkewForm {
    SkewForm { model: model.clone() }
}

impl SkewForm {
    /// Local-time coefficients of the `(Y, U)` system at center `u`.
    pub fn b(&self, u: f64) -> Result<[f64; 2]> {
        let c = derive_coefficients(&self.model, psi(u, 0.0))?;
        Ok([c.beta1, c.beta2])
    }

    /// Split weight `alpha` at center `u`.
    pub fn alpha(&self, u: f64) -> Result<f64> {
        Ok(derive_coefficients(&self.model, psi(u, 0.0))?.alpha)
    }

    pub fn model(&self) -> &CollisionModel {
        &self.model
    }

    /// Drift of the `(Y, U)` system, `(k1 - k2, k1 + k2)` composed with the
    /// inverse transform.
    pub fn drift(&self) -> SkewFormDrift<'_> {
        SkewFormDrift { model: &self.model }
    }

    /// Upper bound on the per-step transverse displacement of the engine.
    fn max_center_shift(&self) -> i64 {
        let zb = 1.0 + 0.5 * (self.model.zeta1.sup_bound() + self.model.zeta2.sup_bound());
        let eb = 1.0 + 0.5 * (self.model.eta1.sup_bound() + self.model.eta2.sup_bound());
        zb.max(eb).ceil() as i64 + 2
    }
}

impl SurfaceField for SkewForm {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, xi: &[f64], out: &mut [f64]) {
        let c = derive_coefficients(&self.model, psi(xi[0], 0.0))
            .expect("collision model validated on the reachable lattice");
        out[0] = c.beta1;
        out[1] = c.beta2;
    }

    fn sup_bound(&self) -> f64 {
        let b2 = self.max_center_shift() as f64 - 2.0;
        (1.0 + b2 * b2).sqrt()
    }
}

/// Drift adapter for the `(Y, U)` engine state.
pub struct SkewFormDrift<'m> {
    model: &'m CollisionModel,
}

impl DriftField for SkewFormDrift<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let p = psi(x[1], x[0]);
        let k1 = self.model.k1.eval(p);
        let k2 = self.model.k2.eval(p);
        out[0] = k1 - k2;
        out[1] = k1 + k2;
    }

    fn sup_bound(&self) -> f64 {
        self.model.k1.sup_bound() + self.model.k2.sup_bound()
    }

    fn is_zero(&self) -> bool {
        !self.model.has_drift()
    }
}

/// Scale parameters of a particle simulation.
#[derive(Clone, Copy, Debug)]
pub struct ParticleScale {
    pub resolution: u64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Engine parameters for a particle pair started at `x0`, with the collision
/// model checked on every center value the chain can reach.
pub fn engine_params(
    form: &SkewForm,
    x0: [f64; 2],
    scale: &ParticleScale,
) -> Result<ChainParams> {
    let root = (scale.resolution as f64).sqrt();
    let y0 = x0[0] - x0[1];
    let u0 = x0[0] + x0[1];
    let start = vec![round_ties_to_zero(y0 * root), round_ties_to_zero(u0 * root)];
    let steps = crate::config::step_count(scale.resolution, scale.horizon);
    let params = ChainParams {
        dim: 2,
        resolution: scale.resolution,
        steps,
        horizon: scale.horizon,
        start,
        seed: scale.seed,
    };
    validate_reachable(form, &params)?;
    Ok(params)
}

/// Checks the admissibility constraints at every center lattice point the
/// chain can visit. The surface field is evaluated only on this finite set,
/// so a pass here makes engine evaluation infallible.
pub fn validate_reachable(form: &SkewForm, params: &ChainParams) -> Result<()> {
    let max_shift = form.max_center_shift();
    let reach = params.steps as i64 * max_shift;
    let root = (params.resolution as f64).sqrt();
    let center = params.start[1];
    for v in (center - reach)..=(center + reach) {
        derive_coefficients(&form.model, psi(v as f64 / root, 0.0))?;
    }
    Ok(())
}

/// One simulated particle pair on the grid `t_k = k/n`.
#[derive(Clone, Debug)]
pub struct ParticlePath {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Recovered driving Brownian motions of the particle equations.
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    /// Symmetric local time of the gap at zero.
    pub local: Vec<f64>,
    pub lplus: Vec<f64>,
    pub lminus: Vec<f64>,
    /// Drift weight (one when both drifts vanish).
    pub weight: f64,
}

/// Particle ensemble with full path recording; intended for batch output at
/// moderate path counts. Large ensembles should fold over the engine instead.
pub struct ParticleEnsemble {
    pub resolution: u64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: Vec<ParticlePath>,
}

/// Simulates the particle pair by running the planar engine on `(Y, U)` and
/// transforming back.
pub fn simulate_particles(
    model: &CollisionModel,
    x0: [f64; 2],
    scale: &ParticleScale,
) -> Result<ParticleEnsemble> {
    let form = to_skew_form(model);
    let params = engine_params(&form, x0, scale)?;
    let mut paths = Vec::with_capacity(scale.paths);
    for j in 0..scale.paths as u64 {
        paths.push(particle_path(&form, &params, j)?);
    }
    Ok(ParticleEnsemble {
        resolution: scale.resolution,
        horizon: scale.horizon,
        steps: params.steps,
        paths,
    })
}

/// Builds one fully recorded particle path from engine path `j`. `params`
/// must come from [`engine_params`], which validates the reachable lattice.
pub fn particle_path(form: &SkewForm, params: &ChainParams, j: u64) -> Result<ParticlePath> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let run = run_chain_with(params, form, j, false);
    let path = rescale(&run);
    let grid = params.steps + 1;
    let mut x1 = Vec::with_capacity(grid);
    let mut x2 = Vec::with_capacity(grid);
    let mut b1 = Vec::with_capacity(grid);
    let mut b2 = Vec::with_capacity(grid);
    let mut alpha = Vec::with_capacity(params.steps);
    for k in 0..grid {
        let s = path.state(k);
        let (y, u) = (s[0], s[1]);
        x1.push(0.5 * (u + y));
        x2.push(0.5 * (u - y));
        let w = &path.w[k * 2..k * 2 + 2];
        b1.push((w[1] + w[0]) / sqrt2);
        b2.push((w[1] - w[0]) / sqrt2);
        if k < params.steps {
            alpha.push(form.alpha(s[1])?);
        }
    }
    let (lplus, lminus) = split_local_times(&path.local_time, &alpha);
    let weight = if form.model.has_drift() {
        crate::girsanov::girsanov_weight(&path, &form.drift(), params.horizon)?
    } else {
        1.0
    };
    Ok(ParticlePath {
        x1,
        x2,
        b1,
        b2,
        local: path.local_time,
        lplus,
        lminus,
        weight,
    })
}

/// Splits a nondecreasing local time into one-sided parts with left-point
/// split weights: `dL+ = alpha dL`, `dL- = (1 - alpha) dL`. The parts sum
/// back to the input exactly.
pub fn split_local_times(local: &[f64], alpha: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(alpha.len() + 1, local.len());
    let mut lp = Vec::with_capacity(local.len());
    let mut lm = Vec::with_capacity(local.len());
    lp.push(0.0);
    lm.push(0.0);
    for k in 0..alpha.len() {
        let dl = local[k + 1] - local[k];
        lp.push(lp[k] + alpha[k] * dl);
        lm.push(lm[k] + (1.0 - alpha[k]) * dl);
    }
    (lp, lm)
}
