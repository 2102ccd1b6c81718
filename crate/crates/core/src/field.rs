//! Parametric coefficient fields.
//!
//! The engine needs two kinds of coefficients: a surface field `b` defined on
//! the hyperplane `{x_1 = 0}` (input dimension `d - 1`, output dimension `d`,
//! first output coordinate confined to `[-1, 1]`) and a drift field `a`
//! defined on all of `R^d`. Both are drawn from a closed parametric family so
//! configs stay serializable and Lipschitz constants stay computable. Library
//! callers that need other shapes can implement [`SurfaceField`] or
//! [`DriftField`] directly; the JSON config only exposes the families below.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigCode, ConfigIssue};

/// Closed family of bounded Lipschitz functions `R^p -> R^q`.
///
/// `SigmoidAffine` evaluates coordinate `i` as
/// `offset[i] + amplitude[i] * tanh(frequency . input)`, with one frequency
/// vector shared across output coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", deny_unknown_fields)]
pub enum FieldParams {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    SigmoidAffine {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
    },
}

impl FieldParams {
    fn check_shape(&self, in_dim: usize, out_dim: usize, what: &str) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut shape = |len: usize, want: usize, name: &str| {
            if len != want {
                issues.push(ConfigIssue::new(
                    ConfigCode::FieldShape,
                    format!("{what}: {name} has length {len}, expected {want}"),
                ));
            }
        };
        match self {
            FieldParams::Zero => {}
            FieldParams::Constant { value } => shape(value.len(), out_dim, "value"),
            FieldParams::SigmoidAffine { offset, amplitude, frequency } => {
                shape(offset.len(), out_dim, "offset");
                shape(amplitude.len(), out_dim, "amplitude");
                shape(frequency.len(), in_dim, "frequency");
            }
        }
        for v in self.raw_values() {
            if !v.is_finite() {
                issues.push(ConfigIssue::new(
                    ConfigCode::NonFinite,
                    format!("{what}: parameter {v} is not finite"),
                ));
                break;
            }
        }
        issues
    }

    fn raw_values(&self) -> impl Iterator<Item = f64> + '_ {
        let slices: Vec<&[f64]> = match self {
            FieldParams::Zero => vec![],
            FieldParams::Constant { value } => vec![value],
            FieldParams::SigmoidAffine { offset, amplitude, frequency } => {
                vec![offset, amplitude, frequency]
            }
        };
        slices.into_iter().flatten().copied()
    }

    /// Writes the evaluation at `input` into `out`.
    fn eval(&self, input: &[f64], out: &mut [f64]) {
        match self {
            FieldParams::Zero => out.fill(0.0),
            FieldParams::Constant { value } => out.copy_from_slice(value),
            FieldParams::SigmoidAffine { offset, amplitude, frequency } => {
                let s = dot(frequency, input).tanh();
                for (o, (c, a)) in out.iter_mut().zip(offset.iter().zip(amplitude)) {
                    *o = c + a * s;
                }
            }
        }
    }

    /// Upper bound on the Euclidean norm of the evaluated vector.
    fn sup_bound(&self) -> f64 {
        match self {
            FieldParams::Zero => 0.0,
            FieldParams::Constant { value } => norm(value),
            FieldParams::SigmoidAffine { offset, amplitude, .. } => {
                let mut s = 0.0;
                for (c, a) in offset.iter().zip(amplitude) {
                    s += (c.abs() + a.abs()).powi(2);
                }
                s.sqrt()
            }
        }
    }

    /// Per-coordinate bound `sup_x |f_i(x)|`.
    fn coord_bound(&self, i: usize) -> f64 {
        match self {
            FieldParams::Zero => 0.0,
            FieldParams::Constant { value } => value[i].abs(),
            FieldParams::SigmoidAffine { offset, amplitude, .. } => {
                offset[i].abs() + amplitude[i].abs()
            }
        }
    }

    /// Lipschitz constant in Euclidean norms (tanh is 1-Lipschitz).
    fn lipschitz_bound(&self) -> f64 {
        match self {
            FieldParams::Zero | FieldParams::Constant { .. } => 0.0,
            FieldParams::SigmoidAffine { amplitude, frequency, .. } => {
                norm(amplitude) * norm(frequency)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Surface coefficient consumed by the lattice chain. Evaluated at the
/// rescaled transverse position, so `xi` has length `dim() - 1`.
pub trait SurfaceField: Sync {
    /// Output dimension `d`.
    fn dim(&self) -> usize;
    /// Writes the `d` coefficients at transverse position `xi` into `out`.
    fn eval(&self, xi: &[f64], out: &mut [f64]);
    /// Upper bound on the Euclidean norm, used for residual diagnostics.
    fn sup_bound(&self) -> f64;
}

/// Bounded drift consumed by the exponential reweighting layer.
pub trait DriftField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
    fn sup_bound(&self) -> f64;
    /// True when the drift is identically zero; weights are then exactly one.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Validated surface field `b : R^(d-1) -> R^d` with `b_1` in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSpec {
    params: FieldParams,
    dim: usize,
}

impl FieldSpec {
    /// Validates shapes and the first-coordinate range. The range check is
    /// sufficient rather than sharp: `Constant` needs `|c_1| <= 1` and
    /// `SigmoidAffine` needs `|c_1| + |A_1| <= 1`, both checkable without
    /// global optimization.
    pub fn new(params: FieldParams, dim: usize) -> Result<Self, Vec<ConfigIssue>> {
        let mut issues = params.check_shape(dim.saturating_sub(1), dim, "field");
        if issues.is_empty() && params.coord_bound(0) > 1.0 {
            issues.push(ConfigIssue::new(
                ConfigCode::B1Range,
                format!(
                    "field: first coordinate bound {} exceeds 1",
                    params.coord_bound(0)
                ),
            ));
        }
        if issues.is_empty() {
            Ok(FieldSpec { params, dim })
        } else {
            Err(issues)
        }
    }

    pub fn zero(dim: usize) -> Self {
        FieldSpec { params: FieldParams::Zero, dim }
    }

    pub fn constant(value: Vec<f64>) -> Result<Self, Vec<ConfigIssue>> {
        let dim = value.len();
        FieldSpec::new(FieldParams::Constant { value }, dim)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    /// Declared Lipschitz constant (Euclidean norms).
    pub fn lipschitz_bound(&self) -> f64 {
        self.params.lipschitz_bound()
    }

    /// Allocating convenience wrapper around [`SurfaceField::eval`].
    pub fn eval_vec(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(xi, &mut out);
        out
    }
}

impl SurfaceField for FieldSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(xi.len() + 1, self.dim);
        debug_assert_eq!(out.len(), self.dim);
        self.params.eval(xi, out);
    }

    fn sup_bound(&self) -> f64 {
        self.params.sup_bound()
    }
}

/// Validated drift `a : R^d -> R^d`; bounded, no range constraint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSpec {
    params: FieldParams,
    dim: usize,
}

impl DriftSpec {
    pub fn new(params: FieldParams, dim: usize) -> Result<Self, Vec<ConfigIssue>> {
        let issues = params.check_shape(dim, dim, "drift");
        if issues.is_empty() {
            Ok(DriftSpec { params, dim })
        } else {
            Err(issues)
        }
    }

    pub fn zero(dim: usize) -> Self {
        DriftSpec { params: FieldParams::Zero, dim }
    }

    pub fn constant(value: Vec<f64>) -> Result<Self, Vec<ConfigIssue>> {
        let dim = value.len();
        DriftSpec::new(FieldParams::Constant { value }, dim)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, &mut out);
        out
    }
}

impl DriftField for DriftSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.params.eval(x, out);
    }

    fn sup_bound(&self) -> f64 {
        self.params.sup_bound()
    }

    fn is_zero(&self) -> bool {
        matches!(self.params, FieldParams::Zero)
    }
}

/// Scalar coefficient `R^2 -> R` used by the collision model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarField2 {
    params: FieldParams,
}

impl ScalarField2 {
    pub fn new(params: FieldParams, what: &str) -> Result<Self, Vec<ConfigIssue>> {
        let issues = params.check_shape(2, 1, what);
        if issues.is_empty() {
            Ok(ScalarField2 { params })
        } else {
            Err(issues)
        }
    }

    pub fn zero() -> Self {
        ScalarField2 { params: FieldParams::Zero }
    }

    pub fn constant(value: f64) -> Self {
        ScalarField2 { params: FieldParams::Constant { value: vec![value] } }
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut out = [0.0];
        self.params.eval(&x, &mut out);
        out[0]
    }

    pub fn sup_bound(&self) -> f64 {
        self.params.coord_bound(0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.params, FieldParams::Zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_evaluates_to_its_value() {
        let f = FieldSpec::constant(vec![0.5, 2.0]).unwrap();
        assert_eq!(f.eval_vec(&[3.7]), vec![0.5, 2.0]);
        assert_eq!(f.eval_vec(&[-100.0]), vec![0.5, 2.0]);
    }

    #[test]
    fn sigmoid_with_zero_frequency_reduces_to_offset() {
        let f = FieldSpec::new(
            FieldParams::SigmoidAffine {
                offset: vec![0.0, 0.0],
                amplitude: vec![1.0, 1.0],
                frequency: vec![0.0],
            },
            2,
        )
        .unwrap();
        assert_eq!(f.eval_vec(&[12.3]), vec![0.0, 0.0]);
    }

    #[test]
    fn sigmoid_saturates_to_offset_plus_amplitude() {
        let f = FieldSpec::new(
            FieldParams::SigmoidAffine {
                offset: vec![0.0, 0.0],
                amplitude: vec![0.5, 1.0],
                frequency: vec![1.0],
            },
            2,
        )
        .unwrap();
        let far = f.eval_vec(&[1e6]);
        assert!((far[0] - 0.5).abs() < 1e-12);
        assert!((far[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_coordinate_bound_enforced() {
        let err = FieldSpec::constant(vec![1.5]).unwrap_err();
        assert_eq!(err[0].code, ConfigCode::B1Range);

        let err = FieldSpec::new(
            FieldParams::SigmoidAffine {
                offset: vec![0.6],
                amplitude: vec![0.6],
                frequency: vec![],
            },
            1,
        )
        .unwrap_err();
        assert_eq!(err[0].code, ConfigCode::B1Range);
    }

    #[test]
    fn shape_mismatch_reported() {
        let err = FieldSpec::new(FieldParams::Constant { value: vec![0.0; 3] }, 2).unwrap_err();
        assert_eq!(err[0].code, ConfigCode::FieldShape);
    }

    #[test]
    fn non_finite_parameter_rejected() {
        let err = DriftSpec::new(
            FieldParams::Constant { value: vec![f64::NAN] },
            1,
        )
        .unwrap_err();
        assert!(err.iter().any(|i| i.code == ConfigCode::NonFinite));
    }

    #[test]
    fn json_encoding_matches_schema() {
        let p: FieldParams =
            serde_json::from_str(r#"{"family":"Constant","params":{"value":[0.5]}}"#).unwrap();
        assert_eq!(p, FieldParams::Constant { value: vec![0.5] });
        let p: FieldParams = serde_json::from_str(r#"{"family":"Zero"}"#).unwrap();
        assert_eq!(p, FieldParams::Zero);
        assert!(serde_json::from_str::<FieldParams>(
            r#"{"family":"Constant","params":{"value":[0.5],"extra":1}}"#
        )
        .is_err());
    }
}
