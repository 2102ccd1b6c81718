//! Verification suites.
//!
//! Each suite is an executable bundle of correctness checks: exact pathwise
//! identities, enumeration checks of one-step laws, Monte Carlo ensembles
//! against exact dynamic-programming laws, reference-law comparisons and the
//! collision-model properties. The batch front end runs them by name; the
//! acceptance tests run them at pinned scales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{one_step_law, run_chain_with, step_law, ChainParams};
use crate::collisions::{engine_params, to_skew_form, CollisionModel, ParticleScale};
use crate::config::{grid_index, SimConfig};
use crate::ensemble::{collect_records, fold_paths};
use crate::error::{Error, Result};
use crate::field::{DriftSpec, FieldParams, FieldSpec, SurfaceField};
use crate::girsanov::weighted_expectation;
use crate::oracle::{
    exact_chain_law, exact_law, normal_cdf, reflected_local_time_mean, sign_probability,
    skew_bm_reference_cdf,
};
use crate::scale::{rescale, tanaka_local_time};
use crate::stats::{
    cdf_sup_distance, dkw_band, ks_distance, ks_distance_discrete, ks_distance_two_sample,
    mean_stderr, EmpiricalLaw,
};

/// One named check with its outcome and a human-readable detail line.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of a whole suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport { suite: suite.to_string(), checks: Vec::new() }
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "pathwise",
    "one-step",
    "skew-law",
    "reflection",
    "girsanov",
    "collisions",
    "uniqueness-consistency",
];

/// Runs a suite by name against a validated config.
pub fn run_suite(name: &str, cfg: &SimConfig) -> Result<SuiteReport> {
    match name {
        "pathwise" => pathwise(cfg, 100),
        "one-step" => Ok(one_step(cfg.seed, 100)),
        "skew-law" => skew_law(cfg),
        "reflection" => Ok(reflection(cfg)),
        "girsanov" => girsanov(cfg),
        "collisions" => collisions(cfg),
        "uniqueness-consistency" => uniqueness_consistency(cfg),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

/// Violations of the exact lattice identities on one recorded run.
fn lattice_run_violations(
    run: &crate::chain::LatticeRun,
    sup_bound: f64,
) -> Vec<String> {
    let mut bad = Vec::new();
    let d = run.dim;
    let x1 = run.u(0).abs();
    for k in 0..=run.steps {
        if run.u(k).abs() != x1 + run.sign_walk[k] + run.local_time[k] as i64 {
            bad.push(format!("|U| identity fails at step {k}"));
            break;
        }
    }
    for k in 0..run.steps {
        let dzs = run.coin_walk[k + 1] - run.coin_walk[k];
        if dzs != 1 && dzs != -1 {
            bad.push(format!("coin walk increment {dzs} at step {k}"));
            break;
        }
    }
    'coupling: for k in 0..run.steps {
        for i in 0..d {
            let dw = run.walk_state(k + 1)[i] - run.walk_state(k)[i];
            if dw != 1 && dw != -1 {
                bad.push(format!("walk increment {dw} at step {k}"));
                break 'coupling;
            }
            if run.u(k) != 0 {
                let dx = run.state(k + 1)[i] - run.state(k)[i];
                if dx != dw {
                    bad.push(format!("coupling fails at step {k} coordinate {i}"));
                    break 'coupling;
                }
            }
        }
    }
    // Tanaka estimator on the rescaled first coordinate reproduces the
    // chain's own local time exactly.
    let path = rescale(run);
    let tan = tanaka_local_time(&path.u_path());
    for k in 0..=run.steps {
        if (tan[k] - path.local_time[k]).abs() > 1e-12 {
            bad.push(format!("tanaka mismatch {} at step {k}", tan[k] - path.local_time[k]));
            break;
        }
    }
    if let Some(res) = &run.surface_residuals {
        let bound = (3.0 + 2.0 * sup_bound) * (d as f64).sqrt();
        for (k, r) in res {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > bound {
                bad.push(format!("residual {norm} exceeds {bound} at step {k}"));
                break;
            }
        }
    }
    bad
}

/// Exact pathwise identities on `runs` recorded paths of the config.
pub fn pathwise(cfg: &SimConfig, runs: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("pathwise");
    let params = ChainParams::from_config(cfg);
    let sup = cfg.field.sup_bound();
    let mut failures = 0usize;
    let mut first = String::new();
    for j in 0..runs as u64 {
        let run = run_chain_with(&params, &cfg.field, j, true);
        let bad = lattice_run_violations(&run, sup);
        if !bad.is_empty() {
            failures += 1;
            if first.is_empty() {
                first = format!("path {j}: {}", bad.join("; "));
            }
        }
    }
    report.push(
        "pathwise-identities",
        failures == 0,
        if failures == 0 {
            format!("{runs} paths, {} steps each, all identities exact", params.steps)
        } else {
            format!("{failures}/{runs} paths violated identities; first: {first}")
        },
    );
    Ok(report)
}

/// Exact pathwise identities over random valid fields and dimensions.
pub fn pathwise_random_fields(seed: u64, runs: usize, dims: &[usize], n: u64) -> SuiteReport {
    let mut report = SuiteReport::new("pathwise");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    let mut first = String::new();
    let steps = n as usize;
    for r in 0..runs {
        let d = dims[r % dims.len()];
        let field = random_field(&mut rng, d);
        let start: Vec<i64> =
            (0..d).map(|_| (rng.random::<f64>() * 20.0 - 10.0).round() as i64).collect();
        let params = ChainParams {
            dim: d,
            resolution: n,
            steps,
            horizon: 1.0,
            start,
            seed: seed ^ r as u64,
        };
        let run = run_chain_with(&params, &field, r as u64, true);
        let bad = lattice_run_violations(&run, field.sup_bound());
        if !bad.is_empty() {
            failures += 1;
            if first.is_empty() {
                first = format!("run {r} (d = {d}): {}", bad.join("; "));
            }
        }
    }
    report.push(
        "pathwise-identities",
        failures == 0,
        if failures == 0 {
            format!("{runs} random-field runs over d in {dims:?}, all identities exact")
        } else {
            format!("{failures}/{runs} runs violated identities; first: {first}")
        },
    );
    report
}

fn random_field(rng: &mut ChaCha8Rng, d: usize) -> FieldSpec {
    let params = if rng.random::<f64>() < 0.5 {
        let mut value = vec![0.0; d];
        value[0] = rng.random::<f64>() * 2.0 - 1.0;
        for v in value.iter_mut().skip(1) {
            *v = rng.random::<f64>() * 6.0 - 3.0;
        }
        FieldParams::Constant { value }
    } else {
        let mut offset = vec![0.0; d];
        let mut amplitude = vec![0.0; d];
        offset[0] = rng.random::<f64>() * 1.6 - 0.8;
        amplitude[0] = rng.random::<f64>() * (1.0 - offset[0].abs());
        for i in 1..d {
            offset[i] = rng.random::<f64>() * 4.0 - 2.0;
            amplitude[i] = rng.random::<f64>() * 4.0 - 2.0;
        }
        let frequency = (0..d - 1).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        FieldParams::SigmoidAffine { offset, amplitude, frequency }
    };
    FieldSpec::new(params, d).expect("generated fields satisfy the range constraint")
}

/// Enumeration checks of the one-step law at random states and fields.
pub fn one_step(seed: u64, cases: usize) -> SuiteReport {
    let mut report = SuiteReport::new("one-step");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_mass = 0.0f64;
    let mut worst_mean = 0.0f64;
    let mut product_ok = true;
    let mut fair_ok = true;
    for case in 0..cases {
        let d = 1 + case % 3;
        let field = random_field(&mut rng, d);
        let n: u64 = [16, 144, 10_000][case % 3];
        let mut state: Vec<i64> =
            (0..d).map(|_| (rng.random::<f64>() * 12.0 - 6.0).round() as i64).collect();
        if case % 2 == 0 {
            state[0] = 0;
        } else if state[0] == 0 {
            state[0] = 1;
        }
        let atoms = one_step_law(&state, n, &field);
        let mass: f64 = atoms.iter().map(|(_, p)| p).sum();
        worst_mass = worst_mass.max((mass - 1.0).abs());
        // Conditional mean: the surface coefficient on the surface, zero off.
        let root = (n as f64).sqrt();
        let want = if state[0] == 0 {
            let xi: Vec<f64> = state[1..].iter().map(|&v| v as f64 / root).collect();
            field.eval_vec(&xi)
        } else {
            vec![0.0; d]
        };
        for i in 0..d {
            let mean: f64 = atoms.iter().map(|(inc, p)| inc[i] as f64 * p).sum();
            worst_mean = worst_mean.max((mean - want[i]).abs());
        }
        // Atom probabilities are the independent per-coordinate products.
        if state[0] == 0 {
            let xi: Vec<f64> = state[1..].iter().map(|&v| v as f64 / root).collect();
            let law = step_law(&xi, &field);
            for (inc, p) in &atoms {
                let mut expect = 1.0;
                for i in 0..d {
                    let up = inc[i] - law.shift[i] == 1;
                    expect *= if up { law.p_up[i] } else { law.p_down(i) };
                }
                if (p - expect).abs() > 1e-12 {
                    product_ok = false;
                }
            }
        } else {
            // Off the surface the signed first-coordinate increment is fair,
            // which makes the completed walk a simple walk.
            let plus: f64 = atoms
                .iter()
                .filter(|(inc, _)| inc[0] == state[0].signum())
                .map(|(_, p)| p)
                .sum();
            if (plus - 0.5).abs() > 1e-12 {
                fair_ok = false;
            }
        }
    }
    report.push(
        "unit-mass",
        worst_mass <= 1e-12,
        format!("worst |mass - 1| = {worst_mass:.3e} over {cases} cases"),
    );
    report.push(
        "conditional-mean",
        worst_mean <= 1e-12,
        format!("worst coordinatewise mean error = {worst_mean:.3e}"),
    );
    report.push(
        "product-form",
        product_ok,
        "surface atoms factor into per-coordinate probabilities".to_string(),
    );
    report.push(
        "fair-signed-step",
        fair_ok,
        "off-surface signed steps are fair coins".to_string(),
    );
    report
}

/// Monte Carlo terminal law against the exact law at the same resolution
/// (zero discretization bias), plus constant-skew reference checks.
pub fn skew_law(cfg: &SimConfig) -> Result<SuiteReport> {
    if cfg.dim != 1 {
        return Err(Error::Config(vec![crate::error::ConfigIssue::new(
            crate::error::ConfigCode::NonPositive,
            "skew-law suite requires dimension 1",
        )]));
    }
    let mut report = SuiteReport::new("skew-law");
    let params = ChainParams::from_config(cfg);
    let law = exact_chain_law(cfg, params.steps)?;
    report.push(
        "oracle-mass",
        (law.total_mass() - 1.0).abs() <= 1e-10,
        format!("exact law mass deviates by {:.3e}", (law.total_mass() - 1.0).abs()),
    );

    let zero_drift = DriftSpec::zero(1);
    let records = collect_records(&params, &cfg.field, &zero_drift, cfg.paths, &[]);
    let samples: Vec<f64> = records.iter().map(|r| r.terminal[0] as f64).collect();
    let emp = EmpiricalLaw::from_samples(samples)?;
    let atoms: Vec<(f64, f64)> =
        law.marginal(0).into_iter().map(|(v, p)| (v as f64, p)).collect();
    let ks = ks_distance_discrete(&emp, &atoms);
    let band = dkw_band(cfg.paths, 0.99);
    report.push(
        "sampler-vs-oracle",
        ks <= band,
        format!("KS = {ks:.6} vs DKW band {band:.6} at m = {}", cfg.paths),
    );

    // The closed-form reference applies to constant skews started at zero.
    let b1 = match cfg.field.params() {
        FieldParams::Zero => Some(0.0),
        FieldParams::Constant { value } => Some(value[0]),
        FieldParams::SigmoidAffine { .. } => None,
    };
    if let Some(b1) = b1 {
        if cfg.lattice_start[0] == 0 {
            let alpha = 0.5 * (1.0 + b1);
            let t_eff = params.steps as f64 / params.resolution as f64;
            let reference = skew_bm_reference_cdf(alpha, t_eff)?;
            let scaled = law.marginal_scaled(0);
            let sup = cdf_sup_distance(&scaled, |y| reference.cdf(y));
            report.push(
                "oracle-vs-reference",
                sup <= 0.01,
                format!("sup |oracle CDF - reference CDF| = {sup:.6} (limit 0.01)"),
            );
            let (below, at, above) = sign_probability(&law);
            let ratio = if above + below > 0.0 { above / (above + below) } else { alpha };
            report.push(
                "sign-ratio",
                (ratio - alpha).abs() <= 0.005,
                format!(
                    "p+/(p+ + p-) = {ratio:.6} vs {alpha:.3} (zero atom {at:.6})"
                ),
            );
        }
    }
    Ok(report)
}

/// Reflected case: the local time of the `b_1 = 1` chain from zero against
/// the folded-normal mean, plus the universal local-time bound.
pub fn reflection(cfg: &SimConfig) -> SuiteReport {
    let mut report = SuiteReport::new("reflection");
    let field = FieldSpec::constant(vec![1.0]).expect("b1 = 1 is valid");
    let n = cfg.resolution;
    let times = [0.25, 1.0, 4.0];
    let params = ChainParams {
        dim: 1,
        resolution: n,
        steps: crate::config::step_count(n, 4.0),
        horizon: 4.0,
        start: vec![0],
        seed: cfg.seed,
    };
    let marks: Vec<usize> =
        times.iter().map(|&t| grid_index(n, t, params.steps)).collect();
    let records =
        collect_records(&params, &field, &DriftSpec::zero(1), cfg.paths, &marks);
    for (i, &t) in times.iter().enumerate() {
        let locals: Vec<f64> = records.iter().map(|r| r.local_at[i]).collect();
        let (mean, stderr) = mean_stderr(&locals);
        if (t - 1.0).abs() < 1e-12 {
            let target = reflected_local_time_mean(1.0);
            let rel = (mean - target).abs() / target;
            report.push(
                "mean-local-time",
                rel <= 0.02,
                format!(
                    "E L(1) = {mean:.5} +- {stderr:.5} vs folded-normal {target:.5} ({:.2}%)",
                    100.0 * rel
                ),
            );
        }
        let bound = t.sqrt() + 3.0 * stderr;
        report.push(
            &format!("local-time-bound-t{t}"),
            mean <= bound,
            format!("E L({t}) = {mean:.5} <= sqrt(t) + 3 se = {bound:.5}"),
        );
    }
    report
}

/// Drift by reweighting: the weighted mean of the zero-skew chain under a
/// constant drift, against the exact Gaussian mean.
pub fn girsanov(cfg: &SimConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("girsanov");
    let mu = 0.3;
    let field = FieldSpec::zero(1);
    let drift = DriftSpec::constant(vec![mu]).expect("constant drift is valid");
    let n = cfg.resolution;
    let params = ChainParams {
        dim: 1,
        resolution: n,
        steps: crate::config::step_count(n, 1.0),
        horizon: 1.0,
        start: vec![0],
        seed: cfg.seed,
    };
    let records = collect_records(&params, &field, &drift, cfg.paths, &[]);
    let inv_root = 1.0 / (n as f64).sqrt();
    let weights: Vec<f64> = records.iter().map(|r| r.log_weight.exp()).collect();
    let values: Vec<f64> = records.iter().map(|r| r.terminal[0] as f64 * inv_root).collect();
    let est = weighted_expectation(&weights, &values)?;
    report.push(
        "weighted-terminal-mean",
        (est.estimate - mu).abs() <= 3.0 * est.stderr,
        format!(
            "weighted E X(1) = {:.5} +- {:.5} vs drifted mean {mu} (ESS {:.0})",
            est.estimate, est.stderr, est.ess
        ),
    );
    let (w_mean, w_se) = mean_stderr(&weights);
    report.push(
        "mean-weight",
        (w_mean - 1.0).abs() <= 3.0 * w_se,
        format!("mean weight = {w_mean:.6} +- {w_se:.6}"),
    );
    report.push(
        "effective-sample-size",
        est.ess >= 10.0,
        format!("ESS = {:.1} of m = {}", est.ess, cfg.paths),
    );
    Ok(report)
}

/// Collision checks: frictionless transparency and the reflected pair.
pub fn collisions(cfg: &SimConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("collisions");
    let scale = ParticleScale {
        resolution: cfg.resolution,
        horizon: 1.0,
        paths: cfg.paths,
        seed: cfg.seed,
    };
    frictionless_checks(&mut report, &scale)?;
    reflection_checks(&mut report, &scale)?;
    if let Some(model) = &cfg.collision {
        configured_model_checks(&mut report, model, cfg)?;
    }
    Ok(report)
}

fn frictionless_checks(report: &mut SuiteReport, scale: &ParticleScale) -> Result<()> {
    let model = CollisionModel::frictionless();
    let form = to_skew_form(&model);
    let params = engine_params(&form, [0.0, 0.0], scale)?;
    let inv_root = 1.0 / (scale.resolution as f64).sqrt();
    let results = fold_paths(&params, &form, scale.paths, |_, walker| {
        let mut max_coeff = 0.0f64;
        // alpha = 1/2 everywhere: the one-sided parts split evenly.
        let mut lp = 0.0;
        let mut lm = 0.0;
        for _ in 0..params.steps {
            let out = walker.advance();
            if out.on_surface {
                let b = walker.last_coeff();
                max_coeff = max_coeff.max(b[0].abs()).max(b[1].abs());
                lp += 0.5 * inv_root;
                lm += 0.5 * inv_root;
            }
        }
        let l = walker.local_count() as f64 * inv_root;
        let split_gap = (lp + lm - l).abs();
        let s = walker.state();
        let x1 = 0.5 * (s[1] + s[0]) as f64 * inv_root;
        (max_coeff, split_gap, x1)
    });
    let max_coeff = results.iter().map(|r| r.0).fold(0.0f64, f64::max);
    report.push(
        "frictionless-no-kicks",
        max_coeff == 0.0,
        format!("max |local-time coefficient| seen = {max_coeff:.3e}"),
    );
    let max_gap = results.iter().map(|r| r.1).fold(0.0f64, f64::max);
    report.push(
        "frictionless-split",
        max_gap <= 1e-10,
        format!("max |L+ + L- - L| = {max_gap:.3e}"),
    );
    // The center/gap transform halves the sum of two independent standard
    // coordinates: X1(t) ~ N(0, t/2).
    let t_eff = params.steps as f64 / scale.resolution as f64;
    let sigma = (0.5 * t_eff).sqrt();
    let emp = EmpiricalLaw::from_samples(results.iter().map(|r| r.2).collect())?;
    let ks = ks_distance(&emp, |x| normal_cdf(x / sigma));
    let band = dkw_band(scale.paths, 0.99);
    report.push(
        "frictionless-marginal",
        ks <= band,
        format!("KS(X1(1), N(0, {:.2})) = {ks:.6} vs band {band:.6}", 0.5 * t_eff),
    );
    Ok(())
}

fn reflection_checks(report: &mut SuiteReport, scale: &ParticleScale) -> Result<()> {
    let model = CollisionModel::perfect_reflection();
    let form = to_skew_form(&model);
    let params = engine_params(&form, [1.0, 0.0], scale)?;
    let inv_root = 1.0 / (scale.resolution as f64).sqrt();
    let results = fold_paths(&params, &form, scale.paths, |_, walker| {
        let mut min_gap = params.start[0];
        let mut x2_exact = true;
        // alpha = 1 everywhere: all local time accrues on the plus side.
        let mut lp = 0.0f64;
        for _ in 0..params.steps {
            let out = walker.advance();
            let dx = walker.last_dx();
            let dw = walker.last_dw();
            if out.on_surface {
                // A collision bumps gap and center by one lattice unit each,
                // leaving the second particle exactly in place.
                if dx[0] != 1 || dx[1] != 1 {
                    x2_exact = false;
                }
                lp += inv_root;
            } else if dx[1] - dx[0] != dw[1] - dw[0] {
                // Off collisions both coordinates ride the coupled walk, so
                // the second particle's increment equals its recovered
                // driving noise increment exactly.
                x2_exact = false;
            }
            min_gap = min_gap.min(walker.state()[0]);
        }
        let l = walker.local_count() as f64 * inv_root;
        (min_gap, x2_exact, (lp - l).abs())
    });
    let min_gap = results.iter().map(|r| r.0).min().unwrap_or(0);
    report.push(
        "reflection-gap-sign",
        min_gap >= 0,
        format!("min over paths and steps of X1 - X2 (lattice) = {min_gap}"),
    );
    let all_exact = results.iter().all(|r| r.1);
    report.push(
        "reflection-second-particle",
        all_exact,
        "X2 increments match the recovered driving noise off collisions and \
         vanish at collisions"
            .to_string(),
    );
    let max_gap = results.iter().map(|r| r.2).fold(0.0f64, f64::max);
    report.push(
        "reflection-split",
        max_gap <= 1e-10,
        format!("max |L+ + L- - L| = {max_gap:.3e} with L- = 0"),
    );
    Ok(())
}

fn configured_model_checks(
    report: &mut SuiteReport,
    model: &CollisionModel,
    cfg: &SimConfig,
) -> Result<()> {
    let scale = ParticleScale {
        resolution: cfg.resolution,
        horizon: cfg.horizon,
        paths: cfg.paths.min(200),
        seed: cfg.seed,
    };
    let x0 = [cfg.start.first().copied().unwrap_or(0.0), cfg.start.get(1).copied().unwrap_or(0.0)];
    let ens = crate::collisions::simulate_particles(model, x0, &scale)?;
    let mut max_gap = 0.0f64;
    for p in &ens.paths {
        for k in 0..=ens.steps {
            max_gap = max_gap.max((p.lplus[k] + p.lminus[k] - p.local[k]).abs());
        }
    }
    report.push(
        "configured-model-split",
        max_gap <= 1e-10,
        format!("max |L+ + L- - L| = {max_gap:.3e} over {} paths", scale.paths),
    );
    Ok(())
}

/// Law consistency across resolutions plus the planar oracle cross-check.
pub fn uniqueness_consistency(cfg: &SimConfig) -> Result<SuiteReport> {
    if cfg.dim != 2 {
        return Err(Error::Config(vec![crate::error::ConfigIssue::new(
            crate::error::ConfigCode::NonPositive,
            "uniqueness-consistency suite requires dimension 2",
        )]));
    }
    let mut report = SuiteReport::new("uniqueness-consistency");
    let drift = DriftSpec::zero(2);
    let resolutions = [cfg.resolution, 10 * cfg.resolution];
    let mut terminals: Vec<Vec<Vec<f64>>> = Vec::new();
    for &n in &resolutions {
        let root = (n as f64).sqrt();
        let start: Vec<i64> = cfg
            .start
            .iter()
            .map(|&x| crate::config::round_ties_to_zero(x * root))
            .collect();
        let params = ChainParams {
            dim: 2,
            resolution: n,
            steps: crate::config::step_count(n, cfg.horizon),
            horizon: cfg.horizon,
            start,
            seed: cfg.seed,
        };
        let records = collect_records(&params, &cfg.field, &drift, cfg.paths, &[]);
        let per_coord: Vec<Vec<f64>> = (0..2)
            .map(|c| records.iter().map(|r| r.terminal[c] as f64 / root).collect())
            .collect();
        terminals.push(per_coord);
    }
    let band = 2.0 * dkw_band(cfg.paths, 0.99) + 0.01;
    for c in 0..2 {
        let a = EmpiricalLaw::from_samples(terminals[0][c].clone())?;
        let b = EmpiricalLaw::from_samples(terminals[1][c].clone())?;
        let ks = ks_distance_two_sample(&a, &b);
        report.push(
            &format!("law-stability-coord{}", c + 1),
            ks <= band,
            format!(
                "KS between n = {} and n = {} terminal laws = {ks:.6} (limit {band:.6})",
                resolutions[0], resolutions[1]
            ),
        );
    }

    // Zero-bias cross-check at the planar oracle's budget.
    let n_dp: u64 = 256;
    let root = (n_dp as f64).sqrt();
    let start: Vec<i64> =
        cfg.start.iter().map(|&x| crate::config::round_ties_to_zero(x * root)).collect();
    let steps = crate::config::step_count(n_dp, cfg.horizon.min(2.0));
    let params = ChainParams {
        dim: 2,
        resolution: n_dp,
        steps,
        horizon: steps as f64 / n_dp as f64,
        start: start.clone(),
        seed: cfg.seed,
    };
    let law = exact_law(&cfg.field, &start, n_dp, steps)?;
    let records = collect_records(&params, &cfg.field, &drift, cfg.paths, &[]);
    let dkw = dkw_band(cfg.paths, 0.99);
    for c in 0..2 {
        let samples: Vec<f64> = records.iter().map(|r| r.terminal[c] as f64).collect();
        let emp = EmpiricalLaw::from_samples(samples)?;
        let atoms: Vec<(f64, f64)> =
            law.marginal(c).into_iter().map(|(v, p)| (v as f64, p)).collect();
        let ks = ks_distance_discrete(&emp, &atoms);
        report.push(
            &format!("oracle-cross-check-coord{}", c + 1),
            ks <= dkw,
            format!("KS vs exact law at n = 256: {ks:.6} (band {dkw:.6})"),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn small_cfg(dim: i64, field: FieldParams, n: i64, m: i64) -> SimConfig {
        RawConfig {
            dimension: dim,
            resolution_n: n,
            horizon_t: 1.0,
            paths_m: m,
            start: vec![0.0; dim as usize],
            field: Some(field),
            drift: None,
            seed: Some(2024),
            output: None,
            collision: None,
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn unknown_suite_is_an_error() {
        let cfg = small_cfg(1, FieldParams::Zero, 100, 10);
        assert!(matches!(run_suite("nope", &cfg), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn pathwise_suite_passes_on_small_config() {
        let cfg = small_cfg(2, FieldParams::Constant { value: vec![0.4, 1.3] }, 200, 10);
        let report = pathwise(&cfg, 20).unwrap();
        assert!(report.passed(), "{:?}", report.checks);
    }

    #[test]
    fn one_step_suite_passes() {
        let report = one_step(7, 30);
        assert!(report.passed(), "{:?}", report.checks);
    }

    #[test]
    fn skew_law_suite_passes_at_small_scale() {
        let cfg = small_cfg(1, FieldParams::Constant { value: vec![0.5] }, 400, 4000);
        let report = skew_law(&cfg).unwrap();
        // The reference-law sup-distance check needs large n; only the
        // zero-bias sampler check and mass check must pass here.
        for check in &report.checks {
            if check.name == "sampler-vs-oracle" || check.name == "oracle-mass" {
                assert!(check.passed, "{}: {}", check.name, check.detail);
            }
        }
    }

    #[test]
    fn girsanov_suite_passes_at_small_scale() {
        let cfg = small_cfg(1, FieldParams::Zero, 400, 4000);
        let report = girsanov(&cfg).unwrap();
        assert!(report.passed(), "{:?}", report.checks);
    }

    #[test]
    fn collisions_suite_passes_at_small_scale() {
        let cfg = small_cfg(2, FieldParams::Zero, 400, 500);
        let report = collisions(&cfg).unwrap();
        for check in &report.checks {
            if check.name != "frictionless-marginal" {
                assert!(check.passed, "{}: {}", check.name, check.detail);
            }
        }
    }

    #[test]
    fn reports_serialize_deterministically() {
        let report = one_step(7, 5);
        let a = serde_json::to_string(&report).unwrap();
        let b = serde_json::to_string(&one_step(7, 5)).unwrap();
        assert_eq!(a, b);
    }
}
