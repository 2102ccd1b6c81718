//! Subcommand implementations.

use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;

use skewsim_core::chain::{run_chain_with, ChainParams};
use skewsim_core::collisions::{engine_params, to_skew_form, ParticleScale};
use skewsim_core::ensemble::{collect_records, fold_paths};
use skewsim_core::field::FieldParams;
use skewsim_core::oracle::{exact_chain_law, skew_bm_reference_cdf};
use skewsim_core::scale::rescale;
use skewsim_core::stats::{dkw_band, ks_distance, ks_distance_two_sample, mean_stderr, EmpiricalLaw};
use skewsim_core::suites;
use skewsim_core::{DriftField, SimConfig};

use crate::csvio::{fmt_f64, fmt_i64, CsvWriter};
use crate::manifest::RunManifest;

pub fn simulate(cfg: &SimConfig, out: &Path) -> anyhow::Result<bool> {
    let mut manifest = RunManifest::new("simulate", cfg.echo(), cfg.seed);
    let params = ChainParams::from_config(cfg);
    let steps = params.steps;
    let records = manifest.time("ensemble", || {
        collect_records(&params, &cfg.field, &cfg.drift, cfg.paths, &[steps])
    });

    let root = (cfg.resolution as f64).sqrt();
    let weights: Vec<f64> = records.iter().map(|r| r.log_weight.exp()).collect();
    let w_sum: f64 = weights.iter().sum();
    let weighted_mean = |values: &[f64]| {
        weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / w_sum
    };
    let mut per_coord = Vec::new();
    for c in 0..cfg.dim {
        let values: Vec<f64> =
            records.iter().map(|r| r.terminal[c] as f64 / root).collect();
        let (mean, stderr) = mean_stderr(&values);
        per_coord.push(json!({
            "coordinate": c + 1,
            "terminal_mean": mean,
            "terminal_stderr": stderr,
            "weighted_terminal_mean": weighted_mean(&values),
        }));
    }
    let m = cfg.paths as f64;
    let negative = records.iter().filter(|r| r.terminal[0] < 0).count() as f64 / m;
    let zero = records.iter().filter(|r| r.terminal[0] == 0).count() as f64 / m;
    let locals: Vec<f64> = records.iter().map(|r| r.local_at[0]).collect();
    let (local_mean, local_stderr) = mean_stderr(&locals);
    let (weight_mean, weight_stderr) = mean_stderr(&weights);
    let ess = w_sum * w_sum / weights.iter().map(|w| w * w).sum::<f64>();
    let summary = json!({
        "paths": cfg.paths,
        "steps": steps,
        "terminal": per_coord,
        "sign_split": {"negative": negative, "zero": zero, "positive": 1.0 - negative - zero},
        "local_time_mean": local_mean,
        "local_time_stderr": local_stderr,
        "girsanov_mean_weight": weight_mean,
        "girsanov_weight_stderr": weight_stderr,
        "girsanov_ess": ess,
    });

    std::fs::create_dir_all(out)?;
    if cfg.output.emit_paths {
        let names = manifest.time("emit_paths", || -> anyhow::Result<Vec<String>> {
            let mut names = Vec::new();
            for j in 0..cfg.paths as u64 {
                let run = run_chain_with(&params, &cfg.field, j, false);
                let path = rescale(&run);
                let name = format!("path_{j:06}.csv");
                let mut csv = CsvWriter::create(&out.join(&name))?;
                let mut header = vec!["t".to_string()];
                header.extend((1..=cfg.dim).map(|i| format!("x_{i}")));
                header.push("l".to_string());
                csv.row(&header)?;
                for k in 0..=steps {
                    let mut row = vec![fmt_f64(k as f64 / cfg.resolution as f64)];
                    row.extend(path.state(k).iter().map(|&v| fmt_f64(v)));
                    row.push(fmt_f64(path.local_time[k]));
                    csv.row(&row)?;
                }
                csv.finish()?;
                names.push(name);
            }
            Ok(names)
        })?;
        manifest.outputs.extend(names);
    }
    if cfg.output.emit_summary {
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        std::fs::write(out.join("summary.json"), text)?;
        manifest.outputs.push("summary.json".to_string());
    }
    manifest.results = summary;
    manifest.write(out)?;
    Ok(true)
}

pub fn particles(cfg: &SimConfig, out: &Path) -> anyhow::Result<bool> {
    let model = cfg
        .collision
        .as_ref()
        .context("particles needs a collision section in the config")?;
    if cfg.dim != 2 {
        bail!("particles needs dimension 2 (two particle positions)");
    }
    let mut manifest = RunManifest::new("particles", cfg.echo(), cfg.seed);
    let x0 = [cfg.start[0], cfg.start[1]];
    let scale = ParticleScale {
        resolution: cfg.resolution,
        horizon: cfg.horizon,
        paths: cfg.paths,
        seed: cfg.seed,
    };
    let form = to_skew_form(model);
    let params = engine_params(&form, x0, &scale)?;
    let inv_root = 1.0 / (cfg.resolution as f64).sqrt();

    struct PathSummary {
        x1: f64,
        x2: f64,
        min_gap: i64,
        lplus: f64,
        lminus: f64,
        local: f64,
        max_kick: f64,
        weight: f64,
    }
    let drift = form.drift();
    let weighted = !drift.is_zero();
    let results: Vec<anyhow::Result<PathSummary>> =
        manifest.time("ensemble", || {
            fold_paths(&params, &form, cfg.paths, |_, walker| {
                let mut acc =
                    skewsim_core::girsanov::WeightAccumulator::new(&drift, cfg.resolution);
                let mut min_gap = params.start[0];
                let mut lplus = 0.0;
                let mut lminus = 0.0;
                let mut max_kick = 0.0f64;
                let mut state_buf = [0i64; 2];
                for _ in 0..params.steps {
                    state_buf.copy_from_slice(walker.state());
                    let outcome = walker.advance();
                    if weighted {
                        acc.step(&state_buf, walker.last_dw());
                    }
                    if outcome.on_surface {
                        let u = state_buf[1] as f64 * inv_root;
                        let alpha = form.alpha(u)?;
                        lplus += alpha * inv_root;
                        lminus += (1.0 - alpha) * inv_root;
                        let b = walker.last_coeff();
                        max_kick = max_kick.max(b[0].abs().max(b[1].abs()) * inv_root);
                    }
                    min_gap = min_gap.min(walker.state()[0]);
                }
                let s = walker.state();
                Ok(PathSummary {
                    x1: 0.5 * (s[1] + s[0]) as f64 * inv_root,
                    x2: 0.5 * (s[1] - s[0]) as f64 * inv_root,
                    min_gap,
                    lplus,
                    lminus,
                    local: walker.local_count() as f64 * inv_root,
                    max_kick,
                    weight: acc.weight(),
                })
            })
        });
    let summaries: Vec<PathSummary> =
        results.into_iter().collect::<anyhow::Result<_>>()?;

    let split_gap = summaries
        .iter()
        .map(|s| (s.lplus + s.lminus - s.local).abs())
        .fold(0.0f64, f64::max);
    let split_ok = split_gap < 1e-10;
    let min_gap = summaries.iter().map(|s| s.min_gap).min().unwrap_or(0);
    let (x1_mean, x1_se) = mean_stderr(&summaries.iter().map(|s| s.x1).collect::<Vec<_>>());
    let (x2_mean, x2_se) = mean_stderr(&summaries.iter().map(|s| s.x2).collect::<Vec<_>>());
    let (l_mean, _) = mean_stderr(&summaries.iter().map(|s| s.local).collect::<Vec<_>>());
    let max_kick = summaries.iter().map(|s| s.max_kick).fold(0.0f64, f64::max);
    let (w_mean, _) = mean_stderr(&summaries.iter().map(|s| s.weight).collect::<Vec<_>>());
    let summary = json!({
        "paths": cfg.paths,
        "steps": params.steps,
        "x1_terminal_mean": x1_mean,
        "x1_terminal_stderr": x1_se,
        "x2_terminal_mean": x2_mean,
        "x2_terminal_stderr": x2_se,
        "local_time_mean": l_mean,
        "max_local_contribution": max_kick,
        "min_gap_lattice": min_gap,
        "min_gap_nonnegative": min_gap >= 0,
        "split_identity_gap": split_gap,
        "split_identity_ok": split_ok,
        "mean_weight": w_mean,
    });

    std::fs::create_dir_all(out)?;
    if cfg.output.emit_paths {
        let names = manifest.time("emit_paths", || -> anyhow::Result<Vec<String>> {
            let mut names = Vec::new();
            for j in 0..cfg.paths as u64 {
                let p = skewsim_core::collisions::particle_path(&form, &params, j)?;
                let name = format!("particles_{j:06}.csv");
                let mut csv = CsvWriter::create(&out.join(&name))?;
                csv.row(&["t", "x1", "x2", "lplus", "lminus", "l"])?;
                for k in 0..=params.steps {
                    csv.row(&[
                        fmt_f64(k as f64 / cfg.resolution as f64),
                        fmt_f64(p.x1[k]),
                        fmt_f64(p.x2[k]),
                        fmt_f64(p.lplus[k]),
                        fmt_f64(p.lminus[k]),
                        fmt_f64(p.local[k]),
                    ])?;
                }
                csv.finish()?;
                names.push(name);
            }
            Ok(names)
        })?;
        manifest.outputs.extend(names);
    }
    if cfg.output.emit_summary {
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        std::fs::write(out.join("summary.json"), text)?;
        manifest.outputs.push("summary.json".to_string());
    }
    manifest.results = summary;
    manifest.pass = split_ok;
    manifest.write(out)?;
    Ok(split_ok)
}

pub fn verify(cfg: &SimConfig, suite: &str, out: &Path) -> anyhow::Result<bool> {
    let mut manifest = RunManifest::new("verify", cfg.echo(), cfg.seed);
    let report = manifest.time(suite, || suites::run_suite(suite, cfg))?;
    for check in &report.checks {
        println!(
            "[{}] {}/{}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            report.suite,
            check.name,
            check.detail
        );
    }
    let pass = report.passed();
    manifest.results = serde_json::to_value(&report)?;
    manifest.pass = pass;
    manifest.write(out)?;
    Ok(pass)
}

pub fn convergence(cfg: &SimConfig, resolutions: &[u64], out: &Path) -> anyhow::Result<bool> {
    if cfg.dim != 1 {
        bail!("convergence compares first-coordinate terminal laws; use dimension 1");
    }
    if resolutions.is_empty() {
        bail!("need at least one resolution");
    }
    let mut manifest = RunManifest::new("convergence", cfg.echo(), cfg.seed);
    let reference = match cfg.field.params() {
        FieldParams::Zero => Some(skew_bm_reference_cdf(0.5, cfg.horizon)?),
        FieldParams::Constant { value } if cfg.lattice_start[0] == 0 => {
            Some(skew_bm_reference_cdf(0.5 * (1.0 + value[0]), cfg.horizon)?)
        }
        _ => None,
    };
    let mut rows = Vec::new();
    let mut previous: Option<EmpiricalLaw> = None;
    let band = dkw_band(cfg.paths, 0.99);
    let mut ref_distances = Vec::new();
    for &n in resolutions {
        let root = (n as f64).sqrt();
        let start: Vec<i64> = cfg
            .start
            .iter()
            .map(|&x| skewsim_core::config::round_ties_to_zero(x * root))
            .collect();
        let params = ChainParams {
            dim: 1,
            resolution: n,
            steps: skewsim_core::config::step_count(n, cfg.horizon),
            horizon: cfg.horizon,
            start,
            seed: cfg.seed,
        };
        let records = manifest.time(&format!("n{n}"), || {
            collect_records(&params, &cfg.field, &cfg.drift, cfg.paths, &[])
        });
        let emp = EmpiricalLaw::from_samples(
            records.iter().map(|r| r.terminal[0] as f64 / root).collect(),
        )?;
        let ks_ref = reference.as_ref().map(|r| ks_distance(&emp, |y| r.cdf(y)));
        let ks_prev = previous.as_ref().map(|p| ks_distance_two_sample(p, &emp));
        if let Some(v) = ks_ref {
            ref_distances.push(v);
        }
        rows.push((n, ks_ref, ks_prev));
        previous = Some(emp);
    }
    // Trend: reference distances may not increase beyond twice the band.
    let trend = if ref_distances.len() >= 2 {
        Some(ref_distances.windows(2).all(|w| w[1] <= w[0] + 2.0 * band))
    } else {
        None
    };

    std::fs::create_dir_all(out)?;
    let mut csv = CsvWriter::create(&out.join("convergence.csv"))?;
    csv.row(&["n", "ks_to_reference", "ks_to_previous", "dkw_band"])?;
    for (n, ks_ref, ks_prev) in &rows {
        csv.row(&[
            fmt_i64(*n as i64),
            ks_ref.map(fmt_f64).unwrap_or_default(),
            ks_prev.map(fmt_f64).unwrap_or_default(),
            fmt_f64(band),
        ])?;
    }
    csv.finish()?;
    manifest.outputs.push("convergence.csv".to_string());
    manifest.results = json!({
        "rows": rows
            .iter()
            .map(|(n, ks_ref, ks_prev)| json!({
                "n": n,
                "ks_to_reference": ks_ref,
                "ks_to_previous": ks_prev,
            }))
            .collect::<Vec<_>>(),
        "dkw_band": band,
        "monotone_trend": trend,
    });
    let pass = trend.unwrap_or(true);
    manifest.pass = pass;
    manifest.write(out)?;
    Ok(pass)
}

pub fn oracle(cfg: &SimConfig, steps: Option<usize>, out: &Path) -> anyhow::Result<bool> {
    let mut manifest = RunManifest::new("oracle", cfg.echo(), cfg.seed);
    let steps = steps.unwrap_or_else(|| cfg.steps());
    let law = manifest.time("dp", || exact_chain_law(cfg, steps))?;
    std::fs::create_dir_all(out)?;
    let mut csv = CsvWriter::create(&out.join("law.csv"))?;
    let mut header: Vec<String> = (1..=cfg.dim).map(|i| format!("x_{i}")).collect();
    header.push("mass".to_string());
    csv.row(&header)?;
    for (state, mass) in law.iter() {
        let mut row: Vec<String> = state.iter().map(|&v| fmt_i64(v)).collect();
        row.push(fmt_f64(mass));
        csv.row(&row)?;
    }
    csv.finish()?;
    manifest.outputs.push("law.csv".to_string());
    let (below, at, above) = skewsim_core::oracle::sign_probability(&law);
    manifest.results = json!({
        "steps": steps,
        "support_size": law.len(),
        "total_mass": law.total_mass(),
        "sign_probability": {"negative": below, "zero": at, "positive": above},
    });
    manifest.write(out)?;
    Ok(true)
}
