//! The four subcommands. Each reads a [`LoadedConfig`], writes its files
//! under the output directory and returns what it wrote.

use std::io::Write;
use std::path::{Path, PathBuf};

use conelab::harmonic::{
    corrected_v, estimate_v, sample_h_transform, write_v_table, HarmonicLookup, PolynomialLookup, TableLookup,
};
use conelab::oracle::{dp_survival_prob_with, ConditionedSampler};
use conelab::rng::{purpose, splitmix64, StreamKey};
use conelab::walk::{estimate_survival, estimate_survival_splitting, CURVE_CSV_HEADER};
use conelab::{DpOptions, HarmonicEstimate, SurvivalCurve, VOptions};
use serde_json::json;

use crate::config::{HarmonicMethod, LoadedConfig, Method, Sampler};
use crate::{create, write_lines, CliError, Stamp};

/// Seed of the `i`-th starting point's run.
pub fn start_seed(master: u64, i: usize) -> u64 {
    splitmix64(master.wrapping_add(i as u64))
}

pub fn dp_options(cfg: &LoadedConfig) -> DpOptions {
    let mut opts = DpOptions::default();
    if let Some(m) = cfg.config.budgets.max_states {
        opts.max_states = m as u128;
    }
    opts
}

/// One survival curve for start `i` with the given method.
pub fn survival_curve(
    cfg: &LoadedConfig,
    i: usize,
    method: Method,
    horizons: &[usize],
) -> Result<SurvivalCurve, CliError> {
    let c = &cfg.config;
    let x = &c.starts[i];
    let seed = start_seed(c.seed, i);
    let need = |v: Option<u64>, key: &str| v.ok_or_else(|| CliError::Config(format!("budgets.{key}: required")));
    Ok(match method {
        Method::Dp => dp_survival_prob_with(&cfg.cone, x, &cfg.dist, horizons, dp_options(cfg))?,
        Method::Mc => {
            estimate_survival(&cfg.cone, x, &cfg.dist, horizons, need(c.budgets.trials, "trials")?, seed, c.workers)?
        }
        Method::Splitting => {
            let particles = need(c.budgets.particles.map(|p| p as u64), "particles")? as usize;
            estimate_survival_splitting(&cfg.cone, x, &cfg.dist, horizons, particles, seed)?
        }
    })
}

pub fn write_curves(path: &Path, stamp: &Stamp, curves: &[SurvivalCurve]) -> Result<(), CliError> {
    let mut f = create(path)?;
    writeln!(f, "{}", stamp.csv_comment())?;
    writeln!(f, "{CURVE_CSV_HEADER}")?;
    for c in curves {
        c.write_csv(&mut f, false)?;
    }
    f.flush()?;
    Ok(())
}

fn out_dir(cfg: &LoadedConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.config.out.as_ref().map(|p| cfg.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.config.name))
}

/// Writes `survival.csv` and `survival.jsonl`.
pub fn cmd_survival(cfg: &LoadedConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let c = &cfg.config;
    if c.starts.is_empty() || c.horizons.is_empty() {
        return Err(CliError::Config("survival needs `starts` and `horizons`".into()));
    }
    let stamp = cfg.stamp("survival");
    let curves =
        (0..c.starts.len()).map(|i| survival_curve(cfg, i, c.method, &c.horizons)).collect::<Result<Vec<_>, _>>()?;
    let dir = out_dir(cfg, out);
    let csv = dir.join("survival.csv");
    let jsonl = dir.join("survival.jsonl");
    write_curves(&csv, &stamp, &curves)?;
    let lines: Vec<String> = curves
        .iter()
        .map(|cv| {
            stamp.json_line(json!({
                "name": c.name,
                "cone": cfg.cone.spec(),
                "distribution": cfg.dist.name(),
                "x": cv.start,
                "method": cv.method.to_string(),
                "horizons": cv.horizons,
                "estimates": cv.estimates,
                "std_errors": cv.std_errors,
                "trials": cv.trials,
                "curve_seed": cv.seed,
                "extinct": cv.extinct,
            }))
        })
        .collect();
    write_lines(&jsonl, &lines)?;
    Ok(vec![csv, jsonl])
}

pub fn v_options(cfg: &LoadedConfig) -> VOptions {
    let mut opts = VOptions { seed: cfg.config.seed, workers: cfg.config.workers, ..VOptions::default() };
    if let Some(h) = &cfg.config.harmonic {
        opts.n0 = h.n0.unwrap_or(opts.n0);
        opts.max_n = h.max_n.unwrap_or(opts.max_n);
        opts.rel_tol = h.rel_tol.or(opts.rel_tol);
        opts.trials = h.trials.unwrap_or(opts.trials);
    }
    opts
}

/// Writes `harmonic.csv` (V table) and `harmonic.jsonl`.
pub fn cmd_harmonic(cfg: &LoadedConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let section =
        cfg.config.harmonic.as_ref().ok_or_else(|| CliError::Config("harmonic needs a [harmonic] table".into()))?;
    let stamp = cfg.stamp("harmonic");
    let opts = v_options(cfg);
    let mut table: Vec<HarmonicEstimate> = Vec::new();
    let mut lines = Vec::new();
    for x in &section.grid {
        let mut ests = Vec::new();
        if matches!(section.method, HarmonicMethod::Truncated | HarmonicMethod::Both) {
            ests.push(estimate_v(&cfg.cone, &cfg.dist, x, &opts)?);
        }
        let mut shifts = Vec::new();
        if matches!(section.method, HarmonicMethod::Corrected | HarmonicMethod::Both) {
            let base = corrected_v(&cfg.cone, &cfg.dist, x, None, &opts)?;
            for &r in &section.r {
                let alt = corrected_v(&cfg.cone, &cfg.dist, x, Some(r), &opts)?;
                shifts.push(
                    json!({ "R": r, "value": alt.value, "relative_difference": (alt.value - base.value) / base.value }),
                );
            }
            ests.push(base);
        }
        let h = cfg.cone.evaluate_h(x);
        for e in &ests {
            lines.push(stamp.json_line(json!({
                "x": e.x,
                "h": h,
                "value": e.value,
                "std_error": e.std_error,
                "v_over_h": e.value / h,
                "method": e.method.to_string(),
                "truncation_n": e.truncation_n,
                "status": e.status(),
                "tail_estimate": e.tail_estimate,
                "shift_R": cfg.cone.shift_r(),
                "other_shifts": shifts,
            })));
        }
        table.extend(ests);
    }
    let dir = out_dir(cfg, out);
    let csv = dir.join("harmonic.csv");
    let jsonl = dir.join("harmonic.jsonl");
    let mut f = create(&csv)?;
    writeln!(f, "{}", stamp.csv_comment())?;
    write_v_table(&table, &mut f)?;
    f.flush()?;
    write_lines(&jsonl, &lines)?;
    Ok(vec![csv, jsonl])
}

/// Writes `paths.jsonl`, one path per line.
pub fn cmd_sample(cfg: &LoadedConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let s = cfg.config.sample.as_ref().ok_or_else(|| CliError::Config("sample needs a [sample] table".into()))?;
    let stamp = cfg.stamp("sample");
    let key = StreamKey::new(cfg.config.seed);
    let mut lines = Vec::with_capacity(s.paths);
    match s.sampler {
        Sampler::Conditioned => {
            let sampler = ConditionedSampler::new(&cfg.cone, &s.start, &cfg.dist, s.n)?;
            for i in 0..s.paths {
                let mut rng = key.stream(purpose("sample-conditioned"), i as u64);
                let points = sampler.sample(&mut rng);
                lines.push(stamp.json_line(json!({ "index": i, "sampler": "conditioned", "points": points })));
            }
        }
        Sampler::HTransform => {
            let table;
            let lookup: &dyn HarmonicLookup = match &s.v_table {
                Some(p) => {
                    let path = cfg.resolve(p);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Config(format!("sample.v_table {}: {e}", path.display())))?;
                    table = TableLookup::read_csv(&text)?;
                    &table
                }
                None => &PolynomialLookup(&cfg.cone),
            };
            for i in 0..s.paths {
                let mut rng = key.stream(purpose("sample-h-transform"), i as u64);
                let path = sample_h_transform(&cfg.cone, &cfg.dist, &s.start, lookup, s.n, s.envelope, &mut rng)?;
                lines.push(stamp.json_line(json!({
                    "index": i,
                    "sampler": "h_transform",
                    "points": path.points,
                    "proposals": path.proposals,
                })));
            }
        }
    }
    let path = out_dir(cfg, out).join("paths.jsonl");
    write_lines(&path, &lines)?;
    Ok(vec![path])
}

/// Runs the verification suite; writes `verify.txt`, `verify.csv`,
/// `verify.jsonl` and the plot-ready `curves.csv`. A failed criterion is
/// reported as [`CliError::VerificationFailed`] after the files are written.
pub fn cmd_verify(cfg: &LoadedConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let stamp = cfg.stamp("verify");
    let outcome = crate::verify::run_verify(cfg)?;
    let dir = out_dir(cfg, out);
    let txt = dir.join("verify.txt");
    let csv = dir.join("verify.csv");
    let jsonl = dir.join("verify.jsonl");
    let curves = dir.join("curves.csv");
    let mut f = create(&txt)?;
    writeln!(f, "{}", stamp.csv_comment())?;
    outcome.report.write_text(&mut f)?;
    f.flush()?;
    let mut f = create(&csv)?;
    writeln!(f, "{}", stamp.csv_comment())?;
    outcome.report.write_csv(&mut f)?;
    f.flush()?;
    let mut lines: Vec<String> = outcome
        .report
        .criteria
        .iter()
        .map(|c| stamp.json_line(json!({ "criterion": c.name, "passed": c.passed, "detail": c.detail })))
        .collect();
    for (label, k) in &outcome.report.kappa_hat {
        lines.push(stamp.json_line(json!({ "kappa_hat": k, "cone": label })));
    }
    for (label, fit) in &outcome.report.fits {
        lines.push(stamp.json_line(json!({
            "fit": label,
            "method": fit.method.to_string(),
            "slope": fit.slope,
            "slope_stderr": fit.slope_stderr,
            "p_hat": fit.p_hat(),
            "horizons_used": fit.horizons_used,
        })));
    }
    write_lines(&jsonl, &lines)?;
    write_curves(&curves, &stamp, &outcome.curves)?;
    let written = vec![txt, csv, jsonl, curves];
    if outcome.report.passed() {
        Ok(written)
    } else {
        let failed: Vec<&str> = outcome.report.criteria.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::VerificationFailed(failed.join(", ")))
    }
}
