//! The verification suite run by `conelab verify`.

use conelab::asymptotics::{
    cone_invariant_checks, endpoint_density_distance, fit_tail_exponent_in, near_boundary_bound, proportionality_check,
    ratio_exponent, CriterionResult, ExponentFit,
};
use conelab::harmonic::corrected_v;
use conelab::oracle::dp_conditional_endpoint;
use conelab::{SurvivalCurve, VOptions, VerificationReport};

use crate::commands::{survival_curve, v_options};
use crate::config::{LoadedConfig, Method, VerifySection};
use crate::CliError;

pub const DEFAULT_SLOPE_TOL: f64 = 0.05;
pub const DEFAULT_PROPORTIONALITY_TOL: f64 = 0.05;
pub const DEFAULT_NEAR_BOUNDARY_TOL: f64 = 0.10;
pub const DEFAULT_TV_TOL: f64 = 0.05;
pub const DEFAULT_CROSSVAL_SE: f64 = 4.0;
pub const DEFAULT_V_MAX_N: usize = 1024;

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub report: VerificationReport,
    pub curves: Vec<SurvivalCurve>,
}

fn filter_curve(curve: &SurvivalCurve, keep: impl Fn(usize) -> bool) -> SurvivalCurve {
    let mut c = curve.clone();
    let mask: Vec<bool> = c.horizons.iter().map(|n| keep(*n)).collect();
    let pick = |v: &[f64]| v.iter().zip(&mask).filter(|(_, k)| **k).map(|(x, _)| *x).collect::<Vec<_>>();
    c.estimates = pick(&c.estimates);
    c.std_errors = pick(&c.std_errors);
    c.horizons = c.horizons.iter().zip(&mask).filter(|(_, k)| **k).map(|(n, _)| *n).collect();
    c
}

fn sub_curve(curve: &SurvivalCurve, range: Option<[usize; 2]>) -> SurvivalCurve {
    match range {
        Some([lo, hi]) => filter_curve(curve, |n| n >= lo && n <= hi),
        None => curve.clone(),
    }
}

/// DP curves at the union of `sets` of horizons, one per start.
fn dp_curves(cfg: &LoadedConfig, sets: &[&[usize]]) -> Result<Vec<SurvivalCurve>, CliError> {
    let mut all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    all.sort_unstable();
    all.dedup();
    (0..cfg.config.starts.len()).map(|i| survival_curve(cfg, i, Method::Dp, &all)).collect()
}

fn restrict(curves: &[SurvivalCurve], horizons: &[usize]) -> Vec<SurvivalCurve> {
    curves.iter().map(|c| filter_curve(c, |n| horizons.contains(&n))).collect()
}

/// Log-log and ratio exponents of one curve against `p/2`, and their
/// mutual agreement.
pub fn exponent_check(
    curve: &SurvivalCurve,
    p: u32,
    range: Option<[usize; 2]>,
    tol: f64,
) -> Result<(CriterionResult, ExponentFit, ExponentFit), CliError> {
    let fit = fit_tail_exponent_in(curve, range.map(|[a, b]| (a, b)))?;
    let ratio = ratio_exponent(&sub_curve(curve, range))?.as_fit();
    let target = -(p as f64) / 2.0;
    let joint = (fit.slope_stderr.powi(2) + ratio.slope_stderr.powi(2)).sqrt();
    let fit_ok = (fit.slope - target).abs() <= tol;
    let ratio_ok = (ratio.slope - target).abs() <= tol;
    let agree = (fit.slope - ratio.slope).abs() <= (3.0 * joint).max(tol);
    let detail = format!(
        "target slope {target:.3}; loglog {:.4} ± {:.4}; ratio {:.4}; tolerance {tol}; methods agree: {agree}",
        fit.slope, fit.slope_stderr, ratio.slope
    );
    let x: Vec<String> = curve.start.iter().map(|v| format!("{v}")).collect();
    Ok((
        CriterionResult { name: format!("exponent[{}]", x.join(";")), passed: fit_ok && ratio_ok && agree, detail },
        fit,
        ratio,
    ))
}

/// Maximum standardized deviation of an estimated curve from the DP
/// curve. Monte Carlo standard errors are floored at the binomial error
/// implied by the DP value, so a run with no survivors is still judged.
pub fn max_z_score(estimate: &SurvivalCurve, dp: &SurvivalCurve, samples: u64) -> f64 {
    estimate
        .estimates
        .iter()
        .zip(&estimate.std_errors)
        .zip(&dp.estimates)
        .map(|((e, se), q)| {
            let floor = (q * (1.0 - q) / samples as f64).sqrt();
            let s = se.max(floor);
            if s == 0.0 {
                if e == q {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (e - q).abs() / s
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct CrossvalRow {
    pub start: Vec<f64>,
    pub mc_z: f64,
    pub splitting_z: f64,
    pub dp: SurvivalCurve,
    pub mc: SurvivalCurve,
    pub splitting: SurvivalCurve,
}

/// Monte Carlo and splitting curves against the DP curve for every start.
pub fn crossval(cfg: &LoadedConfig) -> Result<Vec<CrossvalRow>, CliError> {
    let dp = dp_curves(cfg, &[&cfg.config.horizons])?;
    crossval_against(cfg, &dp)
}

fn crossval_against(cfg: &LoadedConfig, dp: &[SurvivalCurve]) -> Result<Vec<CrossvalRow>, CliError> {
    let c = &cfg.config;
    let trials = c.budgets.trials.ok_or_else(|| CliError::Config("budgets.trials: required for crossval".into()))?;
    let particles =
        c.budgets.particles.ok_or_else(|| CliError::Config("budgets.particles: required for crossval".into()))?;
    (0..c.starts.len())
        .map(|i| {
            let dp = dp[i].clone();
            let mc = survival_curve(cfg, i, Method::Mc, &c.horizons)?;
            let splitting = survival_curve(cfg, i, Method::Splitting, &c.horizons)?;
            Ok(CrossvalRow {
                start: c.starts[i].clone(),
                mc_z: max_z_score(&mc, &dp, trials),
                splitting_z: max_z_score(&splitting, &dp, particles as u64),
                dp,
                mc,
                splitting,
            })
        })
        .collect()
}

fn v_at(cfg: &LoadedConfig, v: &VerifySection, x: &[f64]) -> Result<f64, CliError> {
    let opts = VOptions { max_n: v.v_max_n.unwrap_or(DEFAULT_V_MAX_N), ..v_options(cfg) };
    Ok(corrected_v(&cfg.cone, &cfg.dist, x, None, &opts)?.value)
}

pub fn run_verify(cfg: &LoadedConfig) -> Result<VerifyOutcome, CliError> {
    let c = &cfg.config;
    let v = c.verify.clone().unwrap_or_default();
    let cone = &cfg.cone;
    let p = cone.degree_p();
    let lattice = cfg.dist.lattice().is_some();
    let mut report = VerificationReport::default();
    report.criteria.extend(cone_invariant_checks(cone, c.seed)?);

    let nb_horizons = v.near_boundary_horizons.clone().unwrap_or_default();
    let dp_all = if lattice && v.curves.is_none() && !c.starts.is_empty() {
        dp_curves(cfg, &[&c.horizons, &nb_horizons])?
    } else {
        Vec::new()
    };
    let curves: Vec<SurvivalCurve> = match &v.curves {
        Some(path) => {
            let path = cfg.resolve(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("verify.curves {}: {e}", path.display())))?;
            SurvivalCurve::read_csv(&text)
                .map_err(|e| CliError::Config(format!("verify.curves {}: {e}", path.display())))?
        }
        None => {
            if c.starts.is_empty() || c.horizons.is_empty() {
                return Err(CliError::Config("verify needs `starts` and `horizons`, or verify.curves".into()));
            }
            if c.method == Method::Dp && lattice {
                restrict(&dp_all, &c.horizons)
            } else {
                (0..c.starts.len()).map(|i| survival_curve(cfg, i, c.method, &c.horizons)).collect::<Result<_, _>>()?
            }
        }
    };
    if curves.is_empty() {
        return Err(CliError::Config("verify: no curves".into()));
    }

    let tol = v.slope_tol.unwrap_or(DEFAULT_SLOPE_TOL);
    for curve in &curves {
        let (res, fit, ratio) = exponent_check(curve, p, v.fit_range, tol)?;
        let label = format!("{} {}", cone.label(), res.name);
        report.criteria.push(res);
        report.fits.push((label.clone(), fit));
        report.fits.push((label, ratio));
    }

    if lattice {
        let vs = curves.iter().map(|cv| v_at(cfg, &v, &cv.start)).collect::<Result<Vec<_>, _>>()?;
        let prop = proportionality_check(&curves, &vs, p)?;
        report.kappa_hat.push((cone.label().to_string(), prop.kappa_hat()));
        if curves.len() >= 4 {
            let ptol = v.proportionality_tol.unwrap_or(DEFAULT_PROPORTIONALITY_TOL);
            let spread = prop.spread();
            report.record(
                "proportionality",
                spread <= ptol,
                format!(
                    "spread of n^(p/2)·P/V across {} starts at n = {}: {spread:.4} (tolerance {ptol})",
                    curves.len(),
                    curves[0].horizons.last().unwrap()
                ),
            );
        }
    }

    if let Some(hs) = &v.near_boundary_horizons {
        let nb_curves = if !dp_all.is_empty() {
            restrict(&dp_all, hs)
        } else {
            (0..c.starts.len()).map(|i| survival_curve(cfg, i, c.method, hs)).collect::<Result<Vec<_>, CliError>>()?
        };
        let bound = near_boundary_bound(cone, &nb_curves)?;
        let values: Vec<f64> = bound.iter().map(|b| b.1).collect();
        let ntol = v.near_boundary_tol.unwrap_or(DEFAULT_NEAR_BOUNDARY_TOL);
        let max = values.iter().cloned().fold(0.0, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        // p = 1: the scaled quantity has a positive limit; otherwise it decays
        let passed = if p == 1 { (max - min) / max <= ntol } else { max <= (1.0 + ntol) * values[0] };
        let listed: Vec<String> = bound.iter().map(|(n, b)| format!("n={n}: {b:.5}")).collect();
        report.record("near_boundary", passed, format!("sup_x √n·P/δ(x+x0): {} (tolerance {ntol})", listed.join(", ")));
    }

    if let Some(n) = v.tv_horizon {
        let x = &c.starts.first().ok_or_else(|| CliError::Config("verify.tv_horizon needs a start".into()))?;
        let ttol = v.tv_tol.unwrap_or(DEFAULT_TV_TOL);
        let tv = endpoint_density_distance(&dp_conditional_endpoint(cone, x, &cfg.dist, n)?)?;
        let tv_quarter = endpoint_density_distance(&dp_conditional_endpoint(cone, x, &cfg.dist, n / 4)?)?;
        report.record(
            "conditional_limit",
            tv <= ttol && tv < tv_quarter,
            format!("TV at n = {n}: {tv:.4} (tolerance {ttol}); at n = {}: {tv_quarter:.4}", n / 4),
        );
    }

    if v.crossval {
        let k = v.crossval_se.unwrap_or(DEFAULT_CROSSVAL_SE);
        let rows =
            if dp_all.is_empty() { crossval(cfg)? } else { crossval_against(cfg, &restrict(&dp_all, &c.horizons))? };
        for row in rows {
            let x: Vec<String> = row.start.iter().map(|v| format!("{v}")).collect();
            report.record(
                format!("crossval[{}]", x.join(";")),
                row.mc_z <= k && row.splitting_z <= k,
                format!("max |estimate − DP|/SE: mc {:.2}, splitting {:.2} (limit {k})", row.mc_z, row.splitting_z),
            );
        }
    }

    Ok(VerifyOutcome { report, curves })
}
