//! Tail-exponent fits and shape checks of survival curves and conditional
//! endpoint laws.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use num_traits::Zero;

use crate::cone::HarmonicCone;
use crate::error::{Error, Result};
use crate::exact::Surd;
use crate::oracle::EndpointLaw;
use crate::polynomial::multi_indices;
use crate::rng::{purpose, StreamKey};
use crate::walk::SurvivalCurve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LoglogFit,
    Ratio,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LoglogFit => "loglog_fit",
            Self::Ratio => "ratio",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub horizons_used: Vec<usize>,
    pub method: FitMethod,
}

impl ExponentFit {
    /// The degree estimate `p̂ = −2·slope`.
    pub fn p_hat(&self) -> f64 {
        -2.0 * self.slope
    }
}

fn curve_points(curve: &SurvivalCurve, range: Option<(usize, usize)>) -> Result<Vec<(usize, f64, f64)>> {
    let pts: Vec<(usize, f64, f64)> = curve
        .horizons
        .iter()
        .zip(curve.estimates.iter().zip(&curve.std_errors))
        .filter(|(n, _)| range.is_none_or(|(lo, hi)| **n >= lo && **n <= hi))
        .map(|(n, (p, s))| (*n, *p, *s))
        .collect();
    if let Some(bad) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidArgument(format!("survival estimate at n = {} is not positive", bad.0)));
    }
    Ok(pts)
}

/// Weighted least squares of `log P(τ > n)` on `log n`.
///
/// Weights are `1/(σ_i² + floor)` with `σ_i = se_i/P_i` (delta method).
/// The floor is the mean squared residual of the unweighted fit, which
/// keeps exact DP points (`σ_i = 0`) at finite, equal weight.
pub fn fit_tail_exponent(curve: &SurvivalCurve) -> Result<ExponentFit> {
    fit_tail_exponent_in(curve, None)
}

pub fn fit_tail_exponent_in(curve: &SurvivalCurve, range: Option<(usize, usize)>) -> Result<ExponentFit> {
    let pts = curve_points(curve, range)?;
    if pts.len() < 3 {
        return Err(Error::InvalidArgument("a log-log fit needs at least 3 horizons".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (a0, b0) = wls(&xs, &ys, &vec![1.0; xs.len()]);
    let rss0: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a0 - b0 * x).powi(2)).sum();
    let floor = (rss0 / xs.len() as f64).max(1e-30);
    let w: Vec<f64> = pts.iter().map(|p| 1.0 / ((p.2 / p.1).powi(2) + floor)).collect();
    let (a, b) = wls(&xs, &ys, &w);
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&w).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let chi2: f64 = xs.iter().zip(&ys).zip(&w).map(|((x, y), w)| w * (y - a - b * x).powi(2)).sum();
    let dof = (xs.len() - 2) as f64;
    let scale = (chi2 / dof).max(1.0);
    Ok(ExponentFit {
        slope: b,
        slope_stderr: (scale / sxx).sqrt(),
        intercept: a,
        horizons_used: pts.iter().map(|p| p.0).collect(),
        method: FitMethod::LoglogFit,
    })
}

fn wls(xs: &[f64], ys: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxy: f64 = xs.iter().zip(ys).zip(w).map(|((x, y), w)| w * (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().zip(w).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let b = sxy / sxx;
    (ybar - b * xbar, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioExponent {
    /// `(n, P(τ > 2n)/P(τ > n), standard error)`.
    pub ratios: Vec<(usize, f64, f64)>,
    /// `−2·log₂` of the last ratio.
    pub p_hat: f64,
    pub p_hat_stderr: f64,
}

impl RatioExponent {
    pub fn as_fit(&self) -> ExponentFit {
        let mut used: Vec<usize> = self.ratios.iter().flat_map(|r| [r.0, 2 * r.0]).collect();
        used.sort_unstable();
        used.dedup();
        ExponentFit {
            slope: -self.p_hat / 2.0,
            slope_stderr: self.p_hat_stderr / 2.0,
            intercept: f64::NAN,
            horizons_used: used,
            method: FitMethod::Ratio,
        }
    }
}

pub fn ratio_exponent(curve: &SurvivalCurve) -> Result<RatioExponent> {
    let pts = curve_points(curve, None)?;
    let by_n: BTreeMap<usize, (f64, f64)> = pts.iter().map(|p| (p.0, (p.1, p.2))).collect();
    let ratios: Vec<(usize, f64, f64)> = by_n
        .iter()
        .filter_map(|(&n, &(p1, s1))| {
            by_n.get(&(2 * n)).map(|&(p2, s2)| {
                let r = p2 / p1;
                (n, r, r * ((s1 / p1).powi(2) + (s2 / p2).powi(2)).sqrt())
            })
        })
        .collect();
    let &(_, r, se) =
        ratios.last().ok_or_else(|| Error::InvalidArgument("curve has no pair of horizons n, 2n".into()))?;
    let ln2 = std::f64::consts::LN_2;
    Ok(RatioExponent { p_hat: -2.0 * r.log2(), p_hat_stderr: 2.0 * se / (r * ln2), ratios })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportionality {
    /// Per common horizon: `(n, n^{p/2}·P(τ_x > n)/V(x) for each x, spread)`.
    pub rows: Vec<(usize, Vec<f64>, f64)>,
}

impl Proportionality {
    /// Spread at the largest common horizon.
    pub fn spread(&self) -> f64 {
        self.rows.last().map(|r| r.2).unwrap_or(0.0)
    }

    /// Mean of the normalized values at the largest horizon: an estimate of
    /// the profile constant `κ`.
    pub fn kappa_hat(&self) -> f64 {
        self.rows.last().map(|r| r.1.iter().sum::<f64>() / r.1.len() as f64).unwrap_or(f64::NAN)
    }
}

/// Relative spread `(max − min)/mean` of `n^{p/2}·P(τ_x > n)/V(x)` across
/// starting points.
pub fn proportionality_check(curves: &[SurvivalCurve], v_values: &[f64], p: u32) -> Result<Proportionality> {
    if curves.is_empty() || curves.len() != v_values.len() {
        return Err(Error::InvalidArgument("need one V value per curve".into()));
    }
    let horizons = &curves[0].horizons;
    if curves.iter().any(|c| &c.horizons != horizons) {
        return Err(Error::InvalidArgument("curves have mismatched horizons".into()));
    }
    if v_values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("V values must be positive".into()));
    }
    let rows = horizons
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let scale = (n as f64).powf(p as f64 / 2.0);
            let vals: Vec<f64> = curves.iter().zip(v_values).map(|(c, v)| scale * c.estimates[i] / v).collect();
            (n, vals.clone(), spread(&vals))
        })
        .collect();
    Ok(Proportionality { rows })
}

fn spread(vals: &[f64]) -> f64 {
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (max - min) / mean
}

pub const TV_CELL: f64 = 0.25;
pub const TV_POOL_BELOW: f64 = 1e-6;

/// Total variation between a binned endpoint law and the density
/// proportional to `h(z)·exp(−zᵀΣ⁻¹z/2)` on the cone, where `Σ` is the
/// law's covariance (identity unless the walk runs in gap coordinates).
///
/// Cells have side 0.25; the target mass of each cell uses a composite
/// midpoint rule, the normalization is the sum over all cells, and cells
/// whose target mass is below 1e-6 are pooled into one.
pub fn endpoint_density_distance(law: &EndpointLaw) -> Result<f64> {
    if law.points.is_empty() {
        return Err(Error::ZeroMass);
    }
    let m = law.dim();
    let sigma = DMatrix::from_fn(m, m, |i, j| law.covariance[i][j]);
    let prec = sigma.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("singular covariance".into()))?;
    let max_sd = (0..m).map(|i| sigma[(i, i)].sqrt()).fold(0.0, f64::max);
    let reach = 9.0 * max_sd;

    let cell_of = |z: &[f64]| -> Vec<i64> { z.iter().map(|v| (v / TV_CELL).floor() as i64).collect() };
    let mut lo: Vec<i64> = vec![(-reach / TV_CELL).floor() as i64; m];
    let mut hi: Vec<i64> = vec![(reach / TV_CELL).ceil() as i64; m];
    let mut law_cells: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (z, p) in law.points.iter().zip(&law.probs) {
        let c = cell_of(z);
        for j in 0..m {
            lo[j] = lo[j].min(c[j]);
            hi[j] = hi[j].max(c[j]);
        }
        *law_cells.entry(c).or_insert(0.0) += p;
    }

    const SUB: usize = 4;
    let density = |z: &[f64]| -> f64 {
        if !law.forms.iter().all(|f| f.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() > 0.0) {
            return 0.0;
        }
        let h: f64 = law.forms.iter().map(|f| f.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()).product();
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += z[i] * prec[(i, j)] * z[j];
            }
        }
        h * (-0.5 * q).exp()
    };
    let mut target: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut cell = lo.clone();
    let sub_count = SUB.pow(m as u32);
    let mut z = vec![0.0; m];
    loop {
        let mut mass = 0.0;
        for s in 0..sub_count {
            let mut r = s;
            for j in 0..m {
                let t = r % SUB;
                r /= SUB;
                z[j] = (cell[j] as f64 + (t as f64 + 0.5) / SUB as f64) * TV_CELL;
            }
            mass += density(&z);
        }
        if mass > 0.0 {
            target.insert(cell.clone(), mass);
        }
        let mut j = 0;
        while j < m {
            cell[j] += 1;
            if cell[j] <= hi[j] {
                break;
            }
            cell[j] = lo[j];
            j += 1;
        }
        if j == m {
            break;
        }
    }
    let norm: f64 = target.values().sum();
    if !(norm > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut keys: Vec<&Vec<i64>> = law_cells.keys().chain(target.keys()).collect();
    keys.sort();
    keys.dedup();
    let (mut pooled_p, mut pooled_q, mut tv) = (0.0, 0.0, 0.0);
    for k in keys {
        let p = law_cells.get(k).copied().unwrap_or(0.0);
        let q = target.get(k).copied().unwrap_or(0.0) / norm;
        if q < TV_POOL_BELOW {
            pooled_p += p;
            pooled_q += q;
        } else {
            tv += (p - q).abs();
        }
    }
    tv += (pooled_p - pooled_q).abs();
    Ok(0.5 * tv)
}

/// `sup_x √n·P(τ_x > n)/δ(x + x₀)` over starting points, one value per
/// common horizon.
pub fn near_boundary_bound(cone: &HarmonicCone, curves: &[SurvivalCurve]) -> Result<Vec<(usize, f64)>> {
    let first = curves.first().ok_or_else(|| Error::InvalidArgument("no curves".into()))?;
    if curves.iter().any(|c| c.horizons != first.horizons) {
        return Err(Error::InvalidArgument("curves have mismatched horizons".into()));
    }
    let deltas = curves
        .iter()
        .map(|c| {
            let y: Vec<f64> = c.start.iter().zip(cone.interior_direction()).map(|(a, b)| a + b).collect();
            cone.boundary_distance(&y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(first
        .horizons
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sup =
                curves.iter().zip(&deltas).map(|(c, d)| (n as f64).sqrt() * c.estimates[i] / d).fold(0.0, f64::max);
            (n, sup)
        })
        .collect())
}

/// Largest relative deviation from the last value.
pub fn stability(values: &[f64]) -> f64 {
    let last = *values.last().unwrap_or(&f64::NAN);
    values.iter().map(|v| (v - last).abs() / last.abs()).fold(0.0, f64::max)
}

/// Algebraic and analytic invariants of `h` on one cone, each as a
/// PASS/FAIL line: exact Laplacian, homogeneity, positivity, exact
/// vanishing on each face, gradients against finite differences, the
/// derivative bound `|∂^k h|·δ^k/h` and the Lipschitz property of `δ`.
pub fn cone_invariant_checks(cone: &HarmonicCone, seed: u64) -> Result<Vec<CriterionResult>> {
    let label = cone.label().to_string();
    let name = |what: &str| format!("{label}:{what}");
    let key = StreamKey::new(seed);
    let mut rng = key.stream(purpose("invariants"), 0);
    let d = cone.dimension();
    let p = cone.degree_p() as i32;
    let mut out = Vec::new();

    let lap = cone.h_expanded().laplacian();
    out.push(CriterionResult {
        name: name("laplacian"),
        passed: lap.is_zero(),
        detail: if lap.is_zero() { "exactly zero".into() } else { format!("residual with {} terms", lap.num_terms()) },
    });

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = cone.sample_interior(&mut rng);
        let hx = cone.evaluate_h(&x);
        for t in [2.0f64, 3.0, 10.0] {
            let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
            worst = worst.max((cone.evaluate_h(&tx) - t.powi(p) * hx).abs() / (t.powi(p) * hx));
        }
    }
    out.push(CriterionResult {
        name: name("homogeneity"),
        passed: worst <= 1e-10,
        detail: format!("max relative error {worst:.2e}"),
    });

    let negatives = (0..10_000).filter(|_| !(cone.evaluate_h(&cone.sample_interior(&mut rng)) > 0.0)).count();
    out.push(CriterionResult {
        name: name("positivity"),
        passed: negatives == 0,
        detail: format!("{negatives} non-positive values in 10000 samples"),
    });

    let mut nonzero = 0;
    for _ in 0..20 {
        let x = cone.sample_interior(&mut rng).iter().map(|v| Surd::from_f64(*v)).collect::<Result<Vec<_>>>()?;
        for f in cone.forms() {
            let a = f.coefficients();
            let aa = a.iter().fold(Surd::zero(), |acc, c| &acc + &(c * c));
            let t = &f.apply_exact(&x) / &aa;
            let z: Vec<Surd> = x.iter().zip(a).map(|(xj, aj)| xj - &(&t * aj)).collect();
            if !cone.evaluate_h_exact(&z).is_zero() {
                nonzero += 1;
            }
        }
    }
    out.push(CriterionResult {
        name: name("boundary_vanishing"),
        passed: nonzero == 0,
        detail: format!("{nonzero} non-zero values at exact face projections"),
    });

    let grads = (0..d)
        .map(|j| {
            let mut e = vec![0; d];
            e[j] = 1;
            cone.partial_derivative(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = cone.sample_interior(&mut rng);
        let step = 1e-5 * cone.boundary_distance(&x)?;
        let exact: Vec<f64> = grads.iter().map(|g| g.eval(&x)).collect();
        let scale = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..d {
            let mut up = x.clone();
            let mut down = x.clone();
            up[j] += step;
            down[j] -= step;
            let fd = (cone.evaluate_h(&up) - cone.evaluate_h(&down)) / (2.0 * step);
            worst = worst.max((fd - exact[j]).abs() / scale);
        }
    }
    out.push(CriterionResult {
        name: name("gradient"),
        passed: worst <= 1e-6,
        detail: format!("max relative finite-difference error {worst:.2e}"),
    });

    if d <= 3 {
        let mut sups = Vec::new();
        let mut monotone = true;
        for k in 1..=cone.degree_p() {
            let indices = multi_indices(d, k);
            let polys = indices.iter().map(|a| cone.partial_derivative(a)).collect::<Result<Vec<_>>>()?;
            let ratio = |x: &[f64]| -> Result<f64> {
                let delta = cone.boundary_distance(x)?;
                let hx = cone.evaluate_h(x);
                Ok(polys.iter().map(|q| q.eval(x).abs()).fold(0.0, f64::max) * delta.powi(k as i32) / hx)
            };
            let mut sup: f64 = 0.0;
            for _ in 0..10_000 {
                sup = sup.max(ratio(&cone.sample_interior(&mut rng))?);
            }
            let x0 = cone.interior_direction();
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let t = 100f64.powf(i as f64 / 20.0);
                let y: Vec<f64> = x0.iter().map(|v| t * v).collect();
                let r = ratio(&y)?;
                if r > prev * (1.0 + 1e-9) {
                    monotone = false;
                }
                prev = r;
            }
            sups.push(sup);
        }
        let finite = sups.iter().all(|s| s.is_finite());
        let listed: Vec<String> = sups.iter().map(|s| format!("{s:.4}")).collect();
        out.push(CriterionResult {
            name: name("derivative_bound"),
            passed: finite && monotone,
            detail: format!("sup over k = 1..{p}: [{}]; non-increasing along rays: {monotone}", listed.join(", ")),
        });
    }

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = cone.sample_interior(&mut rng);
        let z = cone.sample_interior(&mut rng);
        let dist = x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let gap = (cone.boundary_distance(&x)? - cone.boundary_distance(&z)?).abs();
        worst = worst.max(gap - dist);
    }
    out.push(CriterionResult {
        name: name("delta_lipschitz"),
        passed: worst <= 1e-12,
        detail: format!("max excess of |δ(x)−δ(z)| over |x−z|: {worst:.2e}"),
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub criteria: Vec<CriterionResult>,
    /// `(cone label, κ̂)`.
    pub kappa_hat: Vec<(String, f64)>,
    pub fits: Vec<(String, ExponentFit)>,
}

impl VerificationReport {
    pub fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.criteria.push(CriterionResult { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.criteria {
            writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        for (label, k) in &self.kappa_hat {
            writeln!(out, "kappa_hat {label}: {k:.6}")?;
        }
        for (label, f) in &self.fits {
            writeln!(
                out,
                "fit {label} {}: slope {:.5} ± {:.5} (p_hat {:.4}) over n = {:?}",
                f.method,
                f.slope,
                f.slope_stderr,
                f.p_hat(),
                f.horizons_used
            )?;
        }
        writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "criterion,result,detail")?;
        for c in &self.criteria {
            writeln!(out, "{},{},\"{}\"", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail.replace('"', "'"))?;
        }
        Ok(())
    }
}
