//! The one-step defect `f`, the harmonic function `V` of the killed walk
//! and the Doob transform built from it.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::HarmonicCone;
use crate::error::{Error, Result};
use crate::exact::{common_radicand, Surd};
use crate::increments::IncrementDistribution;
use crate::lattice::{LatticeKernel, WalkGeometry};
use crate::oracle::{DpOptions, DpSetup};
use crate::polynomial::{FloatPolynomial, MultiIndex, SparsePolynomial};
use crate::rng::{purpose, StreamKey};
use crate::walk::{estimate_truncated_h, Stepper};

/// `g₁(x) = E[h(x + X)] − h(x)` as a finite Taylor sum
/// `Σ_{α ≠ 0} ∂^α h(x)·∏_j m_{α_j} / α!`.
#[derive(Clone, Debug)]
pub struct DriftOperator {
    terms: Vec<(MultiIndex, SparsePolynomial, Surd)>,
    float_terms: Vec<(FloatPolynomial, f64)>,
}

impl DriftOperator {
    pub fn new(cone: &HarmonicCone, dist: &IncrementDistribution) -> Result<Self> {
        let d = cone.dimension();
        let r = cone.degree_r();
        let mut terms = Vec::new();
        let mut alpha = vec![0u32; d];
        loop {
            // next multi-index in [0, r]^d
            let mut j = 0;
            while j < d {
                alpha[j] += 1;
                if alpha[j] <= r {
                    break;
                }
                alpha[j] = 0;
                j += 1;
            }
            if j == d {
                break;
            }
            let deriv = cone.partial_derivative(&alpha)?;
            if deriv.is_zero() {
                continue;
            }
            let mut coeff = Surd::one();
            let mut fact = BigInt::one();
            for &a in &alpha {
                coeff *= &dist.moment(a)?;
                for t in 2..=a {
                    fact *= BigInt::from(t);
                }
            }
            if coeff.is_zero() {
                continue;
            }
            let coeff = coeff.scale(&BigRational::new(BigInt::one(), fact));
            terms.push((alpha.clone(), deriv, coeff));
        }
        let float_terms = terms.iter().map(|(_, p, c)| (p.to_float(), c.to_f64())).collect();
        Ok(Self { terms, float_terms })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Exact value; fails with [`Error::MixedFields`] when the point, the
    /// cone and the moments do not share one quadratic field.
    pub fn eval_exact(&self, x: &[Surd]) -> Result<Surd> {
        let field = common_radicand(x)?;
        let mut all = vec![Surd::from_rational(BigRational::zero())];
        for (_, p, c) in &self.terms {
            all.push(c.clone());
            all.extend(p.coefficients().cloned());
        }
        let other = common_radicand(&all)?;
        if field != 1 && other != 1 && field != other {
            return Err(Error::MixedFields(field, other));
        }
        let mut total = Surd::zero();
        for (_, p, c) in &self.terms {
            total += &(&p.eval_exact(x) * c);
        }
        Ok(total)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.float_terms.iter().map(|(p, c)| c * p.eval(x)).sum()
    }
}

pub fn free_drift_g1(cone: &HarmonicCone, dist: &IncrementDistribution, x: &[Surd]) -> Result<Surd> {
    if x.len() != cone.dimension() {
        return Err(Error::DimensionMismatch { expected: cone.dimension(), got: x.len() });
    }
    DriftOperator::new(cone, dist)?.eval_exact(x)
}

/// `g₂(x) = E[h(x + X); x + X ∉ K]` (signed). Exact support enumeration for
/// lattice laws; otherwise a Monte Carlo mean over `budget` draws.
pub fn boundary_defect_g2(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    budget: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let d = cone.dimension();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if dist.lattice().is_some() {
        let kernel = LatticeKernel::product(dist, d)?;
        let mut z = vec![0.0; d];
        let mut total = 0.0;
        for s in kernel.steps() {
            for j in 0..d {
                z[j] = x[j] + kernel.mesh() * s.disp[j] as f64;
            }
            if !cone.contains(&z) {
                total += s.prob * cone.evaluate_h(&z);
            }
        }
        return Ok((total, 0.0));
    }
    let key = StreamKey::new(seed);
    let mut rng = key.stream(purpose("g2"), 0);
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut z = vec![0.0; d];
    for _ in 0..budget {
        for j in 0..d {
            z[j] = x[j] + dist.sample(&mut rng);
        }
        let v = if cone.contains(&z) { 0.0 } else { cone.evaluate_h(&z) };
        s1 += v;
        s2 += v * v;
    }
    let t = budget as f64;
    let mean = s1 / t;
    let var = if budget > 1 { (s2 / t - mean * mean).max(0.0) * t / (t - 1.0) } else { 0.0 };
    Ok((mean, (var / t).sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectDecomposition {
    /// `g₁ = E[h(x + X)] − h(x)`.
    pub drift_part: f64,
    pub drift_exact: Option<Surd>,
    /// `E[h(x + X); x + X ∉ K]`.
    pub boundary_part: f64,
    pub boundary_std_error: f64,
    pub f_value: f64,
    /// `|f(x)|·δ(x)²/h(x)`.
    pub normalized_decay: f64,
}

pub fn one_step_defect_f(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    budget: u64,
    seed: u64,
) -> Result<DefectDecomposition> {
    let delta = cone.boundary_distance(x)?;
    let op = DriftOperator::new(cone, dist)?;
    let exact_x: Option<Vec<Surd>> = x.iter().map(|v| Surd::from_f64(*v).ok()).collect();
    let drift_exact = exact_x.and_then(|ex| op.eval_exact(&ex).ok());
    let drift_part = drift_exact.as_ref().map(Surd::to_f64).unwrap_or_else(|| op.eval(x));
    let (boundary_part, boundary_std_error) = boundary_defect_g2(cone, dist, x, budget, seed)?;
    let f_value = drift_part - boundary_part;
    Ok(DefectDecomposition {
        drift_part,
        drift_exact,
        boundary_part,
        boundary_std_error,
        f_value,
        normalized_decay: f_value.abs() * delta * delta / cone.evaluate_h(x),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VMethod {
    TruncatedLimit,
    CorrectedRepresentation,
}

impl fmt::Display for VMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TruncatedLimit => "truncated_limit",
            Self::CorrectedRepresentation => "corrected_representation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicEstimate {
    pub x: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
    pub method: VMethod,
    pub truncation_n: usize,
    /// Raw `(n, value)` along the doubling schedule.
    pub convergence_history: Vec<(usize, f64)>,
    /// Extrapolated `(n, value)` using all raw values up to `n`.
    pub extrapolated: Vec<(usize, f64)>,
    pub converged: bool,
    /// `|value − last raw value|`: the part of the limit supplied by
    /// extrapolation rather than by summed terms.
    pub tail_estimate: f64,
}

impl HarmonicEstimate {
    pub fn status(&self) -> &'static str {
        if self.converged {
            "converged"
        } else {
            "unconverged"
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VOptions {
    pub n0: usize,
    pub max_n: usize,
    /// Defaults to 1e-6 for DP and 1e-3 for Monte Carlo.
    pub rel_tol: Option<f64>,
    /// Highest Richardson order (0 disables extrapolation).
    pub richardson_order: usize,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for VOptions {
    fn default() -> Self {
        Self { n0: 64, max_n: 1 << 14, rel_tol: None, richardson_order: 5, trials: 100_000, seed: 0, workers: 1 }
    }
}

impl VOptions {
    fn schedule(&self) -> Result<Vec<usize>> {
        if self.n0 == 0 || self.max_n < self.n0 {
            return Err(Error::InvalidArgument("schedule needs 1 <= n0 <= max_n".into()));
        }
        Ok(std::iter::successors(Some(self.n0), |&n| n.checked_mul(2)).take_while(|&n| n <= self.max_n).collect())
    }
}

/// Diagonal of the Richardson table for values at `n_i = n_0·2^i` whose
/// error expands in powers of `n^{-1/2}`.
pub fn richardson_sqrt(values: &[f64], max_order: usize) -> Vec<f64> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut diag = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut row = vec![v];
        for j in 1..=i.min(max_order) {
            let factor = 2f64.powf(j as f64 / 2.0) - 1.0;
            let prev = row[j - 1];
            row.push(prev + (prev - table[i - 1][j - 1]) / factor);
        }
        diag.push(*row.last().unwrap());
        table.push(row);
    }
    diag
}

/// Two consecutive successive differences of the extrapolated sequence
/// below `rel_tol`.
fn settled(ex: &[f64], rel_tol: f64) -> bool {
    let k = ex.len();
    if k < 3 {
        return false;
    }
    let scale = ex[k - 1].abs().max(f64::MIN_POSITIVE);
    (ex[k - 1] - ex[k - 2]).abs() < rel_tol * scale && (ex[k - 2] - ex[k - 3]).abs() < rel_tol * scale
}

fn finish(
    x: &[f64],
    method: VMethod,
    history: Vec<(usize, f64)>,
    order: usize,
    rel_tol: f64,
    std_error: f64,
) -> HarmonicEstimate {
    let raw: Vec<f64> = history.iter().map(|h| h.1).collect();
    let ex = richardson_sqrt(&raw, order);
    let converged = settled(&ex, rel_tol);
    let value = *ex.last().unwrap();
    HarmonicEstimate {
        x: x.to_vec(),
        value,
        std_error,
        method,
        truncation_n: history.last().unwrap().0,
        tail_estimate: (value - raw.last().unwrap()).abs(),
        extrapolated: history.iter().map(|h| h.0).zip(ex).collect(),
        convergence_history: history,
        converged,
    }
}

/// `V(x) = lim E[h(x + S(n)); τ_x > n]` along `n = n0, 2n0, …`. Lattice
/// laws use the DP with Richardson extrapolation in `n^{-1/2}`; other laws
/// use plain Monte Carlo values.
pub fn estimate_v(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    opts: &VOptions,
) -> Result<HarmonicEstimate> {
    if !cone.contains(x) {
        return Err(Error::OutsideCone(x.to_vec()));
    }
    let schedule = opts.schedule()?;
    if dist.lattice().is_none() {
        let tol = opts.rel_tol.unwrap_or(1e-3);
        let mut history = Vec::new();
        let mut se = 0.0;
        for &n in &schedule {
            let (v, s) = estimate_truncated_h(cone, x, dist, n, opts.trials, opts.seed, opts.workers)?;
            history.push((n, v));
            se = s;
            let k = history.len();
            if k >= 2 && (history[k - 1].1 - history[k - 2].1).abs() < tol * v.abs() {
                break;
            }
        }
        let mut est = finish(x, VMethod::TruncatedLimit, history, 0, tol, se);
        let k = est.convergence_history.len();
        est.converged = k >= 2
            && (est.convergence_history[k - 1].1 - est.convergence_history[k - 2].1).abs() < tol * est.value.abs();
        return Ok(est);
    }
    let tol = opts.rel_tol.unwrap_or(1e-6);
    let dopts = DpOptions::default();
    let setup = DpSetup::new(cone, x, dist, dopts)?;
    setup.check_feasible(opts.max_n, dopts)?;
    let mut dp = setup.dp();
    let mut history = Vec::new();
    for &n in &schedule {
        dp.run_to(n);
        history.push((n, dp.truncated_h()));
        let raw: Vec<f64> = history.iter().map(|h| h.1).collect();
        if settled(&richardson_sqrt(&raw, opts.richardson_order), tol) {
            break;
        }
    }
    Ok(finish(x, VMethod::TruncatedLimit, history, opts.richardson_order, tol, 0.0))
}

/// Shifted evaluation of `h₊` and `f` in walk coordinates.
struct ShiftedDefect {
    geometry: Arc<WalkGeometry>,
    kernel: Arc<LatticeKernel>,
    shift: Vec<f64>,
}

impl ShiftedDefect {
    fn point(&self, k: &[i64], z: &mut [f64]) {
        let start = self.geometry.start();
        let mesh = self.geometry.mesh();
        for j in 0..z.len() {
            z[j] = start[j] + mesh * k[j] as f64 + self.shift[j];
        }
    }

    fn h_plus(&self, z: &[f64]) -> f64 {
        if self.geometry.contains_pos(z) {
            self.geometry.h_pos(z)
        } else {
            0.0
        }
    }

    /// `f(z) = E[h₊(z + X)] − h(z)`.
    fn f(&self, z: &[f64], buf: &mut [f64]) -> f64 {
        let mesh = self.geometry.mesh();
        let mut acc = 0.0;
        for s in self.kernel.steps() {
            for j in 0..z.len() {
                buf[j] = z[j] + mesh * s.disp[j] as f64;
            }
            acc += s.prob * self.h_plus(buf);
        }
        acc - self.geometry.h_pos(z)
    }
}

/// `V(x) = h(x + R x₀) − E[h₊(x + R x₀ + S(τ_x))] + Σ_k E[f(x + R x₀ + S(k)); τ_x > k]`
/// summed by the DP up to each schedule point and extrapolated as in
/// [`estimate_v`]. Lattice laws only.
pub fn corrected_v(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    r: Option<f64>,
    opts: &VOptions,
) -> Result<HarmonicEstimate> {
    let r = r.unwrap_or(cone.shift_r());
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("shift R must be positive, got {r}")));
    }
    let schedule = opts.schedule()?;
    let tol = opts.rel_tol.unwrap_or(1e-6);
    let dopts = DpOptions::default();
    let setup = DpSetup::new(cone, x, dist, dopts)?;
    setup.check_feasible(opts.max_n, dopts)?;
    let shift: Vec<f64> = setup.geometry.interior_direction().iter().map(|v| r * v).collect();
    let sd = ShiftedDefect { geometry: setup.geometry.clone(), kernel: setup.kernel.clone(), shift };
    let dim = setup.geometry.dim();
    let mut z = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    sd.point(&vec![0; dim], &mut z);
    let h_shifted = sd.geometry.h_pos(&z);
    let mut value = h_shifted;
    let mut dp = setup.dp();
    let mut history = Vec::new();
    let mut next = 0;
    let mut step = 0;
    while next < schedule.len() {
        let f_term = dp.integrate(|k| {
            sd.point(k, &mut z);
            sd.f(&z, &mut buf)
        });
        let mut exit = 0.0;
        dp.step_with(|k, m| {
            sd.point(k, &mut buf);
            exit += m * sd.h_plus(&buf);
        });
        value += f_term - exit;
        step += 1;
        if step == schedule[next] {
            history.push((step, value));
            next += 1;
            let raw: Vec<f64> = history.iter().map(|h| h.1).collect();
            if settled(&richardson_sqrt(&raw, opts.richardson_order), tol) {
                break;
            }
        }
    }
    Ok(finish(x, VMethod::CorrectedRepresentation, history, opts.richardson_order, tol, 0.0))
}

/// Values of a positive function on the cone.
pub trait HarmonicLookup {
    fn value(&self, y: &[f64]) -> Option<f64>;
}

/// `h` itself.
pub struct PolynomialLookup<'a>(pub &'a HarmonicCone);

impl HarmonicLookup for PolynomialLookup<'_> {
    fn value(&self, y: &[f64]) -> Option<f64> {
        self.0.contains(y).then(|| self.0.evaluate_h(y))
    }
}

/// Point table matched within an absolute tolerance.
#[derive(Clone, Debug, Default)]
pub struct TableLookup {
    points: Vec<(Vec<f64>, f64)>,
    tol: f64,
}

impl TableLookup {
    pub fn new(points: Vec<(Vec<f64>, f64)>) -> Self {
        Self { points, tol: 1e-7 }
    }

    pub fn from_estimates(estimates: &[HarmonicEstimate]) -> Self {
        Self::new(estimates.iter().map(|e| (e.x.clone(), e.value)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads a table written by [`write_v_table`].
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.trim() == V_TABLE_HEADER => {}
            _ => return Err(Error::Parse(format!("V table must start with header `{V_TABLE_HEADER}`"))),
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |w: &str| Error::Parse(format!("line {}: {w}", i + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let x = cols[0]
                .split(';')
                .map(|v| v.parse::<f64>().map_err(|_| bad("bad coordinate")))
                .collect::<Result<Vec<_>>>()?;
            let v: f64 = cols[1].parse().map_err(|_| bad("bad value"))?;
            points.push((x, v));
        }
        Ok(Self::new(points))
    }
}

impl HarmonicLookup for TableLookup {
    fn value(&self, y: &[f64]) -> Option<f64> {
        self.points
            .iter()
            .find(|(p, _)| p.len() == y.len() && p.iter().zip(y).all(|(a, b)| (a - b).abs() <= self.tol))
            .map(|(_, v)| *v)
    }
}

pub const V_TABLE_HEADER: &str = "x,value,std_error,method,truncation_n";

pub fn write_v_table<W: Write>(estimates: &[HarmonicEstimate], mut out: W) -> Result<()> {
    writeln!(out, "{V_TABLE_HEADER}")?;
    for e in estimates {
        let x: Vec<String> = e.x.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{:e},{:e},{},{}", x.join(";"), e.value, e.std_error, e.method, e.truncation_n)?;
    }
    Ok(())
}

/// `|E[V(x + X); x + X ∈ K] − V(x)| / V(x)` by support enumeration.
pub fn harmonicity_residual(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    v: &dyn HarmonicLookup,
) -> Result<f64> {
    let d = cone.dimension();
    let kernel = LatticeKernel::product(dist, d)?;
    let vx = v.value(x).ok_or_else(|| Error::ValueUnavailable(x.to_vec()))?;
    let mut acc = 0.0;
    let mut z = vec![0.0; d];
    for s in kernel.steps() {
        for j in 0..d {
            z[j] = x[j] + kernel.mesh() * s.disp[j] as f64;
        }
        if cone.contains(&z) {
            acc += s.prob * v.value(&z).ok_or_else(|| Error::ValueUnavailable(z.clone()))?;
        }
    }
    Ok((acc - vx).abs() / vx)
}

/// Nested Monte Carlo residual for laws without lattice support: `V` at `x`
/// and at `outer` one-step neighbours is estimated by truncated means at
/// horizon `n` over `inner` walks sharing the same random streams.
pub fn harmonicity_residual_mc(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    n: usize,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<f64> {
    let key = StreamKey::new(seed);
    let v_hat = |y: &[f64]| -> Result<f64> {
        let stepper = Stepper::new(cone, dist, y)?;
        let mut acc = 0.0;
        for t in 0..inner {
            let mut rng = key.stream(purpose("residual-inner"), t);
            let mut s = stepper.initial();
            if (0..n).all(|_| stepper.step(&mut s, &mut rng)) {
                acc += stepper.h(&s);
            }
        }
        Ok(acc / inner as f64)
    };
    let vx = v_hat(x)?;
    let mut rng = key.stream(purpose("residual-outer"), 0);
    let mut acc = 0.0;
    let mut z = vec![0.0; x.len()];
    for _ in 0..outer {
        for j in 0..x.len() {
            z[j] = x[j] + dist.sample(&mut rng);
        }
        if cone.contains(&z) {
            acc += v_hat(&z)?;
        }
    }
    Ok((acc / outer as f64 - vx).abs() / vx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HPath {
    pub points: Vec<Vec<f64>>,
    /// Proposals drawn per accepted step.
    pub proposals: Vec<u32>,
}

/// Doob transform path of length `n` by rejection: from `y`, propose
/// `y' = y + X` and accept with probability `V(y')·1{y' ∈ K} / (M·V(y))`.
///
/// `envelope = None` (lattice laws only) uses `M(y) = max_e V(y + e)/V(y)`
/// over the finite support, the smallest valid bound at `y`; a fixed `M`
/// must dominate every ratio and an observed ratio above `M` aborts.
pub fn sample_h_transform<R: Rng + ?Sized>(
    cone: &HarmonicCone,
    dist: &IncrementDistribution,
    x: &[f64],
    v: &dyn HarmonicLookup,
    n: usize,
    envelope: Option<f64>,
    rng: &mut R,
) -> Result<HPath> {
    const MAX_PROPOSALS: u32 = 1_000_000;
    let d = cone.dimension();
    if !cone.contains(x) {
        return Err(Error::OutsideCone(x.to_vec()));
    }
    let kernel = match (envelope, dist.lattice()) {
        (None, Some(_)) => Some(LatticeKernel::product(dist, d)?),
        (None, None) => return Err(Error::InvalidArgument("a fixed envelope is required for non-lattice laws".into())),
        (Some(m), _) if !(m >= 1.0) => return Err(Error::InvalidArgument(format!("envelope must be >= 1, got {m}"))),
        _ => None,
    };
    let value = |y: &[f64]| v.value(y).filter(|v| *v > 0.0).ok_or_else(|| Error::ValueUnavailable(y.to_vec()));
    let mut y = x.to_vec();
    let mut vy = value(&y)?;
    let mut points = vec![y.clone()];
    let mut proposals = Vec::with_capacity(n);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        let m = match (&kernel, envelope) {
            (_, Some(m)) => m,
            (Some(k), None) => {
                let mut best = 0.0f64;
                for s in k.steps() {
                    for j in 0..d {
                        z[j] = y[j] + k.mesh() * s.disp[j] as f64;
                    }
                    if cone.contains(&z) {
                        best = best.max(value(&z)? / vy);
                    }
                }
                if best == 0.0 {
                    return Err(Error::ZeroMass);
                }
                best
            }
            (None, None) => unreachable!(),
        };
        let mut tries = 0u32;
        loop {
            tries += 1;
            if tries > MAX_PROPOSALS {
                return Err(Error::ZeroMass);
            }
            for j in 0..d {
                z[j] = y[j] + dist.sample(rng);
            }
            if !cone.contains(&z) {
                continue;
            }
            let vz = value(&z)?;
            let ratio = vz / (m * vy);
            if ratio > 1.0 + 1e-12 {
                return Err(Error::EnvelopeViolation { ratio, at: z.clone() });
            }
            if rng.random::<f64>() < ratio {
                y.copy_from_slice(&z);
                vy = vz;
                break;
            }
        }
        points.push(y.clone());
        proposals.push(tries);
    }
    Ok(HPath { points, proposals })
}
