//! Monte Carlo simulation of walks killed on leaving a cone.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::HarmonicCone;
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::lattice::WalkGeometry;
use crate::rng::{purpose, splitmix64, StreamKey};

#[derive(Clone, Debug, PartialEq)]
pub struct ExitRecord {
    /// `τ_x` when it is at most the horizon, otherwise the horizon.
    pub exit_time: usize,
    pub survived: bool,
    /// Position at `min(τ_x, horizon)`.
    pub final_position: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Mc,
    Splitting,
    DpExact,
}

impl fmt::Display for CurveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mc => "mc",
            Self::Splitting => "splitting",
            Self::DpExact => "dp_exact",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub cone_label: String,
    pub start: Vec<f64>,
    pub horizons: Vec<usize>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub method: CurveMethod,
    pub trials: u64,
    pub seed: Option<u64>,
    /// Set when every splitting particle died before the last horizon.
    pub extinct: bool,
}

impl SurvivalCurve {
    pub fn estimate_at(&self, n: usize) -> Option<(f64, f64)> {
        self.horizons.iter().position(|&h| h == n).map(|i| (self.estimates[i], self.std_errors[i]))
    }

    pub fn is_monotone(&self) -> bool {
        self.estimates.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "{CURVE_CSV_HEADER}")?;
        }
        let x = self.start.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";");
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        for i in 0..self.horizons.len() {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{},{},{}",
                csv_field(&self.cone_label),
                x,
                self.horizons[i],
                self.estimates[i],
                self.std_errors[i],
                self.method,
                self.trials,
                seed
            )?;
        }
        Ok(())
    }

    /// Parses curves written by [`SurvivalCurve::write_csv`], grouping rows
    /// by `(cone_label, x, method)`.
    pub fn read_csv(text: &str) -> Result<Vec<SurvivalCurve>> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.trim() == CURVE_CSV_HEADER => {}
            _ => return Err(Error::Parse(format!("curve file must start with header `{CURVE_CSV_HEADER}`"))),
        }
        let mut curves: Vec<SurvivalCurve> = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", i + 1));
            let cols = split_csv(line);
            if cols.len() != 8 {
                return Err(bad(&format!("expected 8 columns, found {}", cols.len())));
            }
            let start = cols[1]
                .split(';')
                .map(|v| v.parse::<f64>().map_err(|_| bad("bad coordinate")))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = cols[2].parse().map_err(|_| bad("bad horizon"))?;
            let est: f64 = cols[3].parse().map_err(|_| bad("bad estimate"))?;
            let se: f64 = cols[4].parse().map_err(|_| bad("bad std_error"))?;
            if !(0.0..=1.0).contains(&est) || !(se >= 0.0) {
                return Err(bad("estimate outside [0,1] or negative std_error"));
            }
            let method = match cols[5].as_str() {
                "mc" => CurveMethod::Mc,
                "splitting" => CurveMethod::Splitting,
                "dp_exact" => CurveMethod::DpExact,
                other => return Err(bad(&format!("unknown method {other:?}"))),
            };
            let trials: u64 = cols[6].parse().map_err(|_| bad("bad trials"))?;
            let seed = if cols[7].is_empty() { None } else { Some(cols[7].parse().map_err(|_| bad("bad seed"))?) };
            let pos = curves.iter().position(|c| c.cone_label == cols[0] && c.start == start && c.method == method);
            let curve = match pos {
                Some(p) => &mut curves[p],
                None => {
                    curves.push(SurvivalCurve {
                        cone_label: cols[0].clone(),
                        start,
                        horizons: Vec::new(),
                        estimates: Vec::new(),
                        std_errors: Vec::new(),
                        method,
                        trials,
                        seed,
                        extinct: false,
                    });
                    curves.last_mut().unwrap()
                }
            };
            if curve.horizons.last().is_some_and(|&last| last >= n) {
                return Err(bad("horizons must increase within a curve"));
            }
            curve.horizons.push(n);
            curve.estimates.push(est);
            curve.std_errors.push(se);
        }
        if curves.is_empty() {
            return Err(Error::Parse("curve file has no rows".into()));
        }
        Ok(curves)
    }
}

pub const CURVE_CSV_HEADER: &str = "cone_label,x,n,estimate,std_error,method,trials,seed";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Per-walk state: integer lattice offsets for lattice laws (exact
/// membership), float positions otherwise.
#[derive(Clone, Debug)]
pub(crate) struct WalkState {
    units: Vec<i64>,
    pos: Vec<f64>,
}

/// Steps a walk with the right membership test for the law.
#[derive(Clone, Debug)]
pub(crate) struct Stepper<'a> {
    cone: &'a HarmonicCone,
    dist: &'a IncrementDistribution,
    lattice: Option<(WalkGeometry, Vec<i64>)>,
    start: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(cone: &'a HarmonicCone, dist: &'a IncrementDistribution, x: &[f64]) -> Result<Self> {
        if x.len() != cone.dimension() {
            return Err(Error::DimensionMismatch { expected: cone.dimension(), got: x.len() });
        }
        if !cone.contains(x) {
            return Err(Error::OutsideCone(x.to_vec()));
        }
        let lattice = match dist.lattice() {
            Some(l) if l.offset == 0.0 => Some((WalkGeometry::new(cone, x, l.mesh, false)?, l.units.clone())),
            _ => None,
        };
        Ok(Self { cone, dist, lattice, start: x.to_vec() })
    }

    pub(crate) fn initial(&self) -> WalkState {
        WalkState { units: vec![0; self.start.len()], pos: self.start.clone() }
    }

    /// One step of all coordinates; returns whether the walk is still inside.
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(&self, s: &mut WalkState, rng: &mut R) -> bool {
        match &self.lattice {
            Some((geom, units)) => {
                for u in s.units.iter_mut() {
                    *u += units[self.dist.sample_unit(rng)];
                }
                geom.inside(&s.units)
            }
            None => {
                for p in s.pos.iter_mut() {
                    *p += self.dist.sample(rng);
                }
                self.cone.contains(&s.pos)
            }
        }
    }

    pub(crate) fn position(&self, s: &WalkState) -> Vec<f64> {
        match &self.lattice {
            Some((geom, _)) => geom.position(&s.units),
            None => s.pos.clone(),
        }
    }

    pub(crate) fn h(&self, s: &WalkState) -> f64 {
        match &self.lattice {
            Some((geom, _)) => geom.h_at(&s.units),
            None => self.cone.evaluate_h(&s.pos),
        }
    }
}

pub fn simulate_exit<R: Rng + ?Sized>(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    horizon: usize,
    rng: &mut R,
) -> Result<ExitRecord> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let stepper = Stepper::new(cone, dist, x)?;
    let mut s = stepper.initial();
    for n in 1..=horizon {
        if !stepper.step(&mut s, rng) {
            return Ok(ExitRecord { exit_time: n, survived: false, final_position: stepper.position(&s) });
        }
    }
    Ok(ExitRecord { exit_time: horizon, survived: true, final_position: stepper.position(&s) })
}

fn check_horizons(horizons: &[usize]) -> Result<usize> {
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("horizons must be a strictly increasing list of positive integers".into()));
    }
    Ok(*horizons.last().unwrap())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Trials per parallel batch; fixed so batching never depends on the
/// worker count.
const BATCH: u64 = 4096;

/// Plain Monte Carlo survival curve. Trial `t` always uses stream `t`, and
/// batches combine by integer addition, so the output depends only on
/// `master_seed`.
pub fn estimate_survival(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    horizons: &[usize],
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<SurvivalCurve> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let max_h = check_horizons(horizons)?;
    let stepper = Stepper::new(cone, dist, x)?;
    let key = StreamKey::new(master_seed);
    let tag = purpose("survival");
    let batches = trials.div_ceil(BATCH);
    let survive_counts = with_pool(workers, || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                // exit_hist[n] = number of walks with τ = n (n ≤ max_h)
                let mut exit_hist = vec![0u64; max_h + 1];
                for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                    let mut rng = key.stream(tag, t);
                    let mut s = stepper.initial();
                    if let Some(n) = (1..=max_h).find(|_| !stepper.step(&mut s, &mut rng)) {
                        exit_hist[n] += 1;
                    }
                }
                exit_hist
            })
            .reduce(|| vec![0u64; max_h + 1], |a, b| a.iter().zip(&b).map(|(p, q)| p + q).collect())
    })?;
    let mut estimates = Vec::with_capacity(horizons.len());
    let mut std_errors = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let dead: u64 = survive_counts[1..=h].iter().sum();
        let p = (trials - dead) as f64 / trials as f64;
        estimates.push(p);
        std_errors.push((p * (1.0 - p) / trials as f64).sqrt());
    }
    Ok(SurvivalCurve {
        cone_label: cone.label().to_string(),
        start: x.to_vec(),
        horizons: horizons.to_vec(),
        estimates,
        std_errors,
        method: CurveMethod::Mc,
        trials,
        seed: Some(master_seed),
        extinct: false,
    })
}

/// Fixed-effort multilevel splitting over time levels (powers of two and
/// the requested horizons).
///
/// Between levels each of the `particles` walks is advanced; survivors are
/// resampled with replacement back to `particles`. The product of the level
/// survival fractions is an unbiased estimator of `P(τ_x > n)`. Standard
/// errors use the delta method on `log P`, treating levels as independent.
pub fn estimate_survival_splitting(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    horizons: &[usize],
    particles: usize,
    master_seed: u64,
) -> Result<SurvivalCurve> {
    if particles < 100 {
        return Err(Error::InvalidArgument(format!("splitting needs at least 100 particles, got {particles}")));
    }
    let max_h = check_horizons(horizons)?;
    let stepper = Stepper::new(cone, dist, x)?;
    let mut levels: Vec<usize> = std::iter::successors(Some(1usize), |&l| l.checked_mul(2))
        .take_while(|&l| l <= max_h)
        .chain(horizons.iter().copied())
        .collect();
    levels.sort_unstable();
    levels.dedup();

    let key = StreamKey::new(master_seed);
    let step_tag = purpose("splitting");
    let resample_tag = purpose("splitting-resample");
    let mut pop: Vec<_> = (0..particles).map(|_| stepper.initial()).collect();
    let mut log_p = 0.0f64;
    let mut rel_var = 0.0f64;
    let mut extinct = false;
    let mut at_level = Vec::with_capacity(levels.len());
    let mut prev = 0usize;
    for (li, &level) in levels.iter().enumerate() {
        if extinct {
            at_level.push((0.0, 0.0));
            continue;
        }
        let mut survivors = Vec::with_capacity(particles);
        for (i, mut s) in pop.drain(..).enumerate() {
            let mut rng = key.stream(step_tag ^ splitmix64(li as u64 + 1), i as u64);
            if (prev..level).all(|_| stepper.step(&mut s, &mut rng)) {
                survivors.push(s);
            }
        }
        prev = level;
        if survivors.is_empty() {
            extinct = true;
            at_level.push((0.0, 0.0));
            continue;
        }
        let frac = survivors.len() as f64 / particles as f64;
        log_p += frac.ln();
        rel_var += (1.0 - frac) / (particles as f64 * frac);
        let est = log_p.exp();
        at_level.push((est, est * rel_var.sqrt()));
        let mut rng = key.stream(resample_tag, li as u64);
        pop = (0..particles).map(|_| survivors[rng.random_range(0..survivors.len())].clone()).collect();
    }
    let (estimates, std_errors) =
        horizons.iter().map(|h| at_level[levels.iter().position(|l| l == h).unwrap()]).unzip();
    Ok(SurvivalCurve {
        cone_label: cone.label().to_string(),
        start: x.to_vec(),
        horizons: horizons.to_vec(),
        estimates,
        std_errors,
        method: CurveMethod::Splitting,
        trials: particles as u64,
        seed: Some(master_seed),
        extinct,
    })
}

/// Sample mean and standard error of `h(x + S(n))·1{τ_x > n}`.
pub fn estimate_truncated_h(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let stepper = Stepper::new(cone, dist, x)?;
    if n == 0 {
        return Ok((cone.evaluate_h(x), 0.0));
    }
    let key = StreamKey::new(master_seed);
    let tag = purpose("truncated-h");
    let batches = trials.div_ceil(BATCH);
    let sums = with_pool(workers, || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut acc = (0.0f64, 0.0f64);
                for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                    let mut rng = key.stream(tag, t);
                    let mut s = stepper.initial();
                    if (0..n).all(|_| stepper.step(&mut s, &mut rng)) {
                        let v = stepper.h(&s);
                        acc.0 += v;
                        acc.1 += v * v;
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
    })?;
    // batch order is fixed, so the float sum is reproducible
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let mean = s1 / t;
    let var = if trials > 1 { ((s2 / t - mean * mean) * t / (t - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / t).sqrt()))
}

/// Sample mean of `h(x + S(n))` without killing, with its standard error.
pub fn estimate_free_h(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    trials: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let key = StreamKey::new(master_seed);
    let tag = purpose("free-h");
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut y = vec![0.0; x.len()];
    for t in 0..trials {
        let mut rng = key.stream(tag, t);
        y.copy_from_slice(x);
        for _ in 0..n {
            for v in y.iter_mut() {
                *v += dist.sample(&mut rng);
            }
        }
        let v = cone.evaluate_h(&y);
        s1 += v;
        s2 += v * v;
    }
    let t = trials as f64;
    let mean = s1 / t;
    let var = (s2 / t - mean * mean) * t / (t - 1.0);
    Ok((mean, (var.max(0.0) / t).sqrt()))
}
