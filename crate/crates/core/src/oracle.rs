//! Exact survival laws for lattice walks: the forward DP over survival
//! measures, conditioned path sampling, brute-force path enumeration, and
//! import/export of measures.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::cone::HarmonicCone;
use crate::error::{Error, Result};
use crate::exact::Surd;
use crate::increments::IncrementDistribution;
use crate::lattice::{DenseGrid, ExactDp, LatticeKernel, SurvivalDp, WalkGeometry, MAX_STATES};
use crate::walk::{CurveMethod, SurvivalCurve};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOptions {
    /// Run type-A-like cones (every form has zero coefficient sum) in gap
    /// coordinates.
    pub reduce: bool,
    pub max_states: u128,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { reduce: true, max_states: MAX_STATES }
    }
}

impl DpOptions {
    pub fn unreduced() -> Self {
        Self { reduce: false, ..Self::default() }
    }
}

/// Geometry and kernel of one DP query.
#[derive(Clone, Debug)]
pub struct DpSetup {
    pub geometry: Arc<WalkGeometry>,
    pub kernel: Arc<LatticeKernel>,
}

impl DpSetup {
    pub fn new(cone: &HarmonicCone, x: &[f64], dist: &IncrementDistribution, opts: DpOptions) -> Result<Self> {
        let lat = dist.lattice().ok_or_else(|| {
            Error::NotLattice(format!(
                "{} has no lattice support; use the Monte Carlo estimators in `walk`",
                dist.name()
            ))
        })?;
        let geometry = WalkGeometry::new(cone, x, lat.mesh, opts.reduce)?;
        let mut kernel = LatticeKernel::product(dist, cone.dimension())?;
        if let Some(b) = geometry.reduction() {
            kernel = kernel.map(b);
        }
        Ok(Self { geometry: Arc::new(geometry), kernel: Arc::new(kernel) })
    }

    /// Rejects horizons whose worst-case grid would not fit the budget.
    pub fn check_feasible(&self, n: usize, opts: DpOptions) -> Result<()> {
        let states = SurvivalDp::estimated_states(&self.kernel, n);
        if states > opts.max_states {
            return Err(Error::StateSpaceTooLarge { states, bytes: states * 8 * 2 });
        }
        Ok(())
    }

    pub fn dp(&self) -> SurvivalDp {
        SurvivalDp::new(self.geometry.clone(), self.kernel.clone()).expect("dimensions agree by construction")
    }
}

#[derive(Clone, Debug)]
pub enum Masses {
    Float(DenseGrid),
    Exact(BTreeMap<Vec<i64>, BigRational>),
}

/// `μ_n(y) = P(x + S(n) = y, τ_x > n)`, keyed by integer offsets `k` with
/// `y = start + mesh·k` in walk coordinates (gap coordinates when the DP
/// was reduced).
#[derive(Clone, Debug)]
pub struct LatticeMeasure {
    pub step_index: usize,
    pub origin: Vec<f64>,
    pub geometry: Arc<WalkGeometry>,
    pub masses: Masses,
}

impl LatticeMeasure {
    pub fn mesh(&self) -> f64 {
        self.geometry.mesh()
    }

    pub fn total(&self) -> f64 {
        match &self.masses {
            Masses::Float(g) => g.total(),
            Masses::Exact(m) => m.values().sum::<BigRational>().to_f64().unwrap(),
        }
    }

    pub fn total_exact(&self) -> Option<BigRational> {
        match &self.masses {
            Masses::Exact(m) => Some(m.values().sum()),
            Masses::Float(_) => None,
        }
    }

    /// `(offset, mass)` pairs with positive mass.
    pub fn entries(&self) -> Vec<(Vec<i64>, f64)> {
        match &self.masses {
            Masses::Float(g) => g.entries(),
            Masses::Exact(m) => m.iter().map(|(k, v)| (k.clone(), v.to_f64().unwrap())).collect(),
        }
    }

    pub fn position(&self, k: &[i64]) -> Vec<f64> {
        self.geometry.position(k)
    }

    pub fn integrate(&self, mut g: impl FnMut(&[i64]) -> f64) -> f64 {
        self.entries().iter().map(|(k, m)| g(k) * m).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.geometry.dim();
        let cols: Vec<String> = (1..=dim).map(|j| format!("y{j}")).collect();
        writeln!(out, "{},mass", cols.join(","))?;
        for (k, m) in self.entries() {
            let y = self.position(&k);
            let ys: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{},{:e}", ys.join(","), m)?;
        }
        Ok(())
    }
}

pub fn dp_survival_measure(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
) -> Result<LatticeMeasure> {
    dp_survival_measure_with(cone, x, dist, n, DpOptions::default())
}

pub fn dp_survival_measure_with(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    opts: DpOptions,
) -> Result<LatticeMeasure> {
    let setup = DpSetup::new(cone, x, dist, opts)?;
    setup.check_feasible(n, opts)?;
    let mut dp = setup.dp();
    dp.run_to(n);
    Ok(LatticeMeasure {
        step_index: n,
        origin: x.to_vec(),
        geometry: setup.geometry,
        masses: Masses::Float(dp.grid().clone()),
    })
}

/// Rational-arithmetic measure; requires a lattice-aligned start, walk
/// dimension at most 2 and `n ≤ 64`.
pub fn dp_survival_measure_exact(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    opts: DpOptions,
) -> Result<LatticeMeasure> {
    let setup = DpSetup::new(cone, x, dist, opts)?;
    let mut dp = ExactDp::new(setup.geometry.clone(), setup.kernel.clone())?;
    dp.run_to(n)?;
    Ok(LatticeMeasure {
        step_index: n,
        origin: x.to_vec(),
        geometry: setup.geometry,
        masses: Masses::Exact(dp.masses().clone()),
    })
}

pub fn dp_survival_prob(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    horizons: &[usize],
) -> Result<SurvivalCurve> {
    dp_survival_prob_with(cone, x, dist, horizons, DpOptions::default())
}

pub fn dp_survival_prob_with(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    horizons: &[usize],
    opts: DpOptions,
) -> Result<SurvivalCurve> {
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("horizons must be strictly increasing".into()));
    }
    let setup = DpSetup::new(cone, x, dist, opts)?;
    setup.check_feasible(horizons.last().copied().unwrap_or(0), opts)?;
    let mut dp = setup.dp();
    let mut estimates = Vec::with_capacity(horizons.len());
    for &h in horizons {
        dp.run_to(h);
        estimates.push(dp.total().min(1.0));
    }
    Ok(SurvivalCurve {
        cone_label: cone.label().to_string(),
        start: x.to_vec(),
        horizons: horizons.to_vec(),
        std_errors: vec![0.0; estimates.len()],
        estimates,
        method: CurveMethod::DpExact,
        trials: 0,
        seed: None,
        extinct: false,
    })
}

/// `E[h(x + S(n)); τ_x > n]`.
pub fn dp_truncated_h(cone: &HarmonicCone, x: &[f64], dist: &IncrementDistribution, n: usize) -> Result<f64> {
    Ok(*dp_truncated_h_sequence(cone, x, dist, n)?.last().unwrap())
}

/// `E[h(x + S(k)); τ_x > k]` for `k = 0..=n`.
pub fn dp_truncated_h_sequence(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
) -> Result<Vec<f64>> {
    let opts = DpOptions::default();
    let setup = DpSetup::new(cone, x, dist, opts)?;
    setup.check_feasible(n, opts)?;
    let mut dp = setup.dp();
    let mut out = vec![dp.truncated_h()];
    for _ in 0..n {
        dp.step();
        out.push(dp.truncated_h());
    }
    Ok(out)
}

/// Normalized endpoint law with support points scaled by `1/scale`.
#[derive(Clone, Debug)]
pub struct EndpointLaw {
    pub points: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    /// Covariance of the scaled free walk in the same coordinates.
    pub covariance: Vec<Vec<f64>>,
    /// Forms defining the cone in the same coordinates.
    pub forms: Vec<Vec<f64>>,
    pub scale: f64,
    pub n: usize,
}

impl EndpointLaw {
    pub fn dim(&self) -> usize {
        self.covariance.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.probs) {
            for (mj, pj) in m.iter_mut().zip(p) {
                *mj += w * pj;
            }
        }
        m
    }
}

/// The law of `(x + S(n))/√n` given `τ_x > n`.
pub fn dp_conditional_endpoint(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
) -> Result<EndpointLaw> {
    let mu = dp_survival_measure(cone, x, dist, n)?;
    endpoint_from_measure(&mu, (n as f64).sqrt())
}

pub fn endpoint_from_measure(mu: &LatticeMeasure, scale: f64) -> Result<EndpointLaw> {
    let entries = mu.entries();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if entries.is_empty() || total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let points = entries.iter().map(|(k, _)| mu.position(k).iter().map(|v| v / scale).collect()).collect();
    let probs = entries.iter().map(|(_, m)| m / total).collect();
    Ok(EndpointLaw {
        points,
        probs,
        covariance: mu.geometry.covariance(),
        forms: mu.geometry.forms().to_vec(),
        scale,
        n: mu.step_index,
    })
}

/// Exact sampler of `(x + S(k))_{k ≤ n}` given `τ_x > n`, from one stored
/// forward pass (original coordinates).
#[derive(Clone, Debug)]
pub struct ConditionedSampler {
    setup: DpSetup,
    grids: Vec<DenseGrid>,
    endpoint_cdf: Vec<(Vec<i64>, f64)>,
}

impl ConditionedSampler {
    pub fn new(cone: &HarmonicCone, x: &[f64], dist: &IncrementDistribution, n: usize) -> Result<Self> {
        let opts = DpOptions::unreduced();
        let setup = DpSetup::new(cone, x, dist, opts)?;
        setup.check_feasible(n, opts)?;
        let mut dp = setup.dp();
        let mut grids = vec![dp.grid().clone()];
        for _ in 0..n {
            dp.step();
            grids.push(dp.grid().clone());
        }
        let mut acc = 0.0;
        let mut endpoint_cdf: Vec<(Vec<i64>, f64)> = grids[n]
            .entries()
            .into_iter()
            .map(|(k, m)| {
                acc += m;
                (k, acc)
            })
            .collect();
        if endpoint_cdf.is_empty() || acc <= 0.0 {
            return Err(Error::ZeroMass);
        }
        for e in endpoint_cdf.iter_mut() {
            e.1 /= acc;
        }
        Ok(Self { setup, grids, endpoint_cdf })
    }

    pub fn horizon(&self) -> usize {
        self.grids.len() - 1
    }

    /// Survival probability `P(τ_x > n)`.
    pub fn survival(&self) -> f64 {
        self.grids[self.horizon()].total()
    }

    /// Lattice offsets of a conditioned path, from 0 to `n`.
    pub fn sample_offsets<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<i64>> {
        let n = self.horizon();
        let u: f64 = rng.random();
        let idx = self.endpoint_cdf.partition_point(|e| e.1 <= u).min(self.endpoint_cdf.len() - 1);
        let mut path = vec![self.endpoint_cdf[idx].0.clone()];
        let steps = self.setup.kernel.steps();
        let mut weights = vec![0.0; steps.len()];
        for k in (1..=n).rev() {
            let y = path.last().unwrap().clone();
            let mut total = 0.0;
            for (w, s) in weights.iter_mut().zip(steps) {
                let prev: Vec<i64> = y.iter().zip(&s.disp).map(|(a, b)| a - b).collect();
                *w = self.grids[k - 1].get(&prev) * s.prob;
                total += *w;
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = steps.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            while weights[pick] == 0.0 {
                pick -= 1;
            }
            path.push(y.iter().zip(&steps[pick].disp).map(|(a, b)| a - b).collect());
        }
        path.reverse();
        path
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        self.sample_offsets(rng).iter().map(|k| self.setup.geometry.position(k)).collect()
    }
}

pub fn sample_conditioned_path<R: Rng + ?Sized>(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    Ok(ConditionedSampler::new(cone, x, dist, n)?.sample(rng))
}

/// Result of exhaustive enumeration. Endpoint offsets are in lattice units
/// of the original coordinates.
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub survival: BigRational,
    pub truncated_h: Surd,
    pub endpoint: BTreeMap<Vec<i64>, BigRational>,
    pub paths_visited: u64,
}

pub const BRUTE_FORCE_BUDGET: f64 = 4e9;

/// Enumerates every step sequence of length `n` with exact arithmetic.
/// Membership is decided by the cone's exact form signs at each visited
/// point. `budget` bounds the number of surviving path prefixes visited;
/// the enumeration stops with `BudgetExceeded` once it is reached.
pub fn brute_force_enumerate(
    cone: &HarmonicCone,
    x: &[f64],
    dist: &IncrementDistribution,
    n: usize,
    budget: f64,
) -> Result<BruteForce> {
    let lat = dist.lattice().ok_or_else(|| Error::NotLattice(dist.name()))?;
    let d = cone.dimension();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let needed = (lat.units.len() as f64).powi((d * n) as i32);
    // start as an integer multiple of the mesh
    let start: Vec<i64> = x
        .iter()
        .map(|v| {
            let u = v / lat.mesh;
            ((u - u.round()).abs() < 1e-9).then(|| u.round() as i64)
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::NotLatticeAligned(x.to_vec()))?;
    let mesh = &lat.mesh_exact;
    let exact_point =
        |k: &[i64]| -> Vec<Surd> { k.iter().zip(&start).map(|(a, b)| mesh * &Surd::from_integer(a + b)).collect() };
    if !cone.contains_exact(&exact_point(&vec![0; d])) {
        return Err(Error::OutsideCone(x.to_vec()));
    }

    // integer weights over a common denominator
    let den1 = lat.probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let num1: Vec<u128> = lat
        .probs
        .iter()
        .map(|p| (p * BigRational::from_integer(den1.clone())).to_integer().to_u128().unwrap())
        .collect();
    let den1_u = den1.to_u128().ok_or_else(|| Error::InvalidArgument("denominator too large".into()))?;
    let total_den = (0..d * n)
        .try_fold(1u128, |acc, _| acc.checked_mul(den1_u))
        .ok_or(Error::BudgetExceeded { needed, budget: u128::MAX as f64 })?;

    let span = lat.units.iter().map(|u| u.abs()).max().unwrap_or(0) * n as i64;
    let side = (2 * span + 1) as usize;
    let cells = side.pow(d as u32);
    let index = |k: &[i64]| k.iter().fold(0usize, |acc, v| acc * side + (v + span) as usize);
    // 0 unknown, 1 inside, 2 outside
    let mut member = vec![0u8; cells];
    let mut endpoint_w = vec![0u128; cells];
    let mut visited = 0u64;

    struct Ctx<'a> {
        d: usize,
        n: usize,
        units: &'a [i64],
        num1: &'a [u128],
        budget: u64,
    }
    let ctx = Ctx { d, n, units: &lat.units, num1: &num1, budget: budget.min(u64::MAX as f64) as u64 };

    #[allow(clippy::too_many_arguments)]
    fn rec(
        ctx: &Ctx,
        depth: usize,
        pos: &mut Vec<i64>,
        weight: u128,
        inside: &mut dyn FnMut(&[i64]) -> bool,
        endpoint: &mut dyn FnMut(&[i64], u128),
        visited: &mut u64,
    ) -> bool {
        *visited += 1;
        if *visited > ctx.budget {
            return false;
        }
        if depth == ctx.n {
            endpoint(pos, weight);
            return true;
        }
        // enumerate the d coordinates' steps as one joint step
        let m = ctx.units.len();
        let joint = m.pow(ctx.d as u32);
        for code in 0..joint {
            let mut c = code;
            let mut w = weight;
            for pj in pos.iter_mut() {
                let i = c % m;
                c /= m;
                *pj += ctx.units[i];
                w *= ctx.num1[i];
            }
            let ok = !(w != 0 && inside(pos)) || rec(ctx, depth + 1, pos, w, inside, endpoint, visited);
            let mut c = code;
            for pj in pos.iter_mut() {
                *pj -= ctx.units[c % m];
                c /= m;
            }
            if !ok {
                return false;
            }
        }
        true
    }

    let mut inside = |k: &[i64]| {
        let i = index(k);
        if member[i] == 0 {
            member[i] = if cone.contains_exact(&exact_point(k)) { 1 } else { 2 };
        }
        member[i] == 1
    };
    let mut endpoint = |k: &[i64], w: u128| endpoint_w[index(k)] += w;
    let mut pos = vec![0i64; d];
    if !rec(&ctx, 0, &mut pos, 1, &mut inside, &mut endpoint, &mut visited) {
        return Err(Error::BudgetExceeded { needed: visited as f64, budget });
    }

    let den = BigRational::from_integer(BigInt::from(total_den));
    let mut map = BTreeMap::new();
    let mut survival = BigRational::zero();
    let mut truncated_h = Surd::zero();
    for (i, &w) in endpoint_w.iter().enumerate() {
        if w == 0 {
            continue;
        }
        let mut k = vec![0i64; d];
        let mut r = i;
        for j in (0..d).rev() {
            k[j] = (r % side) as i64 - span;
            r /= side;
        }
        let p = BigRational::from_integer(BigInt::from(w)) / &den;
        survival += &p;
        truncated_h += &cone.evaluate_h_exact(&exact_point(&k)).scale(&p);
        map.insert(k, p);
    }
    Ok(BruteForce { survival, truncated_h, endpoint: map, paths_visited: visited })
}

/// On-disk cache of float survival measures keyed by a hash of
/// `(cone, law, x, n, reduce)`.
#[derive(Clone, Debug)]
pub struct MeasureCache {
    dir: PathBuf,
}

const CACHE_MAGIC: &[u8; 4] = b"CLMC";
const CACHE_VERSION: u32 = 1;

impl MeasureCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    pub fn key(cone: &HarmonicCone, dist: &IncrementDistribution, x: &[f64], n: usize, opts: DpOptions) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(cone.spec().as_bytes());
        for f in cone.forms() {
            for c in f.coefficients() {
                h.update(c.to_string().as_bytes());
                h.update(b",");
            }
            h.update(b";");
        }
        h.update(dist.name().as_bytes());
        for v in x {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((n as u64).to_le_bytes());
        h.update([opts.reduce as u8]);
        h.finalize().into()
    }

    fn path(&self, key: &[u8; 32]) -> PathBuf {
        let hex: String = key.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{hex}.bin"))
    }

    /// Loads the measure from the cache or computes and stores it.
    pub fn measure(
        &self,
        cone: &HarmonicCone,
        x: &[f64],
        dist: &IncrementDistribution,
        n: usize,
        opts: DpOptions,
    ) -> Result<LatticeMeasure> {
        let key = Self::key(cone, dist, x, n, opts);
        let path = self.path(&key);
        if path.exists() {
            let grid = read_grid(&mut std::fs::File::open(&path)?, &key)?;
            let setup = DpSetup::new(cone, x, dist, opts)?;
            return Ok(LatticeMeasure {
                step_index: n,
                origin: x.to_vec(),
                geometry: setup.geometry,
                masses: Masses::Float(grid),
            });
        }
        let mu = dp_survival_measure_with(cone, x, dist, n, opts)?;
        if let Masses::Float(g) = &mu.masses {
            let tmp = path.with_extension("tmp");
            let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            write_grid(&mut f, &key, g)?;
            f.flush()?;
            drop(f);
            std::fs::rename(tmp, path)?;
        }
        Ok(mu)
    }
}

fn write_grid<W: Write>(w: &mut W, key: &[u8; 32], g: &DenseGrid) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_u32::<LittleEndian>(CACHE_VERSION)?;
    w.write_all(key)?;
    let entries = g.entries();
    w.write_u32::<LittleEndian>(g.dim() as u32)?;
    w.write_u64::<LittleEndian>(entries.len() as u64)?;
    for (k, m) in entries {
        for v in k {
            w.write_i64::<LittleEndian>(v)?;
        }
        w.write_f64::<LittleEndian>(m)?;
    }
    Ok(())
}

fn read_grid<R: Read>(r: &mut R, key: &[u8; 32]) -> Result<DenseGrid> {
    let bad = |s: &str| Error::Parse(format!("measure cache: {s}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC || r.read_u32::<LittleEndian>()? != CACHE_VERSION {
        return Err(bad("bad header"));
    }
    let mut stored = [0u8; 32];
    r.read_exact(&mut stored)?;
    if &stored != key {
        return Err(bad("key mismatch"));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let k = (0..dim).map(|_| r.read_i64::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
        entries.push((k, r.read_f64::<LittleEndian>()?));
    }
    Ok(DenseGrid::from_entries(dim, &entries))
}

/// Exact measure keyed by offset, for comparisons with brute force.
pub fn exact_masses(mu: &LatticeMeasure) -> Option<&BTreeMap<Vec<i64>, BigRational>> {
    match &mu.masses {
        Masses::Exact(m) => Some(m),
        Masses::Float(_) => None,
    }
}

/// Accumulated `Σ_{k ≤ n} E[h(x + S(k)); τ_x = k]` per step, together with
/// truncated expectations; the inputs of the telescoping identity.
#[derive(Clone, Debug)]
pub struct Telescoping {
    pub truncated_h: Vec<f64>,
    pub exit_h: Vec<f64>,
    pub h_start: f64,
}

pub fn dp_telescoping(cone: &HarmonicCone, x: &[f64], dist: &IncrementDistribution, n: usize) -> Result<Telescoping> {
    let opts = DpOptions::default();
    let setup = DpSetup::new(cone, x, dist, opts)?;
    setup.check_feasible(n, opts)?;
    let geom = setup.geometry.clone();
    let mut dp = setup.dp();
    let mut truncated_h = vec![dp.truncated_h()];
    let mut exit_h = vec![0.0];
    let mut cum = 0.0;
    for _ in 0..n {
        let mut killed = 0.0;
        dp.step_with(|k, m| killed += geom.h_at(k) * m);
        cum += killed;
        exit_h.push(cum);
        truncated_h.push(dp.truncated_h());
    }
    Ok(Telescoping { truncated_h, exit_h, h_start: cone.evaluate_h(x) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ChamberFamily;
    use rand::SeedableRng;

    fn half_line() -> HarmonicCone {
        HarmonicCone::weyl_chamber(ChamberFamily::C, 1).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn half_line_measure_after_three_steps() {
        let mu = dp_survival_measure_exact(
            &half_line(),
            &[1.0],
            &IncrementDistribution::rademacher(),
            3,
            DpOptions::default(),
        )
        .unwrap();
        let m = exact_masses(&mu).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[&vec![1]], q(1, 4));
        assert_eq!(m[&vec![3]], q(1, 8));
        assert_eq!(mu.position(&[1]), vec![2.0]);
        assert_eq!(mu.total_exact().unwrap(), q(3, 8));
    }

    #[test]
    fn survival_examples() {
        let r = IncrementDistribution::rademacher();
        let c = dp_survival_prob(&half_line(), &[1.0], &r, &[1, 2, 3]).unwrap();
        assert_eq!(c.estimates, vec![0.5, 0.5, 0.375]);
        assert!(c.std_errors.iter().all(|&s| s == 0.0));
        let a2 = HarmonicCone::weyl_chamber(ChamberFamily::A, 2).unwrap();
        assert_eq!(dp_survival_prob(&a2, &[0.0, 2.0], &r, &[1]).unwrap().estimates, vec![0.75]);
        let mu = dp_survival_measure(&half_line(), &[1.0], &r, 0).unwrap();
        assert_eq!(mu.entries(), vec![(vec![0], 1.0)]);
        assert_eq!(dp_truncated_h(&half_line(), &[1.0], &r, 2).unwrap(), 1.0);
        assert_eq!(dp_truncated_h(&half_line(), &[1.0], &r, 0).unwrap(), 1.0);
    }

    #[test]
    fn non_lattice_law_is_rejected() {
        let err = dp_survival_prob(&half_line(), &[1.0], &IncrementDistribution::exp_centered(), &[1]).unwrap_err();
        assert!(err.to_string().contains("walk"), "{err}");
    }

    #[test]
    fn brute_force_matches_dp_on_a2() {
        let a2 = HarmonicCone::weyl_chamber(ChamberFamily::A, 2).unwrap();
        let r = IncrementDistribution::rademacher();
        for n in 0..=6 {
            let bf = brute_force_enumerate(&a2, &[0.0, 2.0], &r, n, BRUTE_FORCE_BUDGET).unwrap();
            let mu = dp_survival_measure_exact(&a2, &[0.0, 2.0], &r, n, DpOptions::unreduced()).unwrap();
            assert_eq!(&bf.endpoint, exact_masses(&mu).unwrap(), "n = {n}");
        }
        let bf = brute_force_enumerate(&half_line(), &[1.0], &r, 3, BRUTE_FORCE_BUDGET).unwrap();
        assert_eq!(bf.survival, q(3, 8));
        let err = brute_force_enumerate(&a2, &[0.0, 2.0], &r, 20, 1e4).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }), "{err}");
    }

    #[test]
    fn conditioned_paths_stay_inside() {
        let r = IncrementDistribution::rademacher();
        let s = ConditionedSampler::new(&half_line(), &[1.0], &r, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(s.sample(&mut rng), vec![vec![1.0], vec![2.0]]);
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        let s = ConditionedSampler::new(&c2, &[1.0, 2.0], &r, 20).unwrap();
        for _ in 0..100 {
            let p = s.sample(&mut rng);
            assert_eq!(p.len(), 21);
            assert!(p.iter().all(|y| c2.contains(y)));
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = MeasureCache::new(dir.path()).unwrap();
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        let r = IncrementDistribution::rademacher();
        let a = cache.measure(&c2, &[1.0, 2.0], &r, 12, DpOptions::default()).unwrap();
        let b = cache.measure(&c2, &[1.0, 2.0], &r, 12, DpOptions::default()).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
