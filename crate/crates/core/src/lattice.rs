//! Lattice machinery shared by the exact oracle and the harmonic estimators:
//! step kernels on `Z^m`, walk geometry (with the optional reduction to gap
//! coordinates for cones invariant along the diagonal) and dense
//! sub-probability grids.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::cone::HarmonicCone;
use crate::error::{Error, Result};
use crate::exact::Surd;
use crate::increments::IncrementDistribution;

/// Masses below this are dropped after each step.
pub const PRUNE_THRESHOLD: f64 = 1e-300;

/// Upper bound on dense grid cells held by one DP query.
pub const MAX_STATES: u128 = 400_000_000;

#[derive(Clone, Debug)]
pub struct KernelStep {
    pub disp: Vec<i64>,
    pub prob: f64,
    pub exact: BigRational,
}

/// One-step law of the `m`-dimensional walk in lattice units.
#[derive(Clone, Debug)]
pub struct LatticeKernel {
    dim: usize,
    mesh: f64,
    mesh_exact: Surd,
    steps: Vec<KernelStep>,
}

impl LatticeKernel {
    /// The `d`-fold product of a lattice law.
    pub fn product(dist: &IncrementDistribution, d: usize) -> Result<Self> {
        let lat = dist.lattice().ok_or_else(|| Error::NotLattice(dist.name()))?;
        if lat.offset != 0.0 {
            return Err(Error::NotLattice(format!("{} (nonzero lattice offset)", dist.name())));
        }
        let mut acc: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
        acc.insert(Vec::new(), BigRational::one());
        for _ in 0..d {
            let mut next = BTreeMap::new();
            for (prefix, p) in &acc {
                for (u, q) in lat.units.iter().zip(&lat.probs) {
                    let mut v = prefix.clone();
                    v.push(*u);
                    *next.entry(v).or_insert_with(BigRational::zero) += p * q;
                }
            }
            acc = next;
        }
        Ok(Self::from_map(d, lat.mesh, lat.mesh_exact.clone(), acc))
    }

    fn from_map(dim: usize, mesh: f64, mesh_exact: Surd, map: BTreeMap<Vec<i64>, BigRational>) -> Self {
        let steps = map
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(disp, exact)| KernelStep { disp, prob: exact.to_f64().unwrap(), exact })
            .collect();
        Self { dim, mesh, mesh_exact, steps }
    }

    /// Pushforward under an integer linear map.
    pub fn map(&self, matrix: &[Vec<i64>]) -> Self {
        let mut acc: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
        for s in &self.steps {
            let img = apply_int(matrix, &s.disp);
            *acc.entry(img).or_insert_with(BigRational::zero) += &s.exact;
        }
        Self::from_map(matrix.len(), self.mesh, self.mesh_exact.clone(), acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn steps(&self) -> &[KernelStep] {
        &self.steps
    }

    pub fn support_size(&self) -> usize {
        self.steps.len()
    }

    fn extent(&self) -> (Vec<i64>, Vec<i64>) {
        let lo = (0..self.dim).map(|j| self.steps.iter().map(|s| s.disp[j]).min().unwrap()).collect();
        let hi = (0..self.dim).map(|j| self.steps.iter().map(|s| s.disp[j]).max().unwrap()).collect();
        (lo, hi)
    }
}

fn apply_int(matrix: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    matrix.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Exact sign evaluation of a form `a + √m·b` at integer points, with
/// integer coefficients sharing one positive denominator.
#[derive(Clone, Debug)]
struct IntForm {
    rat: Vec<i128>,
    irr: Vec<i128>,
    radicand: i128,
    base_rat: i128,
    base_irr: i128,
}

impl IntForm {
    fn new(coeffs: &[Surd], base: &[i64]) -> Option<Self> {
        let mut den = BigInt::one();
        for c in coeffs {
            den = den.lcm(c.rational_part().denom());
            den = den.lcm(c.surd_part().denom());
        }
        let to_int = |q: &BigRational| (q * BigRational::from_integer(den.clone())).to_integer().to_i128();
        let rat = coeffs.iter().map(|c| to_int(c.rational_part())).collect::<Option<Vec<_>>>()?;
        let irr = coeffs.iter().map(|c| to_int(c.surd_part())).collect::<Option<Vec<_>>>()?;
        let radicand = coeffs.iter().map(Surd::radicand).max().unwrap_or(1) as i128;
        let dot = |w: &[i128]| w.iter().zip(base).map(|(a, &b)| a * b as i128).sum::<i128>();
        Some(Self { base_rat: dot(&rat), base_irr: dot(&irr), rat, irr, radicand })
    }

    #[inline]
    fn positive_at(&self, k: &[i64]) -> bool {
        let mut a = self.base_rat;
        let mut b = self.base_irr;
        for ((r, i), &kj) in self.rat.iter().zip(&self.irr).zip(k) {
            a += r * kj as i128;
            b += i * kj as i128;
        }
        match (a.signum(), b.signum()) {
            (1, s) if s >= 0 => true,
            (s, 1) if s >= 0 => true,
            (1, -1) => a * a > self.radicand * b * b,
            (-1, 1) => self.radicand * b * b > a * a,
            _ => false,
        }
    }
}

/// How the DP coordinates relate to the cone.
#[derive(Clone, Debug)]
pub struct WalkGeometry {
    dim: usize,
    mesh: f64,
    // form coefficients in walk coordinates
    forms: Vec<Vec<f64>>,
    forms_exact: Vec<Vec<Surd>>,
    start: Vec<f64>,
    aligned: Option<Vec<i64>>,
    exact_forms: Option<Vec<IntForm>>,
    // start value of each form and its per-unit increments
    base_values: Vec<f64>,
    unit_values: Vec<Vec<f64>>,
    reduction: Option<Vec<Vec<i64>>>,
    interior_direction: Vec<f64>,
}

impl WalkGeometry {
    pub fn new(cone: &HarmonicCone, x: &[f64], mesh: f64, reduce: bool) -> Result<Self> {
        let d = cone.dimension();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        if !cone.contains(x) {
            return Err(Error::OutsideCone(x.to_vec()));
        }
        let diagonal_invariant =
            d >= 2 && cone.forms().iter().all(|f| f.coefficients().iter().fold(Surd::zero(), |s, c| s + c).is_zero());
        let reduction = (reduce && diagonal_invariant).then(|| gap_matrix(d));
        let (forms_exact, start, dir): (Vec<Vec<Surd>>, Vec<f64>, Vec<f64>) = match &reduction {
            None => (
                cone.forms().iter().map(|f| f.coefficients().to_vec()).collect(),
                x.to_vec(),
                cone.interior_direction().to_vec(),
            ),
            Some(b) => (
                cone.forms().iter().map(|f| reduce_form(f.coefficients())).collect(),
                apply_f64(b, x),
                apply_f64(b, cone.interior_direction()),
            ),
        };
        let dim = start.len();
        let forms: Vec<Vec<f64>> = forms_exact.iter().map(|f| f.iter().map(Surd::to_f64).collect()).collect();
        let units: Vec<f64> = x.iter().map(|v| v / mesh).collect();
        let aligned_full = units
            .iter()
            .all(|u| (u - u.round()).abs() < 1e-9 * (1.0 + u.abs()))
            .then(|| units.iter().map(|u| u.round() as i64).collect::<Vec<_>>());
        let aligned = aligned_full.map(|u| match &reduction {
            None => u,
            Some(b) => apply_int(b, &u),
        });
        let exact_forms =
            aligned.as_ref().and_then(|u| forms_exact.iter().map(|f| IntForm::new(f, u)).collect::<Option<Vec<_>>>());
        let base_values = forms.iter().map(|f| dot(f, &start)).collect();
        let unit_values = forms.iter().map(|f| f.iter().map(|a| a * mesh).collect()).collect();
        let geom = Self {
            dim,
            mesh,
            forms,
            forms_exact,
            start,
            aligned,
            exact_forms,
            base_values,
            unit_values,
            reduction,
            interior_direction: dir,
        };
        if !geom.inside(&vec![0; dim]) {
            return Err(Error::OutsideCone(x.to_vec()));
        }
        Ok(geom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn is_aligned(&self) -> bool {
        self.exact_forms.is_some()
    }

    pub fn aligned_start(&self) -> Option<&[i64]> {
        self.aligned.as_deref()
    }

    /// The gap map when the walk runs in reduced coordinates.
    pub fn reduction(&self) -> Option<&[Vec<i64>]> {
        self.reduction.as_deref()
    }

    /// Interior direction mapped into walk coordinates.
    pub fn interior_direction(&self) -> &[f64] {
        &self.interior_direction
    }

    pub fn forms(&self) -> &[Vec<f64>] {
        &self.forms
    }

    pub fn forms_exact(&self) -> &[Vec<Surd>] {
        &self.forms_exact
    }

    /// Covariance of the image of a standard Gaussian in walk coordinates.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        match &self.reduction {
            None => (0..self.dim).map(|i| (0..self.dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            Some(b) => b
                .iter()
                .map(|ri| b.iter().map(|rj| ri.iter().zip(rj).map(|(p, q)| (p * q) as f64).sum()).collect())
                .collect(),
        }
    }

    #[inline]
    pub fn inside(&self, k: &[i64]) -> bool {
        match &self.exact_forms {
            Some(forms) => forms.iter().all(|f| f.positive_at(k)),
            None => (0..self.forms.len()).all(|i| self.form_value(i, k) > 0.0),
        }
    }

    #[inline]
    fn form_value(&self, i: usize, k: &[i64]) -> f64 {
        let u = &self.unit_values[i];
        let mut v = self.base_values[i];
        for j in 0..k.len() {
            v += u[j] * k[j] as f64;
        }
        v
    }

    pub fn position(&self, k: &[i64]) -> Vec<f64> {
        self.start.iter().zip(k).map(|(s, &kj)| s + self.mesh * kj as f64).collect()
    }

    /// `h` at the lattice point `k`.
    #[inline]
    pub fn h_at(&self, k: &[i64]) -> f64 {
        (0..self.forms.len()).map(|i| self.form_value(i, k)).product()
    }

    /// `h` at an arbitrary point in walk coordinates.
    pub fn h_pos(&self, y: &[f64]) -> f64 {
        self.forms.iter().map(|f| dot(f, y)).product()
    }

    pub fn contains_pos(&self, y: &[f64]) -> bool {
        self.forms.iter().all(|f| dot(f, y) > 0.0)
    }

    pub fn min_form_value(&self, y: &[f64]) -> f64 {
        self.forms.iter().map(|f| dot(f, y)).fold(f64::INFINITY, f64::min)
    }

    /// `h(x)` exactly at an aligned lattice point, scaled by `mesh^p`.
    pub fn h_exact_units(&self, k: &[i64]) -> Option<Surd> {
        let base = self.aligned.as_ref()?;
        let pt: Vec<Surd> = base.iter().zip(k).map(|(b, kk)| Surd::from_integer(b + kk)).collect();
        let mut out = Surd::one();
        for f in &self.forms_exact {
            let mut v = Surd::zero();
            for (a, p) in f.iter().zip(&pt) {
                v += &(a * p);
            }
            out *= &v;
        }
        Some(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn apply_f64(matrix: &[Vec<i64>], v: &[f64]) -> Vec<f64> {
    matrix.iter().map(|row| row.iter().zip(v).map(|(a, b)| *a as f64 * b).sum()).collect()
}

/// `u_i = y_{i+1} − y_i`.
pub fn gap_matrix(d: usize) -> Vec<Vec<i64>> {
    (0..d - 1)
        .map(|i| {
            let mut row = vec![0; d];
            row[i] = -1;
            row[i + 1] = 1;
            row
        })
        .collect()
}

/// A form with zero coefficient sum written in gap coordinates:
/// `⟨y, α⟩ = Σ_i u_i Σ_{j>i} α_j`.
fn reduce_form(alpha: &[Surd]) -> Vec<Surd> {
    (0..alpha.len() - 1).map(|i| alpha[i + 1..].iter().fold(Surd::zero(), |s, a| s + a)).collect()
}

/// Dense sub-probability grid over a box of lattice offsets.
#[derive(Clone, Debug)]
pub struct DenseGrid {
    lo: Vec<i64>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseGrid {
    pub fn point_mass(dim: usize) -> Self {
        Self { lo: vec![0; dim], shape: vec![1; dim], data: vec![1.0] }
    }

    pub fn empty(dim: usize) -> Self {
        Self { lo: vec![0; dim], shape: vec![0; dim], data: Vec::new() }
    }

    pub fn from_entries(dim: usize, entries: &[(Vec<i64>, f64)]) -> Self {
        if entries.is_empty() {
            return Self::empty(dim);
        }
        let lo: Vec<i64> = (0..dim).map(|j| entries.iter().map(|e| e.0[j]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..dim).map(|j| entries.iter().map(|e| e.0[j]).max().unwrap()).collect();
        let shape: Vec<usize> = (0..dim).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
        let mut g = Self { lo, shape, data: Vec::new() };
        g.data = vec![0.0; g.shape.iter().product()];
        let strides = g.strides();
        for (k, m) in entries {
            let idx: usize = (0..dim).map(|j| (k[j] - g.lo[j]) as usize * strides[j]).sum();
            g.data[idx] = *m;
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cells(&self) -> usize {
        self.data.len()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for j in (0..self.shape.len().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.shape[j + 1];
        }
        s
    }

    pub fn get(&self, k: &[i64]) -> f64 {
        let strides = self.strides();
        let mut idx = 0usize;
        for j in 0..k.len() {
            let off = k[j] - self.lo[j];
            if off < 0 || off as usize >= self.shape[j] {
                return 0.0;
            }
            idx += off as usize * strides[j];
        }
        self.data[idx]
    }

    /// Visits every nonzero cell as `(offset, mass)`.
    pub fn for_each(&self, mut f: impl FnMut(&[i64], f64)) {
        let mut k = self.lo.clone();
        if self.data.is_empty() {
            return;
        }
        for &m in &self.data {
            if m != 0.0 {
                f(&k, m);
            }
            odometer(&mut k, &self.lo, &self.shape);
        }
    }

    pub fn entries(&self) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::new();
        self.for_each(|k, m| out.push((k.to_vec(), m)));
        out
    }
}

#[inline]
fn odometer(k: &mut [i64], lo: &[i64], shape: &[usize]) {
    for j in (0..k.len()).rev() {
        k[j] += 1;
        if ((k[j] - lo[j]) as usize) < shape[j] {
            return;
        }
        k[j] = lo[j];
    }
}

/// Killed mass of one step: `(offset, mass)` pairs for points that left the
/// cone.
pub type KilledMass = Vec<(Vec<i64>, f64)>;

/// Forward dynamic program for `μ_n(y) = P(x + S(n) = y, τ_x > n)`.
#[derive(Clone, Debug)]
pub struct SurvivalDp {
    geometry: Arc<WalkGeometry>,
    kernel: Arc<LatticeKernel>,
    grid: DenseGrid,
    step_index: usize,
    pruned: f64,
}

impl SurvivalDp {
    pub fn new(geometry: Arc<WalkGeometry>, kernel: Arc<LatticeKernel>) -> Result<Self> {
        if geometry.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch { expected: geometry.dim(), got: kernel.dim() });
        }
        let dim = geometry.dim();
        Ok(Self { geometry, kernel, grid: DenseGrid::point_mass(dim), step_index: 0, pruned: 0.0 })
    }

    /// Rough upper bound of the cells touched by `n` steps, for rejecting
    /// infeasible requests before running them.
    pub fn estimated_states(kernel: &LatticeKernel, n: usize) -> u128 {
        let (lo, hi) = kernel.extent();
        lo.iter().zip(&hi).map(|(a, b)| (n as u128) * ((b - a) as u128) + 1).product()
    }

    pub fn geometry(&self) -> &Arc<WalkGeometry> {
        &self.geometry
    }

    pub fn kernel(&self) -> &Arc<LatticeKernel> {
        &self.kernel
    }

    pub fn grid(&self) -> &DenseGrid {
        &self.grid
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn total(&self) -> f64 {
        self.grid.total()
    }

    /// Mass dropped by underflow pruning so far.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned
    }

    /// Advances one step; `on_killed` sees each exited lattice point with
    /// its mass.
    pub fn step_with(&mut self, mut on_killed: impl FnMut(&[i64], f64)) {
        let dim = self.grid.dim();
        let (klo, khi) = self.kernel.extent();
        if self.grid.data.is_empty() {
            self.step_index += 1;
            return;
        }
        let new_lo: Vec<i64> = (0..dim).map(|j| self.grid.lo[j] + klo[j]).collect();
        let new_shape: Vec<usize> = (0..dim).map(|j| self.grid.shape[j] + (khi[j] - klo[j]) as usize).collect();
        let mut new_data = vec![0.0; new_shape.iter().product()];
        let mut new_strides = vec![1usize; dim];
        for j in (0..dim.saturating_sub(1)).rev() {
            new_strides[j] = new_strides[j + 1] * new_shape[j + 1];
        }
        // offset of each kernel step relative to the source cell's image
        let offsets: Vec<(usize, f64)> = self
            .kernel
            .steps
            .iter()
            .map(|s| {
                let off: usize = (0..dim).map(|j| (s.disp[j] - klo[j]) as usize * new_strides[j]).sum();
                (off, s.prob)
            })
            .collect();

        // scatter: source cell at box offset c lands at new box offset c (+ step shift)
        let last = self.grid.shape[dim - 1];
        let rows = self.grid.data.len() / last.max(1);
        let mut row_k = vec![0usize; dim.saturating_sub(1)];
        for r in 0..rows {
            let mut base = 0usize;
            for j in 0..dim - 1 {
                base += row_k[j] * new_strides[j];
            }
            let src = &self.grid.data[r * last..(r + 1) * last];
            for (t, &m) in src.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let b = base + t;
                for &(off, p) in &offsets {
                    new_data[b + off] += m * p;
                }
            }
            for j in (0..dim - 1).rev() {
                row_k[j] += 1;
                if row_k[j] < self.grid.shape[j] {
                    break;
                }
                row_k[j] = 0;
            }
        }

        // kill, prune and find the new bounding box
        let geom = &*self.geometry;
        let mut bb_lo = vec![i64::MAX; dim];
        let mut bb_hi = vec![i64::MIN; dim];
        let mut k = new_lo.clone();
        let mut pruned = 0.0;
        for cell in new_data.iter_mut() {
            let m = *cell;
            if m != 0.0 {
                if !geom.inside(&k) {
                    on_killed(&k, m);
                    *cell = 0.0;
                } else if m < PRUNE_THRESHOLD {
                    pruned += m;
                    *cell = 0.0;
                } else {
                    for j in 0..dim {
                        bb_lo[j] = bb_lo[j].min(k[j]);
                        bb_hi[j] = bb_hi[j].max(k[j]);
                    }
                }
            }
            odometer(&mut k, &new_lo, &new_shape);
        }
        self.pruned += pruned;
        self.step_index += 1;
        if bb_lo[0] == i64::MAX {
            self.grid = DenseGrid::empty(dim);
            return;
        }
        let full = DenseGrid { lo: new_lo, shape: new_shape, data: new_data };
        self.grid = crop(&full, &bb_lo, &bb_hi);
    }

    pub fn step(&mut self) {
        self.step_with(|_, _| {});
    }

    pub fn step_collect(&mut self) -> KilledMass {
        let mut killed = Vec::new();
        self.step_with(|k, m| killed.push((k.to_vec(), m)));
        killed
    }

    pub fn run_to(&mut self, n: usize) {
        while self.step_index < n {
            self.step();
        }
    }

    /// `Σ_y g(y)·μ_n(y)` with `y` in walk coordinates.
    pub fn integrate(&self, mut g: impl FnMut(&[i64]) -> f64) -> f64 {
        let mut total = 0.0;
        self.grid.for_each(|k, m| total += g(k) * m);
        total
    }

    pub fn truncated_h(&self) -> f64 {
        let geom = &*self.geometry;
        self.integrate(|k| geom.h_at(k))
    }
}

fn crop(full: &DenseGrid, lo: &[i64], hi: &[i64]) -> DenseGrid {
    let dim = lo.len();
    let shape: Vec<usize> = (0..dim).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
    if shape == full.shape {
        return full.clone();
    }
    let mut data = vec![0.0; shape.iter().product()];
    let full_strides = full.strides();
    let last = shape[dim - 1];
    let rows = data.len() / last;
    let mut row_k = vec![0usize; dim - 1];
    for r in 0..rows {
        let mut src = 0usize;
        for j in 0..dim - 1 {
            src += (row_k[j] as i64 + lo[j] - full.lo[j]) as usize * full_strides[j];
        }
        src += (lo[dim - 1] - full.lo[dim - 1]) as usize;
        data[r * last..(r + 1) * last].copy_from_slice(&full.data[src..src + last]);
        for j in (0..dim - 1).rev() {
            row_k[j] += 1;
            if row_k[j] < shape[j] {
                break;
            }
            row_k[j] = 0;
        }
    }
    DenseGrid { lo: lo.to_vec(), shape, data }
}

/// Exact rational version of [`SurvivalDp`] for small instances.
#[derive(Clone, Debug)]
pub struct ExactDp {
    geometry: Arc<WalkGeometry>,
    kernel: Arc<LatticeKernel>,
    masses: BTreeMap<Vec<i64>, BigRational>,
    step_index: usize,
}

impl ExactDp {
    pub const MAX_DIM: usize = 2;
    pub const MAX_STEPS: usize = 64;

    pub fn new(geometry: Arc<WalkGeometry>, kernel: Arc<LatticeKernel>) -> Result<Self> {
        if !geometry.is_aligned() {
            return Err(Error::NotLatticeAligned(geometry.start().to_vec()));
        }
        if geometry.dim() > Self::MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "exact rational DP is limited to dimension <= {}",
                Self::MAX_DIM
            )));
        }
        let mut masses = BTreeMap::new();
        masses.insert(vec![0; geometry.dim()], BigRational::one());
        Ok(Self { geometry, kernel, masses, step_index: 0 })
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn masses(&self) -> &BTreeMap<Vec<i64>, BigRational> {
        &self.masses
    }

    pub fn total(&self) -> BigRational {
        self.masses.values().sum()
    }

    pub fn step(&mut self) -> Result<BTreeMap<Vec<i64>, BigRational>> {
        if self.step_index >= Self::MAX_STEPS {
            return Err(Error::InvalidArgument(format!("exact rational DP is capped at n <= {}", Self::MAX_STEPS)));
        }
        let mut next: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
        for (k, m) in &self.masses {
            for s in &self.kernel.steps {
                let y: Vec<i64> = k.iter().zip(&s.disp).map(|(a, b)| a + b).collect();
                *next.entry(y).or_insert_with(BigRational::zero) += m * &s.exact;
            }
        }
        let (inside, killed): (BTreeMap<_, _>, BTreeMap<_, _>) =
            next.into_iter().partition(|(k, _)| self.geometry.inside(k));
        self.masses = inside;
        self.step_index += 1;
        Ok(killed)
    }

    pub fn run_to(&mut self, n: usize) -> Result<()> {
        while self.step_index < n {
            self.step()?;
        }
        Ok(())
    }
}
