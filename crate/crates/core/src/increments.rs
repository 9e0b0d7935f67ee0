//! Standardized step laws (mean 0, variance 1) with exact moments,
//! samplers and lattice metadata.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::cone::{Coefficient, HarmonicCone};
use crate::error::{Error, Result};
use crate::exact::{rational_gcd, Surd};

#[derive(Clone, Debug, PartialEq)]
pub enum IncrementKind {
    Rademacher,
    LazyRademacher {
        q: BigRational,
    },
    UniformStd,
    ExpCentered,
    ParetoStd {
        a: BigRational,
    },
    /// Raw support values with probabilities, standardized on construction.
    Discrete {
        values: Vec<BigRational>,
        probs: Vec<BigRational>,
    },
}

/// Support of a lattice law: `X ∈ offset + mesh·Z`, with the atoms given
/// as integer multiples of the mesh.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub mesh: f64,
    pub mesh_exact: Surd,
    pub offset: f64,
    pub units: Vec<i64>,
    pub probs: Vec<BigRational>,
}

impl Lattice {
    pub fn float_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64().unwrap()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct IncrementDistribution {
    kind: IncrementKind,
    lattice: Option<Lattice>,
    heavy_tail_index: f64,
    // float atoms (value, cumulative probability) for finite laws
    atoms: Vec<(f64, f64)>,
    scale: f64,
    pareto_shape: f64,
}

impl IncrementDistribution {
    pub fn rademacher() -> Self {
        Self::from_kind(IncrementKind::Rademacher).expect("rademacher is valid")
    }

    pub fn lazy_rademacher(q: f64) -> Result<Self> {
        let q = decimal_rational(q)?;
        Self::from_kind(IncrementKind::LazyRademacher { q })
    }

    pub fn uniform_std() -> Self {
        Self::from_kind(IncrementKind::UniformStd).expect("valid")
    }

    pub fn exp_centered() -> Self {
        Self::from_kind(IncrementKind::ExpCentered).expect("valid")
    }

    pub fn pareto_std(a: f64) -> Result<Self> {
        let a = decimal_rational(a)?;
        Self::from_kind(IncrementKind::ParetoStd { a })
    }

    pub fn discrete(values: Vec<BigRational>, probs: Vec<BigRational>) -> Result<Self> {
        Self::from_kind(IncrementKind::Discrete { values, probs })
    }

    /// The asymmetric lattice law used throughout the test suite:
    /// `{−1, 0, 2}` with masses `2/15, 12/15, 1/15`, scaled to unit variance
    /// (scale `√(5/2)`, third moment `√10/2`).
    pub fn asymmetric_three_point() -> Self {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        Self::discrete(vec![q(-1, 1), q(0, 1), q(2, 1)], vec![q(2, 15), q(12, 15), q(1, 15)])
            .expect("valid three-point law")
    }

    pub fn from_kind(kind: IncrementKind) -> Result<Self> {
        let two = BigRational::from_integer(BigInt::from(2));
        let mut out = Self {
            kind: kind.clone(),
            lattice: None,
            heavy_tail_index: f64::INFINITY,
            atoms: Vec::new(),
            scale: 1.0,
            pareto_shape: 0.0,
        };
        match &kind {
            IncrementKind::Rademacher => {
                out.lattice = Some(Lattice {
                    mesh: 1.0,
                    mesh_exact: Surd::one(),
                    offset: 0.0,
                    units: vec![-1, 1],
                    probs: vec![BigRational::new(1.into(), 2.into()); 2],
                });
            }
            IncrementKind::LazyRademacher { q } => {
                if !(q.is_positive() && q < &BigRational::one()) {
                    return Err(Error::InvalidArgument(format!("lazy_rademacher needs q in (0,1), got {q}")));
                }
                let move_mass = BigRational::one() - q;
                let mesh_exact = Surd::sqrt_of(&move_mass.recip())?;
                let half = &move_mass / &two;
                out.lattice = Some(Lattice {
                    mesh: mesh_exact.to_f64(),
                    mesh_exact,
                    offset: 0.0,
                    units: vec![-1, 0, 1],
                    probs: vec![half.clone(), q.clone(), half],
                });
            }
            IncrementKind::UniformStd | IncrementKind::ExpCentered => {}
            IncrementKind::ParetoStd { a } => {
                if a <= &two {
                    return Err(Error::InvalidArgument(format!("pareto_std needs a > 2, got {a}")));
                }
                let af = a.to_f64().unwrap();
                out.heavy_tail_index = af;
                out.pareto_shape = af;
                out.scale = ((af - 1.0) * (af - 2.0) / 2.0).sqrt();
            }
            IncrementKind::Discrete { values, probs } => {
                out.lattice = Some(discrete_lattice(values, probs)?);
            }
        }
        if let Some(l) = &out.lattice {
            let mut acc = 0.0;
            out.atoms = l
                .units
                .iter()
                .zip(l.float_probs())
                .map(|(&u, p)| {
                    acc += p;
                    (u as f64 * l.mesh + l.offset, acc)
                })
                .collect();
            if let Some(last) = out.atoms.last_mut() {
                last.1 = 1.0;
            }
        }
        Ok(out)
    }

    pub fn kind(&self) -> &IncrementKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            IncrementKind::Rademacher => "rademacher".into(),
            IncrementKind::LazyRademacher { q } => format!("lazy_rademacher({q})"),
            IncrementKind::UniformStd => "uniform_std".into(),
            IncrementKind::ExpCentered => "exp_centered".into(),
            IncrementKind::ParetoStd { a } => format!("pareto_std({})", a.to_f64().unwrap()),
            IncrementKind::Discrete { values, probs } => {
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                let p: Vec<String> = probs.iter().map(|x| x.to_string()).collect();
                format!("discrete([{}];[{}])", v.join(","), p.join(","))
            }
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn heavy_tail_index(&self) -> f64 {
        self.heavy_tail_index
    }

    pub fn is_symmetric(&self) -> bool {
        (1..=9).step_by(2).all(|k| self.moment(k).map(|m| m.is_zero()).unwrap_or(true))
    }

    /// Exact raw moment `E[X^k]`.
    pub fn moment(&self, k: u32) -> Result<Surd> {
        if k == 0 {
            return Ok(Surd::one());
        }
        let unavailable = || Error::MomentUnavailable { kind: self.name(), order: k };
        let int = |n: i64| BigRational::from_integer(BigInt::from(n));
        match &self.kind {
            IncrementKind::Rademacher => Ok(if k.is_multiple_of(2) { Surd::one() } else { Surd::zero() }),
            IncrementKind::LazyRademacher { q } => {
                if k % 2 == 1 {
                    return Ok(Surd::zero());
                }
                // (1−q)·s^k with s² = 1/(1−q)
                let move_mass = BigRational::one() - q;
                Ok(Surd::from_rational(rational_pow(&move_mass, 1 - (k as i32) / 2)))
            }
            IncrementKind::UniformStd => {
                if k % 2 == 1 {
                    return Ok(Surd::zero());
                }
                let j = k / 2;
                Ok(Surd::from_rational(BigRational::new(BigInt::from(3).pow(j), BigInt::from(2 * j + 1))))
            }
            IncrementKind::ExpCentered => {
                // central moments of Exp(1) are the derangement numbers
                let (mut prev, mut cur) = (BigInt::one(), BigInt::zero());
                for n in 2..=k {
                    let next = BigInt::from(n - 1) * (&prev + &cur);
                    prev = cur;
                    cur = next;
                }
                Ok(Surd::from_rational(BigRational::from_integer(cur)))
            }
            IncrementKind::ParetoStd { a } => {
                if int(k as i64) >= *a {
                    return Err(unavailable());
                }
                if k % 2 == 1 {
                    return Ok(Surd::zero());
                }
                // E(P−1)^k with P ~ Pareto(a, 1), E P^j = a/(a−j)
                let mut raw = BigRational::zero();
                let mut binom = BigInt::one();
                for j in 0..=k {
                    let ep = if j == 0 { BigRational::one() } else { a / (a - int(j as i64)) };
                    let sign = if (k - j).is_multiple_of(2) { 1 } else { -1 };
                    raw += BigRational::from_integer(&binom * sign) * ep;
                    binom = binom * BigInt::from(k - j) / BigInt::from(j + 1);
                }
                let s2 = (a - int(1)) * (a - int(2)) / int(2);
                Ok(Surd::from_rational(raw * rational_pow(&s2, (k / 2) as i32)))
            }
            IncrementKind::Discrete { values, probs } => {
                let (mean, var) = mean_var(values, probs);
                let mut central = BigRational::zero();
                for (v, p) in values.iter().zip(probs) {
                    central += p * rational_pow(&(v - &mean), k as i32);
                }
                // divide by σ^k
                let even = rational_pow(&var, -((k / 2) as i32));
                if k.is_multiple_of(2) {
                    Ok(Surd::from_rational(central * even))
                } else {
                    let inv_sigma = Surd::sqrt_of(&var)?.recip();
                    Ok(inv_sigma.scale(&(central * even)))
                }
            }
        }
    }

    /// Moments `m_0..=m_max` where available.
    pub fn moment_table(&self, max: u32) -> Vec<(u32, Option<Surd>)> {
        (0..=max).map(|k| (k, self.moment(k).ok())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            IncrementKind::UniformStd => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            IncrementKind::ExpCentered => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            IncrementKind::ParetoStd { .. } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let y = u.powf(-1.0 / self.pareto_shape) - 1.0;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * y / self.scale
            }
            _ => {
                let u: f64 = rng.random();
                self.atoms.iter().find(|(_, c)| u < *c).unwrap_or(self.atoms.last().unwrap()).0
            }
        }
    }

    /// Index into the lattice atoms of a draw; lattice laws only.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.atoms.iter().position(|(_, c)| u < *c).unwrap_or(self.atoms.len() - 1)
    }

    /// Whether `E[|X|^s]` is finite.
    pub fn has_absolute_moment(&self, s: f64) -> bool {
        s < self.heavy_tail_index
    }

    pub fn validate_moment_assumption(&self, cone: &HarmonicCone) -> MomentReport {
        let r = cone.degree_r();
        if r <= 2 {
            // E|X|² log(1+|X|) < ∞: holds for every registered law
            // (pareto_std needs a > 2, which gives it as well)
            let ok = self.heavy_tail_index > 2.0;
            return MomentReport {
                required_order: r,
                log_condition: Some(ok),
                satisfied: ok,
                message: format!(
                    "{}: r = {r}, requires E[|X|^2 log(1+|X|)] < inf: {}",
                    self.name(),
                    if ok { "holds" } else { "fails" }
                ),
            };
        }
        let ok = self.has_absolute_moment(r as f64);
        MomentReport {
            required_order: r,
            log_condition: None,
            satisfied: ok,
            message: format!(
                "{}: r = {r}, requires E[|X|^{r}] < inf (tail index {}): {}",
                self.name(),
                self.heavy_tail_index,
                if ok { "holds" } else { "fails" }
            ),
        }
    }
}

/// The rational with the shortest decimal expansion that prints as `x`.
pub fn decimal_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite parameter {x}")));
    }
    crate::exact::parse_rational(&format!("{x}"))
}

impl fmt::Display for IncrementDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub required_order: u32,
    pub log_condition: Option<bool>,
    pub satisfied: bool,
    pub message: String,
}

fn rational_pow(q: &BigRational, e: i32) -> BigRational {
    if e >= 0 {
        num_traits::pow(q.clone(), e as usize)
    } else {
        num_traits::pow(q.recip(), (-e) as usize)
    }
}

fn mean_var(values: &[BigRational], probs: &[BigRational]) -> (BigRational, BigRational) {
    let mean: BigRational = values.iter().zip(probs).map(|(v, p)| v * p).sum();
    let var: BigRational = values.iter().zip(probs).map(|(v, p)| p * (v - &mean) * (v - &mean)).sum();
    (mean, var)
}

fn discrete_lattice(values: &[BigRational], probs: &[BigRational]) -> Result<Lattice> {
    if values.len() != probs.len() || values.len() < 2 {
        return Err(Error::InvalidArgument("discrete law needs >= 2 values with matching probabilities".into()));
    }
    if probs.iter().any(|p| !p.is_positive()) {
        return Err(Error::InvalidArgument("discrete probabilities must be positive".into()));
    }
    if probs.iter().sum::<BigRational>() != BigRational::one() {
        return Err(Error::InvalidArgument("discrete probabilities must sum to 1 exactly".into()));
    }
    let mut sorted: Vec<&BigRational> = values.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("discrete values must be distinct".into()));
    }
    let (mean, var) = mean_var(values, probs);
    let centered: Vec<BigRational> = values.iter().map(|v| v - &mean).collect();
    let g = centered.iter().fold(BigRational::zero(), |g, c| rational_gcd(&g, c));
    let units = centered
        .iter()
        .map(|c| (c / &g).to_integer().to_i64().ok_or_else(|| Error::InvalidArgument("support too wide".into())))
        .collect::<Result<Vec<_>>>()?;
    let inv_sigma = Surd::sqrt_of(&var)?.recip();
    let mesh_exact = inv_sigma.scale(&g);
    Ok(Lattice { mesh: mesh_exact.to_f64(), mesh_exact, offset: 0.0, units, probs: probs.to_vec() })
}

/// Distribution entry of a configuration file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub kind: String,
    pub q: Option<f64>,
    pub a: Option<f64>,
    pub values: Option<Vec<Coefficient>>,
    pub probs: Option<Vec<Coefficient>>,
}

impl DistSpec {
    pub fn named(kind: &str) -> Self {
        Self { kind: kind.into(), ..Default::default() }
    }

    pub fn build(&self) -> Result<IncrementDistribution> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("distribution {}: missing `{key}`", self.kind)))
        };
        match self.kind.as_str() {
            "rademacher" => Ok(IncrementDistribution::rademacher()),
            "lazy_rademacher" => IncrementDistribution::lazy_rademacher(need(self.q, "q")?),
            "uniform_std" => Ok(IncrementDistribution::uniform_std()),
            "exp_centered" => Ok(IncrementDistribution::exp_centered()),
            "pareto_std" => IncrementDistribution::pareto_std(need(self.a, "a")?),
            "asym3" => Ok(IncrementDistribution::asymmetric_three_point()),
            "discrete" => {
                let rationals = |xs: &Option<Vec<Coefficient>>, key: &str| -> Result<Vec<BigRational>> {
                    xs.as_ref()
                        .ok_or_else(|| Error::InvalidArgument(format!("distribution discrete: missing `{key}`")))?
                        .iter()
                        .map(|c| {
                            c.to_surd()?.to_rational().ok_or_else(|| {
                                Error::InvalidArgument(format!("distribution discrete: `{key}` must be rational"))
                            })
                        })
                        .collect()
                };
                IncrementDistribution::discrete(rationals(&self.values, "values")?, rationals(&self.probs, "probs")?)
            }
            other => Err(Error::InvalidArgument(format!("unknown distribution kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ChamberFamily;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(d: &IncrementDistribution, k: u32) -> f64 {
        d.moment(k).unwrap().to_f64()
    }

    #[test]
    fn standardization_is_exact() {
        let all = [
            IncrementDistribution::rademacher(),
            IncrementDistribution::lazy_rademacher(0.5).unwrap(),
            IncrementDistribution::lazy_rademacher(0.3).unwrap(),
            IncrementDistribution::uniform_std(),
            IncrementDistribution::exp_centered(),
            IncrementDistribution::pareto_std(3.5).unwrap(),
            IncrementDistribution::asymmetric_three_point(),
        ];
        for d in &all {
            assert_eq!(d.moment(0).unwrap(), Surd::one(), "{d}");
            assert_eq!(d.moment(1).unwrap(), Surd::zero(), "{d}");
            assert_eq!(d.moment(2).unwrap(), Surd::one(), "{d}");
        }
    }

    #[test]
    fn moment_examples() {
        let r = IncrementDistribution::rademacher();
        assert_eq!((m(&r, 3), m(&r, 4), m(&r, 7)), (0.0, 1.0, 0.0));
        assert_eq!(r.lattice().unwrap().mesh, 1.0);
        let e = IncrementDistribution::exp_centered();
        assert_eq!(e.moment(3).unwrap(), Surd::from_integer(2));
        assert_eq!(e.moment(4).unwrap(), Surd::from_integer(9));
        assert_eq!(e.moment(6).unwrap(), Surd::from_integer(265));
        let lazy = IncrementDistribution::lazy_rademacher(0.5).unwrap();
        let l = lazy.lattice().unwrap();
        assert!((l.mesh - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lazy.moment(4).unwrap(), Surd::from_integer(2));
        let p = IncrementDistribution::pareto_std(2.5).unwrap();
        assert!(matches!(p.moment(3), Err(Error::MomentUnavailable { order: 3, .. })));
        assert!(p.moment(2).is_ok());
    }

    #[test]
    fn asymmetric_law_exact_values() {
        let d = IncrementDistribution::asymmetric_three_point();
        let l = d.lattice().unwrap();
        assert_eq!(l.units, vec![-1, 0, 2]);
        assert!((l.mesh - 2.5f64.sqrt()).abs() < 1e-15);
        // m3 = c³·(−2 + 8)/15 = (5/2)^{3/2}·2/5 = √10/2
        let m3 = d.moment(3).unwrap();
        assert_eq!(m3.radicand(), 10);
        assert!((m3.to_f64() - 10f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(!d.is_symmetric());
    }

    #[test]
    fn parameter_validation() {
        assert!(IncrementDistribution::lazy_rademacher(1.0).is_err());
        assert!(IncrementDistribution::lazy_rademacher(0.0).is_err());
        assert!(IncrementDistribution::pareto_std(2.0).is_err());
        let q = |n: i64| BigRational::from_integer(BigInt::from(n));
        assert!(IncrementDistribution::discrete(vec![q(0), q(1)], vec![q(1), q(1)]).is_err());
        assert!(DistSpec::named("gauss").build().is_err());
        assert!(DistSpec::named("pareto_std").build().is_err());
    }

    #[test]
    fn moment_assumption_reports() {
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        assert!(IncrementDistribution::pareto_std(3.5).unwrap().validate_moment_assumption(&c2).satisfied);
        assert!(!IncrementDistribution::pareto_std(2.5).unwrap().validate_moment_assumption(&c2).satisfied);
        let rep = IncrementDistribution::rademacher().validate_moment_assumption(&c2);
        assert!(rep.satisfied);
        assert_eq!(rep.required_order, 3);
        let a3 = HarmonicCone::weyl_chamber(ChamberFamily::A, 3).unwrap();
        let rep = IncrementDistribution::pareto_std(2.1).unwrap().validate_moment_assumption(&a3);
        assert_eq!(rep.log_condition, Some(true));
    }

    #[test]
    fn sample_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = IncrementDistribution::rademacher();
        let u = IncrementDistribution::uniform_std();
        let e = IncrementDistribution::exp_centered();
        for _ in 0..10_000 {
            let x = r.sample(&mut rng);
            assert!(x == 1.0 || x == -1.0);
            assert!(u.sample(&mut rng).abs() <= 3f64.sqrt());
            assert!(e.sample(&mut rng) > -1.0);
        }
    }
}
