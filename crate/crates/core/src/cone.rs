//! Polynomial cones `K = {x : ⟨x, α_i⟩ > 0 for all i}` whose defining
//! product `h(x) = ∏ ⟨x, α_i⟩` is a harmonic polynomial.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{common_radicand, parse_surd, Surd};
use crate::polynomial::{FloatPolynomial, MultiIndex, SparsePolynomial};

#[derive(Clone, Debug)]
pub struct LinearForm {
    coefficients: Vec<Surd>,
    float: Vec<f64>,
    norm: f64,
}

impl LinearForm {
    pub fn new(coefficients: Vec<Surd>) -> Result<Self> {
        if coefficients.iter().all(Zero::is_zero) {
            return Err(Error::DegenerateForm(0));
        }
        common_radicand(&coefficients)?;
        let float: Vec<f64> = coefficients.iter().map(Surd::to_f64).collect();
        let norm = float.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Self { coefficients, float, norm })
    }

    pub fn from_integers(coefficients: &[i64]) -> Result<Self> {
        Self::new(coefficients.iter().map(|&c| Surd::from_integer(c)).collect())
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Surd] {
        &self.coefficients
    }

    pub fn float_coefficients(&self) -> &[f64] {
        &self.float
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn apply(&self, x: &[f64]) -> f64 {
        self.float.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn apply_exact(&self, x: &[Surd]) -> Surd {
        let mut total = Surd::zero();
        for (a, b) in self.coefficients.iter().zip(x) {
            total += &(a * b);
        }
        total
    }

    pub fn normalized_value(&self, x: &[f64]) -> f64 {
        self.apply(x) / self.norm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChamberFamily {
    A,
    C,
    D,
}

impl FromStr for ChamberFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Self::A),
            "C" | "c" => Ok(Self::C),
            "D" | "d" => Ok(Self::D),
            other => Err(Error::InvalidArgument(format!("unknown Weyl chamber family {other:?}"))),
        }
    }
}

impl fmt::Display for ChamberFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Self::A => "A",
            Self::C => "C",
            Self::D => "D",
        };
        write!(f, "{c}")
    }
}

/// A cone cut out by linear forms together with its harmonic product
/// polynomial and the geometric data used by the estimators.
///
/// Immutable after construction. Every constructor checks exactly that the
/// expanded product has zero Laplacian.
#[derive(Clone, Debug)]
pub struct HarmonicCone {
    dimension: usize,
    forms: Vec<LinearForm>,
    h_expanded: SparsePolynomial,
    h_float: FloatPolynomial,
    degree_p: u32,
    degree_r: u32,
    interior_direction: Vec<f64>,
    shift_r: f64,
    label: String,
}

impl HarmonicCone {
    pub fn weyl_chamber(family: ChamberFamily, d: usize) -> Result<Self> {
        let min = if family == ChamberFamily::C { 1 } else { 2 };
        if d < min {
            return Err(Error::InvalidArgument(format!("Weyl chamber {family} needs d >= {min}, got {d}")));
        }
        let unit = |i: usize, s: i64| {
            let mut v = vec![0i64; d];
            v[i] = s;
            v
        };
        let mut forms = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let mut diff = unit(j, 1);
                diff[i] = -1;
                forms.push(LinearForm::from_integers(&diff)?);
                if family != ChamberFamily::A {
                    let mut sum = unit(j, 1);
                    sum[i] = 1;
                    forms.push(LinearForm::from_integers(&sum)?);
                }
            }
        }
        if family == ChamberFamily::C {
            for i in 0..d {
                forms.push(LinearForm::from_integers(&unit(i, 1))?);
            }
        }
        let ramp: Vec<f64> = match family {
            ChamberFamily::A => {
                let mean = (d as f64 + 1.0) / 2.0;
                (1..=d).map(|i| i as f64 - mean).collect()
            }
            ChamberFamily::C => (1..=d).map(|i| i as f64).collect(),
            ChamberFamily::D => (0..d).map(|i| i as f64).collect(),
        };
        Self::build(forms, Some(normalize(&ramp)), None, format!("Weyl{family}({d})"))
    }

    /// Cone from arbitrary linear forms; the interior direction is found
    /// numerically.
    pub fn from_forms(forms: Vec<LinearForm>) -> Result<Self> {
        let label = format!("Poly[{} forms]", forms.len());
        Self::build(forms, None, None, label)
    }

    /// `xy(x² − y²)`: forms `x, y, x − y, x + y`.
    pub fn phi1() -> Result<Self> {
        let forms = [[1, 0], [0, 1], [1, -1], [1, 1]]
            .iter()
            .map(|c| LinearForm::from_integers(c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_forms(forms)?.with_label("phi1")
    }

    /// `x⁴ − 6x²y² + y⁴`: forms `x ∓ (1+√2)y, x ∓ (√2−1)y`.
    pub fn phi2() -> Result<Self> {
        let a = parse_surd("1+sqrt(2)")?;
        let b = parse_surd("sqrt(2)-1")?;
        let one = Surd::from_integer(1);
        let forms = [-&a, a.clone(), -&b, b.clone()]
            .into_iter()
            .map(|c| LinearForm::new(vec![one.clone(), c]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_forms(forms)?.with_label("phi2")
    }

    fn build(forms: Vec<LinearForm>, x0: Option<Vec<f64>>, shift: Option<f64>, label: String) -> Result<Self> {
        let first = forms.first().ok_or_else(|| Error::InvalidArgument("no linear forms".into()))?;
        let dimension = first.dimension();
        for (i, f) in forms.iter().enumerate() {
            if f.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: f.dimension() });
            }
            if f.coefficients.iter().all(Zero::is_zero) {
                return Err(Error::DegenerateForm(i));
            }
        }
        common_radicand(forms.iter().flat_map(|f| f.coefficients.iter()))?;
        let mut h = SparsePolynomial::constant(dimension, Surd::from_integer(1));
        for f in &forms {
            h = h.mul(&SparsePolynomial::linear(&f.coefficients));
        }
        let residual = h.laplacian();
        if !residual.is_zero() {
            return Err(Error::NotHarmonic { residual: residual.to_string() });
        }
        let x0 = match x0 {
            Some(v) => v,
            None => maximin_direction(&forms)?,
        };
        let margin = min_normalized(&forms, &x0);
        if margin <= 0.0 {
            return Err(Error::EmptyCone);
        }
        let shift_r = shift.unwrap_or(1.0 / margin);
        let cone = Self {
            dimension,
            degree_p: forms.len() as u32,
            degree_r: h.max_variable_degree(),
            h_float: h.to_float(),
            h_expanded: h,
            forms,
            interior_direction: x0,
            shift_r,
            label,
        };
        cone.check_shift(shift_r)?;
        Ok(cone)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self> {
        self.label = label.into();
        Ok(self)
    }

    /// Replaces the interior direction (normalized here) and resets `R` to
    /// its minimal admissible value.
    pub fn with_interior_direction(mut self, x0: &[f64]) -> Result<Self> {
        if x0.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: x0.len() });
        }
        let x0 = normalize(x0);
        let margin = min_normalized(&self.forms, &x0);
        if !(margin > 0.0) {
            return Err(Error::InvalidArgument(format!("x0 = {x0:?} is not an interior direction")));
        }
        self.interior_direction = x0;
        self.shift_r = 1.0 / margin;
        Ok(self)
    }

    pub fn with_shift(mut self, r: f64) -> Result<Self> {
        self.check_shift(r)?;
        self.shift_r = r;
        Ok(self)
    }

    fn check_shift(&self, r: f64) -> Result<()> {
        let margin = min_normalized(&self.forms, &self.interior_direction);
        if !(r > 0.0) || r * margin < 1.0 - 1e-12 {
            return Err(Error::InvalidArgument(format!("shift R = {r} too small; need R >= {}", 1.0 / margin)));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn forms(&self) -> &[LinearForm] {
        &self.forms
    }

    pub fn h_expanded(&self) -> &SparsePolynomial {
        &self.h_expanded
    }

    pub fn degree_p(&self) -> u32 {
        self.degree_p
    }

    pub fn degree_r(&self) -> u32 {
        self.degree_r
    }

    pub fn interior_direction(&self) -> &[f64] {
        &self.interior_direction
    }

    pub fn shift_r(&self) -> f64 {
        self.shift_r
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `h(x)` as the product of form values.
    pub fn evaluate_h(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dimension, "point dimension");
        self.forms.iter().map(|f| f.apply(x)).product()
    }

    /// `h(x)` from the expanded polynomial.
    pub fn evaluate_h_expanded(&self, x: &[f64]) -> f64 {
        self.h_float.eval(x)
    }

    pub fn evaluate_h_exact(&self, x: &[Surd]) -> Surd {
        let mut out = Surd::from_integer(1);
        for f in &self.forms {
            out *= &f.apply_exact(x);
        }
        out
    }

    /// Strict membership through the forms (not the sign of `h`).
    pub fn contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dimension, "point dimension");
        self.forms.iter().all(|f| f.apply(x) > 0.0)
    }

    pub fn contains_exact(&self, x: &[Surd]) -> bool {
        self.forms.iter().all(|f| f.apply_exact(x).is_positive())
    }

    /// `min_i ⟨x, α_i⟩/|α_i|`: the distance to the boundary for the Weyl
    /// chambers and a lower bound of it for general form systems.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        if !self.contains(x) {
            return Err(Error::OutsideCone(x.to_vec()));
        }
        Ok(min_normalized(&self.forms, x))
    }

    pub fn partial_derivative(&self, index: &[u32]) -> Result<SparsePolynomial> {
        self.h_expanded.partial_derivative(index)
    }

    /// `|∂^α h(x)|·δ(x)^k / h(x)` with `k = |α|`.
    pub fn harnack_ratio(&self, index: &[u32], x: &[f64]) -> Result<f64> {
        let delta = self.boundary_distance(x)?;
        let k: u32 = index.iter().sum();
        let d = self.partial_derivative(index)?.eval(x);
        Ok(d.abs() * delta.powi(k as i32) / self.evaluate_h(x))
    }

    /// Largest observed `h(x) / (|x|^{p−1} δ(x))` over random interior
    /// points; an empirical value for the boundary constant, not a bound.
    pub fn empirical_boundary_constant<R: Rng>(&self, samples: usize, rng: &mut R) -> f64 {
        let mut sup: f64 = 0.0;
        for _ in 0..samples {
            let x = self.sample_interior(rng);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let delta = min_normalized(&self.forms, &x);
            let ratio = self.evaluate_h(&x) / (norm.powi(self.degree_p as i32 - 1) * delta);
            sup = sup.max(ratio);
        }
        sup
    }

    /// A random interior point: a Gaussian direction accepted if it lies in
    /// the cone, otherwise pulled toward the interior direction.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let scale: f64 = 0.5 + 4.5 * rng.random::<f64>();
            let mut x: Vec<f64> = (0..self.dimension).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect();
            for _ in 0..64 {
                if self.contains(&x) {
                    return x;
                }
                for (xi, di) in x.iter_mut().zip(&self.interior_direction) {
                    *xi += 0.25 * scale * di;
                }
            }
        }
    }

    pub fn spec(&self) -> String {
        format!("{}|p={}|r={}", self.label, self.degree_p, self.degree_r)
    }
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn min_normalized(forms: &[LinearForm], x: &[f64]) -> f64 {
    forms.iter().map(|f| f.normalized_value(x)).fold(f64::INFINITY, f64::min)
}

/// Projected subgradient ascent for `max_{|u|=1} min_i ⟨u, α_i/|α_i|⟩`.
fn maximin_direction(forms: &[LinearForm]) -> Result<Vec<f64>> {
    let d = forms[0].dimension();
    let mut u = vec![0.0; d];
    for f in forms {
        for (uj, a) in u.iter_mut().zip(&f.float) {
            *uj += a / f.norm;
        }
    }
    if u.iter().all(|v| v.abs() < 1e-300) {
        u[0] = 1.0;
    }
    u = normalize(&u);
    let mut best = u.clone();
    let mut best_val = min_normalized(forms, &u);
    for t in 0..4000 {
        let (i, _) = forms
            .iter()
            .enumerate()
            .map(|(i, f)| (i, f.normalized_value(&u)))
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let step = 0.5 / ((t + 1) as f64).sqrt();
        let f = &forms[i];
        for (uj, a) in u.iter_mut().zip(&f.float) {
            *uj += step * a / f.norm;
        }
        u = normalize(&u);
        let val = min_normalized(forms, &u);
        if val > best_val {
            best_val = val;
            best = u.clone();
        }
    }
    if best_val <= 1e-12 {
        return Err(Error::EmptyCone);
    }
    Ok(best)
}

/// Number written either as a TOML number or as an exact string such as
/// `"1+sqrt(2)"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Integer(i64),
    Float(f64),
    Text(String),
}

impl Coefficient {
    pub fn to_surd(&self) -> Result<Surd> {
        match self {
            Self::Integer(n) => Ok(Surd::from_integer(*n)),
            Self::Float(x) => parse_surd(&format!("{x}")),
            Self::Text(s) => parse_surd(s),
        }
    }
}

/// Cone specification as read from a configuration file: either
/// `family` + `dimension`, or an explicit `forms` list.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub family: Option<String>,
    pub dimension: Option<usize>,
    pub forms: Option<Vec<Vec<Coefficient>>>,
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub label: Option<String>,
}

impl ConeSpec {
    pub fn weyl(family: ChamberFamily, d: usize) -> Self {
        Self { family: Some(family.to_string()), dimension: Some(d), ..Default::default() }
    }

    pub fn build(&self) -> Result<HarmonicCone> {
        let mut cone = match (&self.family, &self.forms) {
            (Some(fam), None) => {
                let d = self
                    .dimension
                    .ok_or_else(|| Error::InvalidArgument("cone spec: `dimension` required with `family`".into()))?;
                HarmonicCone::weyl_chamber(fam.parse()?, d)?
            }
            (None, Some(rows)) => {
                let forms = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let coeffs = row.iter().map(Coefficient::to_surd).collect::<Result<Vec<_>>>()?;
                        LinearForm::new(coeffs).map_err(|e| match e {
                            Error::DegenerateForm(_) => Error::DegenerateForm(i),
                            other => other,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if let Some(d) = self.dimension {
                    if let Some(f) = forms.iter().find(|f| f.dimension() != d) {
                        return Err(Error::DimensionMismatch { expected: d, got: f.dimension() });
                    }
                }
                HarmonicCone::from_forms(forms)?
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument("cone spec: give either `family` or `forms`, not both".into()))
            }
            (None, None) => return Err(Error::InvalidArgument("cone spec: `family` or `forms` required".into())),
        };
        if let Some(x0) = &self.x0 {
            cone = cone.with_interior_direction(x0)?;
        }
        if let Some(r) = self.r {
            cone = cone.with_shift(r)?;
        }
        if let Some(label) = &self.label {
            cone = cone.with_label(label.clone())?;
        }
        Ok(cone)
    }
}

/// Orthogonal projection of `x` onto the hyperplane of form `i`.
pub fn project_onto_form(cone: &HarmonicCone, i: usize, x: &[f64]) -> Vec<f64> {
    let f = &cone.forms[i];
    let t = f.apply(x) / (f.norm * f.norm);
    x.iter().zip(&f.float).map(|(xj, a)| xj - t * a).collect()
}

pub fn unit_index(d: usize, j: usize, k: u32) -> MultiIndex {
    let mut e = vec![0; d];
    e[j] = k;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(d: usize, terms: &[(&[u32], i64)]) -> SparsePolynomial {
        SparsePolynomial::from_terms(d, terms.iter().map(|(e, c)| (e.to_vec(), Surd::from_integer(*c)))).unwrap()
    }

    #[test]
    fn chamber_degrees() {
        let a3 = HarmonicCone::weyl_chamber(ChamberFamily::A, 3).unwrap();
        assert_eq!((a3.degree_p(), a3.degree_r()), (3, 2));
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        assert_eq!(c2.degree_p(), 4);
        assert_eq!(c2.degree_r(), 3);
        let d2 = HarmonicCone::weyl_chamber(ChamberFamily::D, 2).unwrap();
        assert_eq!(d2.degree_p(), 2);
        assert_eq!(d2.h_expanded(), &poly(2, &[(&[0, 2], 1), (&[2, 0], -1)]));
        let d3 = HarmonicCone::weyl_chamber(ChamberFamily::D, 3).unwrap();
        assert_eq!(d3.degree_p(), 6);
        assert_eq!(d3.degree_r(), 4);
        let c3 = HarmonicCone::weyl_chamber(ChamberFamily::C, 3).unwrap();
        assert_eq!((c3.degree_p(), c3.degree_r()), (9, 5));
        let a4 = HarmonicCone::weyl_chamber(ChamberFamily::A, 4).unwrap();
        assert_eq!((a4.degree_p(), a4.degree_r()), (6, 3));
    }

    #[test]
    fn chamber_arguments() {
        assert!(HarmonicCone::weyl_chamber(ChamberFamily::A, 1).is_err());
        assert!(HarmonicCone::weyl_chamber(ChamberFamily::D, 1).is_err());
        let half_line = HarmonicCone::weyl_chamber(ChamberFamily::C, 1).unwrap();
        assert_eq!(half_line.degree_p(), 1);
        assert!("B".parse::<ChamberFamily>().is_err());
    }

    #[test]
    fn evaluation_examples() {
        let a3 = HarmonicCone::weyl_chamber(ChamberFamily::A, 3).unwrap();
        assert_eq!(a3.evaluate_h(&[1.0, 2.0, 4.0]), 6.0);
        assert_eq!(a3.evaluate_h(&[1.0, 1.0, 2.0]), 0.0);
        assert_eq!(a3.evaluate_h_expanded(&[1.0, 2.0, 4.0]), 6.0);
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        assert_eq!(c2.evaluate_h(&[1.0, 2.0]), 6.0);
    }

    #[test]
    fn membership_is_strict_and_uses_forms() {
        let d2 = HarmonicCone::weyl_chamber(ChamberFamily::D, 2).unwrap();
        assert!(d2.contains(&[-1.0, 2.0]));
        assert!(!d2.contains(&[3.0, 2.0]));
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        assert!(!c2.contains(&[0.0, 1.0]));
        // two negative factors: h > 0 but outside
        let x = [-1.0, -2.0];
        assert!(c2.evaluate_h(&x) > 0.0);
        assert!(!c2.contains(&x));
    }

    #[test]
    fn boundary_distance_examples() {
        let a2 = HarmonicCone::weyl_chamber(ChamberFamily::A, 2).unwrap();
        assert_relative_eq!(a2.boundary_distance(&[0.0, 2.0]).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        let c2 = HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap();
        assert_relative_eq!(c2.boundary_distance(&[1.0, 3.0]).unwrap(), 1.0);
        for t in [1.0, 10.0, 1e6] {
            assert_relative_eq!(c2.boundary_distance(&[t, 3.0 * t]).unwrap(), t, max_relative = 1e-12);
        }
        assert!(matches!(c2.boundary_distance(&[2.0, 1.0]), Err(Error::OutsideCone(_))));
    }

    #[test]
    fn polynomial_cones_phi1_and_phi2() {
        let p1 = HarmonicCone::phi1().unwrap();
        assert_eq!((p1.degree_p(), p1.degree_r()), (4, 3));
        // x³y − xy³
        assert_eq!(p1.h_expanded(), &poly(2, &[(&[3, 1], 1), (&[1, 3], -1)]));
        let p2 = HarmonicCone::phi2().unwrap();
        assert_eq!(p2.degree_r(), 4);
        assert_eq!(p2.h_expanded(), &poly(2, &[(&[4, 0], 1), (&[2, 2], -6), (&[0, 4], 1)]));
        for cone in [&p1, &p2] {
            let x0 = cone.interior_direction();
            assert!(cone.forms().iter().all(|f| f.apply(x0) > 0.0));
        }
        // phi1 wedge 0 < y < x: bisector at 22.5 degrees
        let angle = p1.interior_direction()[1].atan2(p1.interior_direction()[0]);
        assert!((angle - std::f64::consts::PI / 8.0).abs() < 1e-3, "{angle}");
    }

    #[test]
    fn non_harmonic_rejected() {
        let forms = vec![LinearForm::from_integers(&[1]).unwrap(), LinearForm::from_integers(&[1]).unwrap()];
        match HarmonicCone::from_forms(forms) {
            Err(Error::NotHarmonic { residual }) => assert_eq!(residual, "(2)"),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(matches!(LinearForm::from_integers(&[0, 0]), Err(Error::DegenerateForm(_))));
    }

    #[test]
    fn shift_invariant_holds() {
        for cone in [
            HarmonicCone::weyl_chamber(ChamberFamily::A, 3).unwrap(),
            HarmonicCone::weyl_chamber(ChamberFamily::C, 2).unwrap(),
            HarmonicCone::phi2().unwrap(),
        ] {
            let r = cone.shift_r();
            let y: Vec<f64> = cone.interior_direction().iter().map(|v| v * r).collect();
            for f in cone.forms() {
                assert!(f.normalized_value(&y) >= 1.0 - 1e-12);
            }
            assert!(cone.clone().with_shift(r * 0.5).is_err());
        }
    }

    #[test]
    fn spec_parsing() {
        let spec = ConeSpec {
            forms: Some(vec![
                vec![Coefficient::Integer(1), Coefficient::Text("-1-sqrt(2)".into())],
                vec![Coefficient::Integer(1), Coefficient::Text("1+sqrt(2)".into())],
                vec![Coefficient::Integer(1), Coefficient::Text("1-sqrt(2)".into())],
                vec![Coefficient::Integer(1), Coefficient::Text("sqrt(2)-1".into())],
            ]),
            ..Default::default()
        };
        let cone = spec.build().unwrap();
        assert_eq!(cone.degree_p(), 4);
        let bad = ConeSpec { family: Some("C".into()), ..Default::default() };
        assert!(bad.build().is_err());
        let both = ConeSpec { family: Some("A".into()), dimension: Some(2), forms: Some(vec![]), ..Default::default() };
        assert!(both.build().is_err());
    }
}
