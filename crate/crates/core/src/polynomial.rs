//! Sparse multivariate polynomials with exact coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::Surd;

/// Exponent multi-index, one entry per variable.
pub type MultiIndex = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePolynomial {
    dimension: usize,
    terms: BTreeMap<MultiIndex, Surd>,
}

impl SparsePolynomial {
    pub fn zero(dimension: usize) -> Self {
        Self { dimension, terms: BTreeMap::new() }
    }

    pub fn constant(dimension: usize, c: Surd) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(vec![0; dimension], c);
        p
    }

    /// `Σ c_j x_j`.
    pub fn linear(coefficients: &[Surd]) -> Self {
        let d = coefficients.len();
        let mut p = Self::zero(d);
        for (j, c) in coefficients.iter().enumerate() {
            let mut e = vec![0; d];
            e[j] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn from_terms(dimension: usize, terms: impl IntoIterator<Item = (MultiIndex, Surd)>) -> Result<Self> {
        let mut p = Self::zero(dimension);
        for (e, c) in terms {
            if e.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: MultiIndex, c: Surd) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Surd)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, e: &[u32]) -> Surd {
        self.terms.get(e).cloned().unwrap_or_else(Surd::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest exponent of any single variable.
    pub fn max_variable_degree(&self) -> u32 {
        self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &Surd> {
        self.terms.values()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dimension, other.dimension, "polynomial dimension mismatch");
        let mut out = Self::zero(self.dimension);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: MultiIndex = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Surd) -> Self {
        let mut out = Self::zero(self.dimension);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    /// Exact mixed partial derivative `∂^α` with `α = index`.
    pub fn partial_derivative(&self, index: &[u32]) -> Result<Self> {
        if index.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: index.len() });
        }
        let mut out = Self::zero(self.dimension);
        'terms: for (e, c) in &self.terms {
            let mut factor = BigInt::one();
            let mut reduced = e.clone();
            for j in 0..self.dimension {
                if e[j] < index[j] {
                    continue 'terms;
                }
                for t in 0..index[j] {
                    factor *= BigInt::from(e[j] - t);
                }
                reduced[j] = e[j] - index[j];
            }
            out.add_term(reduced, c.scale(&BigRational::from_integer(factor)));
        }
        Ok(out)
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dimension);
        for j in 0..self.dimension {
            let mut idx = vec![0; self.dimension];
            idx[j] = 2;
            out = out.add(&self.partial_derivative(&idx).expect("index has the right length"));
        }
        out
    }

    pub fn eval_exact(&self, x: &[Surd]) -> Surd {
        let mut total = Surd::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (xj, &k) in x.iter().zip(e) {
                if k > 0 {
                    term *= &xj.pow(k);
                }
            }
            total += &term;
        }
        total
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * x.iter().zip(e).map(|(xj, &k)| xj.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Converts to a float-coefficient form for repeated evaluation.
    pub fn to_float(&self) -> FloatPolynomial {
        FloatPolynomial { terms: self.terms.iter().map(|(e, c)| (e.clone(), c.to_f64())).collect() }
    }
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{}", j + 1)?,
                    _ => write!(f, "*x{}^{}", j + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FloatPolynomial {
    terms: Vec<(MultiIndex, f64)>,
}

impl FloatPolynomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * x.iter().zip(e).map(|(xj, &k)| xj.powi(k as i32)).product::<f64>()).sum()
    }
}

/// All multi-indices of length `d` with entries summing to `k`.
pub fn multi_indices(d: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, left: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if d == 0 {
        return out;
    }
    rec(0, k, &mut cur, &mut out);
    out
}
