//! Exact numbers of the form `a + b·√m` with rational `a`, `b` and a
//! squarefree integer `m`.
//!
//! Every value lives in a single quadratic field `Q(√m)`; a value with
//! `b = 0` is a plain rational and combines with any field. Combining two
//! values from different fields panics in the operator impls, so callers
//! that accept user data check [`common_radicand`] first.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    rational: BigRational,
    surd: BigRational,
    radicand: u64,
}

impl Surd {
    pub fn new(rational: BigRational, surd: BigRational, radicand: u64) -> Result<Self> {
        if surd.is_zero() || radicand == 1 {
            return Ok(Self::from_rational(rational + surd));
        }
        if radicand == 0 {
            return Ok(Self::from_rational(rational));
        }
        let (square, free) = squarefree_split(radicand);
        let surd = surd * BigRational::from_integer(BigInt::from(square));
        if free == 1 {
            return Ok(Self::from_rational(rational + surd));
        }
        Ok(Self { rational, surd, radicand: free })
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self { rational: q, surd: BigRational::zero(), radicand: 1 }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact binary value of a finite float.
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Self::from_rational)
            .ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
    }

    /// `√q` for a non-negative rational `q`.
    pub fn sqrt_of(q: &BigRational) -> Result<Self> {
        if q.is_negative() {
            return Err(Error::InvalidArgument(format!("sqrt of negative {q}")));
        }
        if q.is_zero() {
            return Ok(Self::zero());
        }
        // sqrt(p/r) = sqrt(p·r)/r
        let p = q.numer().clone();
        let r = q.denom().clone();
        let pr = (&p * &r).to_u64().ok_or_else(|| Error::InvalidArgument(format!("radicand of {q} too large")))?;
        let (square, free) = squarefree_split(pr);
        let coeff = BigRational::new(BigInt::from(square), r);
        if free == 1 {
            Ok(Self::from_rational(coeff))
        } else {
            Ok(Self { rational: BigRational::zero(), surd: coeff, radicand: free })
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    /// 1 for plain rationals.
    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        self.is_rational().then(|| self.rational.clone())
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        if self.is_rational() {
            return a;
        }
        let b = self.surd.to_f64().unwrap_or(f64::NAN);
        a + b * (self.radicand as f64).sqrt()
    }

    pub fn signum(&self) -> Ordering {
        let a = rat_sign(&self.rational);
        let b = rat_sign(&self.surd);
        match (a, b) {
            (_, Sign::NoSign) => sign_to_ord(a),
            (Sign::NoSign, _) => sign_to_ord(b),
            (x, y) if x == y => sign_to_ord(x),
            _ => {
                // opposite signs: compare a² with m·b²
                let a2 = &self.rational * &self.rational;
                let mb2 = &self.surd * &self.surd * BigRational::from_integer(BigInt::from(self.radicand));
                match a2.cmp(&mb2) {
                    Ordering::Greater => sign_to_ord(a),
                    Ordering::Less => sign_to_ord(b),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn conjugate(&self) -> Self {
        Self { rational: self.rational.clone(), surd: -self.surd.clone(), radicand: self.radicand }
    }

    /// Field norm `a² − m·b²`.
    pub fn norm(&self) -> BigRational {
        &self.rational * &self.rational
            - &self.surd * &self.surd * BigRational::from_integer(BigInt::from(self.radicand))
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        let n = self.norm();
        let c = self.conjugate();
        Self { rational: c.rational / &n, surd: c.surd / n, radicand: c.radicand }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = Self { rational: &self.rational * q, surd: &self.surd * q, radicand: self.radicand };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        if self.surd.is_zero() {
            self.radicand = 1;
        }
    }

    fn join(&self, other: &Self) -> u64 {
        match (self.radicand, other.radicand) {
            (1, m) | (m, 1) => m,
            (m, n) if m == n => m,
            (m, n) => panic!("{}", Error::MixedFields(m, n)),
        }
    }
}

fn rat_sign(q: &BigRational) -> Sign {
    q.numer().sign()
}

fn sign_to_ord(s: Sign) -> Ordering {
    match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

/// Splits `n` as `s²·m` with `m` squarefree; returns `(s, m)`.
pub fn squarefree_split(mut n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 1);
    }
    let mut square = 1u64;
    let mut free = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        square *= p.pow(e / 2);
        if e % 2 == 1 {
            free *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    free *= n;
    (square, free)
}

/// The single field shared by all values, or an error when two distinct
/// square roots appear.
pub fn common_radicand<'a>(values: impl IntoIterator<Item = &'a Surd>) -> Result<u64> {
    let mut field = 1;
    for v in values {
        match (field, v.radicand) {
            (_, 1) => {}
            (1, m) => field = m,
            (f, m) if f == m => {}
            (f, m) => return Err(Error::MixedFields(f, m)),
        }
    }
    Ok(field)
}

impl Zero for Surd {
    fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.surd.is_zero()
    }
}

impl One for Surd {
    fn one() -> Self {
        Self::from_rational(BigRational::one())
    }
}

impl<'a> Add<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        let radicand = self.join(rhs);
        let mut out = Surd { rational: &self.rational + &rhs.rational, surd: &self.surd + &rhs.surd, radicand };
        out.normalize();
        out
    }
}

impl<'a> Sub<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        let radicand = self.join(rhs);
        let mut out = Surd { rational: &self.rational - &rhs.rational, surd: &self.surd - &rhs.surd, radicand };
        out.normalize();
        out
    }
}

impl<'a> Mul<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        let radicand = self.join(rhs);
        let m = BigRational::from_integer(BigInt::from(radicand));
        let rational = &self.rational * &rhs.rational + &self.surd * &rhs.surd * m;
        let surd = &self.rational * &rhs.surd + &self.surd * &rhs.rational;
        let mut out = Surd { rational, surd, radicand };
        out.normalize();
        out
    }
}

impl<'a> Div<&'a Surd> for &'a Surd {
    type Output = Surd;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Surd) -> Surd {
        self * &rhs.recip()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<Surd> for Surd {
            type Output = Surd;
            fn $method(self, rhs: Surd) -> Surd {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a Surd> for Surd {
            type Output = Surd;
            fn $method(self, rhs: &Surd) -> Surd {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl AddAssign<&Surd> for Surd {
    fn add_assign(&mut self, rhs: &Surd) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Surd> for Surd {
    fn sub_assign(&mut self, rhs: &Surd) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Surd> for Surd {
    fn mul_assign(&mut self, rhs: &Surd) {
        *self = &*self * rhs;
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { rational: -self.rational, surd: -self.surd, radicand: self.radicand }
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        -(self.clone())
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.rational);
        }
        if !self.rational.is_zero() {
            write!(f, "{}", self.rational)?;
            if self.surd.is_positive() {
                write!(f, "+")?;
            }
        }
        if self.surd.is_one() {
            write!(f, "sqrt({})", self.radicand)
        } else if (-self.surd.clone()).is_one() {
            write!(f, "-sqrt({})", self.radicand)
        } else {
            write!(f, "{}*sqrt({})", self.surd, self.radicand)
        }
    }
}

/// Parses `"3"`, `"-1/2"`, `"0.25"`, `"1+sqrt(2)"`, `"sqrt(2)-1"`,
/// `"2/3*sqrt(5)"` and sums of such terms.
pub fn parse_surd(text: &str) -> Result<Surd> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = s.as_bytes();
    let mut depth = 0;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' | b'-' if depth == 0 && i > start => {
                // exponent sign of a float literal, e.g. 1e-3
                if matches!(bytes[i - 1], b'e' | b'E') && bytes[..i - 1].last().is_some_and(|c| c.is_ascii_digit()) {
                    continue;
                }
                terms.push(&s[start..i]);
                start = i;
            }
            _ => {}
        }
    }
    terms.push(&s[start..]);
    let mut total = Surd::zero();
    for t in terms {
        let term = parse_term(t)?;
        common_radicand([&total, &term])?;
        total = total + term;
    }
    Ok(total)
}

fn parse_term(t: &str) -> Result<Surd> {
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let value = if let Some(pos) = body.find("sqrt(") {
        let coeff_text = body[..pos].trim_end_matches('*');
        let close = body[pos..].find(')').ok_or_else(|| Error::Parse(format!("unclosed sqrt in {t}")))? + pos;
        if close + 1 != body.len() {
            return Err(Error::Parse(format!("trailing text in {t}")));
        }
        let radicand = parse_rational(&body[pos + 5..close])?;
        let root = Surd::sqrt_of(&radicand)?;
        let coeff = if coeff_text.is_empty() { BigRational::one() } else { parse_rational(coeff_text)? };
        root.scale(&coeff)
    } else {
        Surd::from_rational(parse_rational(body)?)
    };
    Ok(if neg { -value } else { value })
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    // decimal literal: read exactly from its digits rather than via f64
    if !s.contains(['e', 'E']) {
        if let Some((int, frac)) = s.split_once('.') {
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if frac.chars().all(|c| c.is_ascii_digit()) && int_digits.chars().all(|c| c.is_ascii_digit()) {
                let digits = format!("{int_digits}{frac}");
                let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
                let den = num_traits::pow(BigInt::from(10), frac.len());
                let q = BigRational::new(num, den);
                return Ok(if neg { -q } else { q });
            }
        }
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    BigRational::from_float(x).ok_or_else(bad)
}

/// Greatest common divisor of two non-negative rationals
/// (the largest `g` with both values in `g·Z`).
pub fn rational_gcd(a: &BigRational, b: &BigRational) -> BigRational {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let num = a.numer().abs().gcd(&b.numer().abs());
    let den = a.denom().lcm(b.denom());
    BigRational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn squarefree() {
        assert_eq!(squarefree_split(12), (2, 3));
        assert_eq!(squarefree_split(10), (1, 10));
        assert_eq!(squarefree_split(49), (7, 1));
        assert_eq!(squarefree_split(1), (1, 1));
    }

    #[test]
    fn sqrt_of_rationals() {
        let r = Surd::sqrt_of(&q(5, 2)).unwrap();
        assert_eq!(r.radicand(), 10);
        assert_eq!(r.surd_part(), &q(1, 2));
        assert!((r.to_f64() - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Surd::sqrt_of(&q(9, 4)).unwrap(), Surd::from_ratio(3, 2));
    }

    #[test]
    fn field_arithmetic() {
        let s2 = parse_surd("sqrt(2)").unwrap();
        let a = &Surd::one() + &s2;
        let b = &s2 - &Surd::one();
        // (1+√2)(√2−1) = 1
        assert_eq!(&a * &b, Surd::one());
        assert_eq!(a.recip(), b);
        let sq = &a * &a;
        assert_eq!(sq, parse_surd("3+2*sqrt(2)").unwrap());
    }

    #[test]
    fn exact_sign() {
        assert!(parse_surd("sqrt(2)-1").unwrap().is_positive());
        assert!(!parse_surd("1-sqrt(2)").unwrap().is_positive());
        assert_eq!(parse_surd("3/2-sqrt(2)").unwrap().signum(), Ordering::Greater);
        assert_eq!(parse_surd("7/5-sqrt(2)").unwrap().signum(), Ordering::Less);
        assert_eq!(Surd::zero().signum(), Ordering::Equal);
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_surd("-1/2").unwrap(), Surd::from_ratio(-1, 2));
        assert_eq!(parse_surd("0.25").unwrap(), Surd::from_ratio(1, 4));
        assert_eq!(parse_surd("1e-1").unwrap().to_f64(), 0.1);
        assert_eq!(parse_surd("1 - 2/3*sqrt(8)").unwrap(), parse_surd("1-4/3*sqrt(2)").unwrap());
        assert!(parse_surd("sqrt(2)+sqrt(3)").is_err());
        assert!(parse_surd("abc").is_err());
    }

    #[test]
    #[should_panic(expected = "mixed quadratic fields")]
    fn mixing_fields_panics() {
        let _ = parse_surd("sqrt(2)").unwrap() + parse_surd("sqrt(3)").unwrap();
    }

    #[test]
    fn gcd_of_rationals() {
        assert_eq!(rational_gcd(&q(1, 2), &q(3, 4)), q(1, 4));
        assert_eq!(rational_gcd(&q(-1, 1), &q(2, 1)), q(1, 1));
    }
}
