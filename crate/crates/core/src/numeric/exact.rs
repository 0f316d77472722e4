//! Exact values of the form `Σ c_k π^(k/2)` with rational `c_k`.
//!
//! Geometry inputs are single monomials (`3/2`, `2*pi`, `0.25*pi^-1`); predictions
//! such as `-(d₁A₂ + d₂A₁)/(4π)` or `L/(2√π)` are general sums.

use super::dd::Dd;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse exact number `{0}`")]
pub struct ParseExactError(pub String);

/// Laurent polynomial in `√π` with rational coefficients. Keys are twice the power of π.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PiPoly {
    terms: BTreeMap<i32, BigRational>,
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `BigRational` to double-double, correctly rounded to within a few ulps.
pub fn rational_to_dd(r: &BigRational) -> Dd {
    bigint_to_dd(r.numer()) / bigint_to_dd(r.denom())
}

fn bigint_to_dd(n: &BigInt) -> Dd {
    let hi = n.to_f64().unwrap_or(f64::NAN);
    match BigInt::from_f64(hi) {
        Some(h) => Dd::from_parts(hi, (n - h).to_f64().unwrap_or(0.0)),
        None => Dd::from(hi),
    }
}

/// Exact decimal expansion of a finite `f64`.
pub fn f64_to_rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Parses `[-]digits[.digits][e[-]digits]` or `p/q` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseExactError> {
    let err = || ParseExactError(s.to_string());
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(p / q);
    }
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (body, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| err())?;
    let shift = exp - frac.len() as i32;
    if shift.unsigned_abs() > 4000 {
        return Err(err());
    }
    let ten = BigInt::from(10);
    let mut r = if shift >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-shift) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

impl PiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(c: BigRational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::from_rational(rational(n, d))
    }

    /// `c · π^(half_power/2)`.
    pub fn monomial(c: BigRational, half_power: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(half_power, c);
        }
        PiPoly { terms }
    }

    /// `π^k` for integer `k`.
    pub fn pi_pow(k: i32) -> Self {
        Self::monomial(BigRational::one(), 2 * k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigRational)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    /// The rational value if no π factor is present.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// `(coefficient, half_power)` if this is a single monomial (zero has none).
    pub fn as_monomial(&self) -> Option<(BigRational, i32)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(k, v)| (v.clone(), *k))
        } else {
            None
        }
    }

    pub fn is_positive_monomial(&self) -> bool {
        self.as_monomial().is_some_and(|(c, _)| c.is_positive())
    }

    /// Multiplicative inverse of a monomial.
    pub fn recip_monomial(&self) -> Option<PiPoly> {
        let (c, k) = self.as_monomial()?;
        Some(PiPoly::monomial(c.recip(), -k))
    }

    pub fn scale(&self, c: &BigRational) -> PiPoly {
        let mut out = PiPoly::zero();
        for (k, v) in &self.terms {
            out.push(*k, v * c);
        }
        out
    }

    pub fn powi(&self, n: u32) -> PiPoly {
        let mut acc = PiPoly::from_int(1);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    fn push(&mut self, k: i32, v: BigRational) {
        let e = self.terms.entry(k).or_insert_with(BigRational::zero);
        *e += v;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn to_dd(&self) -> Dd {
        let sqrt_pi = Dd::PI.sqrt();
        self.terms.iter().fold(Dd::ZERO, |acc, (k, c)| {
            let p = Dd::PI.powi(k.div_euclid(2)) * if k.rem_euclid(2) == 1 { sqrt_pi } else { Dd::ONE };
            acc + rational_to_dd(c) * p
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }
}

impl From<i64> for PiPoly {
    fn from(n: i64) -> Self {
        PiPoly::from_int(n)
    }
}

impl From<BigRational> for PiPoly {
    fn from(c: BigRational) -> Self {
        PiPoly::from_rational(c)
    }
}

impl Add for &PiPoly {
    type Output = PiPoly;
    fn add(self, o: &PiPoly) -> PiPoly {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            out.push(*k, v.clone());
        }
        out
    }
}

impl Add for PiPoly {
    type Output = PiPoly;
    fn add(self, o: PiPoly) -> PiPoly {
        &self + &o
    }
}

impl Neg for &PiPoly {
    type Output = PiPoly;
    fn neg(self) -> PiPoly {
        PiPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, -v.clone())).collect(),
        }
    }
}

impl Neg for PiPoly {
    type Output = PiPoly;
    fn neg(self) -> PiPoly {
        -&self
    }
}

impl Sub for &PiPoly {
    type Output = PiPoly;
    fn sub(self, o: &PiPoly) -> PiPoly {
        self + &(-o)
    }
}

impl Sub for PiPoly {
    type Output = PiPoly;
    fn sub(self, o: PiPoly) -> PiPoly {
        &self - &o
    }
}

impl Mul for &PiPoly {
    type Output = PiPoly;
    fn mul(self, o: &PiPoly) -> PiPoly {
        let mut out = PiPoly::zero();
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                out.push(ka + kb, va * vb);
            }
        }
        out
    }
}

impl Mul for PiPoly {
    type Output = PiPoly;
    fn mul(self, o: PiPoly) -> PiPoly {
        &self * &o
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for PiPoly {
    /// Renders in the grammar accepted by [`PiPoly::from_str`], e.g. `-1/4*pi^-1 + 1/2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().rev().enumerate() {
            let mut s = fmt_rational(c);
            if *k != 0 {
                let p = if k % 2 == 0 {
                    format!("{}", k / 2)
                } else {
                    format!("({k}/2)")
                };
                if p == "1" {
                    s.push_str("*pi");
                } else {
                    s.push_str(&format!("*pi^{p}"));
                }
            }
            if i == 0 {
                f.write_str(&s)?;
            } else if let Some(rest) = s.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {s}")?;
            }
        }
        Ok(())
    }
}

fn parse_monomial(s: &str) -> Result<PiPoly, ParseExactError> {
    let err = || ParseExactError(s.to_string());
    let mut coeff = BigRational::one();
    let mut half = 0i32;
    let body = s.trim();
    let (neg, body) = match body.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, body),
    };
    if body.is_empty() {
        return Err(err());
    }
    for factor in body.split('*') {
        let factor = factor.trim();
        if let Some(rest) = factor.strip_prefix("pi") {
            if rest.is_empty() {
                half += 2;
            } else if let Some(p) = rest.strip_prefix('^') {
                let p = p.trim_start_matches('(').trim_end_matches(')');
                if let Some((n, d)) = p.split_once('/') {
                    let n: i32 = n.trim().parse().map_err(|_| err())?;
                    if d.trim() != "2" {
                        return Err(err());
                    }
                    half += n;
                } else {
                    let n: i32 = p.trim().parse().map_err(|_| err())?;
                    half += 2 * n;
                }
            } else if let Some(d) = rest.strip_prefix('/') {
                half += 2;
                coeff /= parse_rational(d)?;
            } else {
                return Err(err());
            }
        } else {
            coeff *= parse_rational(factor)?;
        }
    }
    if neg {
        coeff = -coeff;
    }
    Ok(PiPoly::monomial(coeff, half))
}

impl FromStr for PiPoly {
    type Err = ParseExactError;

    /// Sums of monomials `c`, `c*pi`, `c*pi^k`, `c*pi^(k/2)`, `pi/q`, joined by ` + ` / ` - `.
    fn from_str(s: &str) -> Result<PiPoly, ParseExactError> {
        let s = s.trim();
        let mut out = PiPoly::zero();
        let mut start = 0;
        let bytes = s.as_bytes();
        let mut pieces = Vec::new();
        for i in 1..bytes.len() {
            // a sign separates terms unless it follows an exponent marker
            if (bytes[i] == b'+' || bytes[i] == b'-')
                && bytes[i - 1] == b' '
                && i + 1 < bytes.len()
                && bytes[i + 1] == b' '
            {
                pieces.push(&s[start..i]);
                start = i;
            }
        }
        pieces.push(&s[start..]);
        for p in pieces {
            let p = p.trim();
            let (sign, body) = if let Some(r) = p.strip_prefix("+ ") {
                (false, r)
            } else if let Some(r) = p.strip_prefix("- ") {
                (true, r)
            } else {
                (false, p)
            };
            let mono = parse_monomial(body)?;
            out = if sign { &out - &mono } else { &out + &mono };
        }
        Ok(out)
    }
}
