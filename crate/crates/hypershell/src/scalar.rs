//! Dual-track scalars: exact surds `c·√k` and plain floats.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Which arithmetic an operation ran on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Track {
    Exact,
    Float,
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Track::Exact => "exact",
            Track::Float => "float",
        })
    }
}

/// `coeff * sqrt(radicand)` with a squarefree radicand. Radicand 1 is a plain rational.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    pub coeff: Rational,
    pub radicand: u64,
}

fn squarefree_split(mut k: u64) -> (u64, u64) {
    let mut outside = 1u64;
    let mut p = 2u64;
    while p * p <= k {
        while k % (p * p) == 0 {
            k /= p * p;
            outside *= p;
        }
        p += 1;
    }
    (outside, k)
}

impl Surd {
    pub fn new(coeff: Rational, radicand: u64) -> Self {
        if coeff.is_zero() || radicand == 0 {
            return Surd { coeff: Rational::zero(), radicand: 1 };
        }
        let (outside, inner) = squarefree_split(radicand);
        Surd { coeff: coeff * Rational::from_integer(BigInt::from(outside)), radicand: inner }
    }

    pub fn rational(q: Rational) -> Self {
        Surd { coeff: q, radicand: 1 }
    }

    pub fn is_rational(&self) -> bool {
        self.radicand == 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.coeff) * (self.radicand as f64).sqrt()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 1 {
            write!(f, "{}", self.coeff)
        } else if self.coeff.is_one() {
            write!(f, "sqrt({})", self.radicand)
        } else {
            write!(f, "{}*sqrt({})", self.coeff, self.radicand)
        }
    }
}

/// A real parameter, exact when it came from exact text.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(Surd),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Surd::rational(Rational::zero()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(s) => s.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    /// The exact rational value, if this scalar is one.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(s) if s.is_rational() => Some(&s.coeff),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(s) => s.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(s) => Scalar::Exact(Surd { coeff: -s.coeff.clone(), radicand: s.radicand }),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }

    /// Product, staying exact when both radicands allow it.
    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(x), Scalar::Exact(y)) => {
                let (o, k) = squarefree_split(x.radicand.saturating_mul(y.radicand));
                let shared = if x.radicand == y.radicand { x.radicand } else { 1 };
                if shared > 1 {
                    Scalar::Exact(Surd::new(&x.coeff * &y.coeff * Rational::from_integer(BigInt::from(shared)), 1))
                } else {
                    Scalar::Exact(Surd::new(&x.coeff * &y.coeff * Rational::from_integer(BigInt::from(o)), k))
                }
            }
            _ => Scalar::Float(self.to_f64() * other.to_f64()),
        }
    }

    pub fn rational_lossless(x: f64) -> Option<Rational> {
        Rational::from_float(x)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Exact(Surd::rational(Rational::from_integer(BigInt::from(v))))
    }
}

impl From<i32> for Scalar {
    fn from(v: i32) -> Self {
        Scalar::from(v as i64)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<Rational> for Scalar {
    fn from(v: Rational) -> Self {
        Scalar::Exact(Surd::rational(v))
    }
}

impl From<Surd> for Scalar {
    fn from(v: Surd) -> Self {
        Scalar::Exact(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(s) => write!(f, "{s}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    /// Accepts `3`, `-1.25`, `2e-3`, `7/4`, `sqrt(2)`, `-sqrt(3)`, `3/2*sqrt(5)`.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse(s.to_string()));
        }
        if let Some(pos) = t.find("sqrt(") {
            let inner = t[pos + 5..].strip_suffix(')').ok_or_else(|| Error::Parse(s.to_string()))?;
            let k: u64 = inner.parse().map_err(|_| Error::Parse(s.to_string()))?;
            let head = &t[..pos];
            let coeff = match head {
                "" | "+" => Rational::one(),
                "-" => -Rational::one(),
                h => {
                    let h = h.strip_suffix('*').ok_or_else(|| Error::Parse(s.to_string()))?;
                    parse_rational(h).ok_or_else(|| Error::Parse(s.to_string()))?
                }
            };
            return Ok(Scalar::Exact(Surd::new(coeff, k)));
        }
        parse_rational(&t).map(Scalar::from).ok_or_else(|| Error::Parse(s.to_string()))
    }
}

/// Exact parse of a decimal or `p/q` string.
pub fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_decimal(p)?;
        let q = parse_decimal(q)?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = Rational::from_integer(n);
    if scale >= 0 {
        q *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -q } else { q })
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; shift both down
        let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
        let n = q.numer() >> shift;
        let d = q.denom() >> shift;
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

pub fn lcm_of_denominators<'a>(qs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    qs.into_iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn ceil_rational(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

pub fn floor_rational(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

pub fn abs_rational(q: &Rational) -> Rational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!("7/4".parse::<Scalar>().unwrap(), Scalar::from(q(7, 4)));
        assert_eq!("-1.25".parse::<Scalar>().unwrap(), Scalar::from(q(-5, 4)));
        assert_eq!("2e-3".parse::<Scalar>().unwrap(), Scalar::from(q(1, 500)));
        assert_eq!("0.5/3".parse::<Scalar>().unwrap(), Scalar::from(q(1, 6)));
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
    }

    #[test]
    fn parses_surds() {
        let s: Scalar = "3/2*sqrt(12)".parse().unwrap();
        assert_eq!(s, Scalar::Exact(Surd { coeff: q(3, 1), radicand: 3 }));
        let s: Scalar = "-sqrt(2)".parse().unwrap();
        assert!((s.to_f64() + std::f64::consts::SQRT_2).abs() < 1e-15);
        let s: Scalar = "sqrt(9)".parse().unwrap();
        assert_eq!(s.as_rational(), Some(&q(3, 1)));
    }

    #[test]
    fn surd_products() {
        let a: Scalar = "sqrt(2)".parse().unwrap();
        let b: Scalar = "sqrt(8)".parse().unwrap();
        assert_eq!(a.mul(&b).as_rational(), Some(&q(4, 1)));
        let c: Scalar = "sqrt(3)".parse().unwrap();
        assert_eq!(a.mul(&c), Scalar::Exact(Surd::new(q(1, 1), 6)));
    }
}
