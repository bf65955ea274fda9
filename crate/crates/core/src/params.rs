//! Model parameters for the affine preferential-attachment family.
//!
//! `delta` is carried either as an exact rational `p/q` or as a plain `f64`.
//! Rational values keep the attachment sampler and the enumeration oracle
//! exact; every decimal literal typed on the command line parses as one.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One of the three growth rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Self-loops allowed; starts from a single vertex with a self-loop.
    A,
    /// No self-loops at m = 1; starts from a double edge between vertices 1 and 2.
    B,
    /// m independent edges per vertex drawn against frozen degrees.
    C,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::A, Variant::B, Variant::C];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::A => "a",
            Variant::B => "b",
            Variant::C => "c",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Variant::A),
            "b" => Ok(Variant::B),
            "c" => Ok(Variant::C),
            other => Err(Error::InvalidParams(format!("unknown model `{other}` (expected a, b or c)"))),
        }
    }
}

/// The additive attachment constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Delta {
    /// `num / den` in lowest terms, `den >= 1`.
    Ratio { num: i64, den: u64 },
    Real(f64),
}

impl Delta {
    pub const ZERO: Delta = Delta::Ratio { num: 0, den: 1 };

    pub fn ratio(num: i64, den: u64) -> Result<Delta> {
        if den == 0 {
            return Err(Error::InvalidParams("delta denominator is zero".into()));
        }
        let g = gcd(num.unsigned_abs(), den);
        Ok(Delta::Ratio { num: num / g as i64, den: den / g })
    }

    pub fn integer(v: i64) -> Delta {
        Delta::Ratio { num: v, den: 1 }
    }

    /// Recovers an exact small-denominator rational when `x` is the double
    /// nearest to one (e.g. `0.1` becomes `1/10`); otherwise keeps `x` as is.
    pub fn from_f64(x: f64) -> Delta {
        if !x.is_finite() {
            return Delta::Real(x);
        }
        // continued-fraction convergents
        let (mut h0, mut h1) = (0i128, 1i128);
        let (mut k0, mut k1) = (1i128, 0i128);
        let mut r = x;
        for _ in 0..64 {
            let a = r.floor();
            if a.abs() > 1e15 {
                break;
            }
            let ai = a as i128;
            let h2 = ai * h1 + h0;
            let k2 = ai * k1 + k0;
            if k2 > 1_000_000 || h2.abs() > i64::MAX as i128 {
                break;
            }
            if (h2 as f64) / (k2 as f64) == x {
                return Delta::Ratio { num: h2 as i64, den: k2 as u64 };
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = r - a;
            if frac == 0.0 {
                break;
            }
            r = 1.0 / frac;
        }
        Delta::Real(x)
    }

    pub fn parse(s: &str) -> Result<Delta> {
        let s = s.trim();
        let bad = || Error::InvalidParams(format!("cannot parse delta `{s}`"));
        if let Some((p, q)) = s.split_once('/') {
            let num: i64 = p.trim().parse().map_err(|_| bad())?;
            let den: i64 = q.trim().parse().map_err(|_| bad())?;
            if den <= 0 {
                return Err(bad());
            }
            return Delta::ratio(num, den as u64);
        }
        if let Some(d) = parse_decimal(s) {
            return Ok(d);
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        Ok(Delta::from_f64(x))
    }

    pub fn value(self) -> f64 {
        match self {
            Delta::Ratio { num, den } => num as f64 / den as f64,
            Delta::Real(x) => x,
        }
    }

    pub fn as_ratio(self) -> Option<(i64, u64)> {
        match self {
            Delta::Ratio { num, den } => Some((num, den)),
            Delta::Real(_) => None,
        }
    }

    pub fn to_big_rational(self) -> Option<BigRational> {
        self.as_ratio()
            .map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// `delta / m`, exact for rationals.
    pub fn div_int(self, m: u32) -> Delta {
        match self {
            Delta::Ratio { num, den } => {
                Delta::ratio(num, den * m as u64).expect("non-zero denominator")
            }
            Delta::Real(x) => Delta::Real(x / m as f64),
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Delta::Ratio { num, den: 1 } => write!(f, "{num}"),
            Delta::Ratio { num, den } => write!(f, "{num}/{den}"),
            Delta::Real(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for Delta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Delta::parse(s)
    }
}

impl From<i64> for Delta {
    fn from(v: i64) -> Self {
        Delta::integer(v)
    }
}

impl From<f64> for Delta {
    fn from(x: f64) -> Self {
        Delta::from_f64(x)
    }
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Delta::integer(v)),
            Raw::Float(x) => Ok(Delta::from_f64(x)),
            Raw::Str(s) => Delta::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_decimal(s: &str) -> Option<Delta> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 12 || int_part.len() > 6 {
        return None;
    }
    let den = 10u64.pow(frac_part.len() as u32);
    let ip: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let fp: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let mut num = ip * den as i64 + fp;
    if neg {
        num = -num;
    }
    Delta::ratio(num, den).ok()
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Validated `(variant, m, delta)` with the model's derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PAParams {
    pub variant: Variant,
    pub m: u32,
    pub delta: Delta,
}

impl PAParams {
    pub fn new(variant: Variant, m: u32, delta: impl Into<Delta>) -> Result<PAParams> {
        let delta = delta.into();
        if m == 0 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        let d = delta.value();
        if !d.is_finite() || d <= -(m as f64) {
            return Err(Error::InvalidParams(format!(
                "delta must satisfy delta > -m (got delta={delta}, m={m})"
            )));
        }
        if let Delta::Ratio { num, den } = delta {
            if (num as i128) <= -((m as i128) * den as i128) {
                return Err(Error::InvalidParams(format!(
                    "delta must satisfy delta > -m (got delta={delta}, m={m})"
                )));
            }
        }
        Ok(PAParams { variant, m, delta })
    }

    pub fn delta_f(&self) -> f64 {
        self.delta.value()
    }

    fn md(&self) -> (f64, f64) {
        (self.m as f64, self.delta_f())
    }

    /// `delta / m`, the constant of the underlying m = 1 process for models (a), (b).
    pub fn delta_prime(&self) -> Delta {
        self.delta.div_int(self.m)
    }

    /// The m = 1 parameters whose collapse yields this model (variants A and B).
    pub fn single_edge_process(&self) -> PAParams {
        PAParams {
            variant: self.variant,
            m: 1,
            delta: self.delta_prime(),
        }
    }

    /// Power-law exponent `3 + delta/m`.
    pub fn tau(&self) -> f64 {
        let (m, d) = self.md();
        3.0 + d / m
    }

    /// `m / (2m + delta)`.
    pub fn a(&self) -> f64 {
        let (m, d) = self.md();
        m / (2.0 * m + d)
    }

    /// `(m + delta)/(2m + delta)`; for m = 1 this is `(1+delta)/(2+delta)`.
    pub fn big_delta(&self) -> f64 {
        let (m, d) = self.md();
        (m + d) / (2.0 * m + d)
    }

    /// Connector constant `(m+delta)^2 / (2m(2m+delta))^2`.
    pub fn eta(&self) -> f64 {
        let (m, d) = self.md();
        (m + d).powi(2) / (2.0 * m * (2.0 * m + d)).powi(2)
    }

    /// `(m + delta) / (3(2m + delta))`.
    pub fn a_md(&self) -> f64 {
        let (m, d) = self.md();
        (m + d) / (3.0 * (2.0 * m + d))
    }

    /// `m + 1 + delta`.
    pub fn m_delta(&self) -> f64 {
        let (m, d) = self.md();
        m + 1.0 + d
    }

    /// First time at which the model's graph is defined.
    pub fn initial_time(&self) -> u64 {
        match (self.variant, self.m) {
            (Variant::A, _) => 1,
            (Variant::B, 1) => 2,
            (Variant::B, _) => 1,
            (Variant::C, _) => 2,
        }
    }

    /// Number of event-log entries that are fixed by the initial graph.
    pub fn initial_entries(&self) -> usize {
        match (self.variant, self.m) {
            (Variant::A, m) => m as usize,
            (Variant::B, 1) => 2,
            (Variant::B, m) => m as usize,
            (Variant::C, m) => 2 * m as usize,
        }
    }
}

impl fmt::Display for PAParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model={} m={} delta={}", self.variant, self.m, self.delta)
    }
}
