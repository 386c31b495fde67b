//! Norm exponents, their duals, and vector p-norms.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance used when checking `1/p + 1/q = 1`.
const CONJUGATE_TOL: f64 = 1e-12;

/// A norm exponent `p >= 1`, with `f64::INFINITY` standing for the max-norm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormExponent(f64);

impl NormExponent {
    pub const ONE: NormExponent = NormExponent(1.0);
    pub const TWO: NormExponent = NormExponent(2.0);
    pub const INF: NormExponent = NormExponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(NormExponent(p))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> NormExponent {
        if self.0 == 1.0 {
            NormExponent::INF
        } else if self.0.is_infinite() {
            NormExponent::ONE
        } else {
            NormExponent(self.0 / (self.0 - 1.0))
        }
    }

    /// True for the three exponents with closed-form bounds: 1, 2 and infinity.
    pub fn is_standard(self) -> bool {
        self.0 == 1.0 || self.0 == 2.0 || self.0.is_infinite()
    }

    /// `‖v‖_p`.
    pub fn norm(self, v: &[f64]) -> f64 {
        lp_norm(v, self)
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(NormExponent::INF);
        }
        let p: f64 =
            t.parse().map_err(|_| Error::InvalidParameter { name: "p", reason: format!("cannot parse `{t}`") })?;
        NormExponent::new(p)
    }
}

// JSON has no infinity, so the max-norm exponent is written as the string "inf".
impl Serialize for NormExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => NormExponent::new(p),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A primal/dual exponent pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub p: NormExponent,
    pub q: NormExponent,
}

impl NormPair {
    pub fn from_primal(p: NormExponent) -> Self {
        NormPair { p, q: p.dual() }
    }

    pub fn is_conjugate(&self) -> bool {
        let (p, q) = (self.p.value(), self.q.value());
        match (p.is_infinite(), q.is_infinite()) {
            (true, false) => q == 1.0,
            (false, true) => p == 1.0,
            (true, true) => false,
            (false, false) => (1.0 / p + 1.0 / q - 1.0).abs() <= CONJUGATE_TOL,
        }
    }
}

/// Dual exponent of `p`: `1 ↦ ∞`, `∞ ↦ 1`, otherwise `p / (p - 1)`.
pub fn dual_exponent(p: f64) -> Result<f64> {
    Ok(NormExponent::new(p)?.dual().value())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖v‖_p` for any exponent `p >= 1`.
///
/// General exponents scale by the max entry first so that `|x|^p` neither
/// overflows nor underflows for moderately sized inputs.
pub fn lp_norm(v: &[f64], p: NormExponent) -> f64 {
    let p = p.value();
    if p == 1.0 {
        l1_norm(v)
    } else if p == 2.0 {
        l2_norm(v)
    } else if p.is_infinite() {
        linf_norm(v)
    } else {
        let scale = linf_norm(v);
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = v.iter().map(|x| (x.abs() / scale).powf(p)).sum();
        scale * s.powf(1.0 / p)
    }
}

pub fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
