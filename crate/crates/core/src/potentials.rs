//! Effective radial potentials of the dimensionless ground-state problems.
//!
//! Every case is written in the canonical form `-u'' + W(q) u = λ u` with
//! `u = q f` and `λ = 2γ`:
//!
//! * spin 0: `W = d²/(1+d²q²) + d²/(2(1+d²q²)²) + q² + l(l+1)/q²`
//! * spin 1, longitudinal: `W = q² + 1/q² + 1/(q²(1+q²d²)) + d²/(2(1+d²q²)²) + j(j+1)/q²`
//!
//! `d = ∞` is a separate symbolic case with the exact limits
//! `W = 1/q² + q²` for both spins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential is defined only for q > 0, got {0}")]
    NonPositiveQ(f64),
    #[error("d must be nonnegative and finite (use inf for the massless limit), got {0}")]
    InvalidD(f64),
    #[error("channel {channel:?} is not available for spin {spin:?}")]
    ChannelMismatch { spin: Spin, channel: Channel },
    #[error("cannot parse d value {0:?}")]
    ParseD(String),
    #[error("dispersions and mass must be positive")]
    NonPositiveInput,
}

/// The relativity parameter `d`, either finite or the symbolic massless limit.
/// Serialized as a number, or as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DValue {
    Finite(f64),
    Infinite,
}

impl DValue {
    pub fn finite(d: f64) -> Result<Self, PotentialError> {
        if d.is_finite() && d >= 0.0 {
            Ok(DValue::Finite(d))
        } else {
            Err(PotentialError::InvalidD(d))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DValue::Infinite)
    }

    /// Sort key placing `Infinite` after every finite value.
    pub fn sort_key(&self) -> f64 {
        match self {
            DValue::Finite(d) => *d,
            DValue::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for DValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DValue::Finite(d) => write!(f, "{d}"),
            DValue::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for DValue {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(DValue::Infinite),
            _ => {
                let v: f64 = t.parse().map_err(|_| PotentialError::ParseD(s.to_string()))?;
                DValue::finite(v)
            }
        }
    }
}

impl Serialize for DValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            DValue::Finite(d) => serializer.serialize_f64(*d),
            DValue::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for DValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(d) => DValue::finite(d).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Zero,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Scalar,
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    spin: Spin,
    channel: Channel,
    d: DValue,
    /// `l` for spin 0, `j` for spin 1.
    angular_index: u32,
}

impl PotentialSpec {
    pub fn new(
        spin: Spin,
        channel: Channel,
        d: DValue,
        angular_index: u32,
    ) -> Result<Self, PotentialError> {
        match (spin, channel) {
            (Spin::Zero, Channel::Scalar) | (Spin::One, Channel::Longitudinal) => {}
            _ => return Err(PotentialError::ChannelMismatch { spin, channel }),
        }
        if let DValue::Finite(v) = d {
            DValue::finite(v)?;
        }
        Ok(Self {
            spin,
            channel,
            d,
            angular_index,
        })
    }

    /// Spin-0 scalar channel with `l = 0`.
    pub fn scalar(d: DValue) -> Self {
        Self::new(Spin::Zero, Channel::Scalar, d, 0).expect("valid scalar spec")
    }

    /// Spin-1 longitudinal channel with `j = 0`.
    pub fn longitudinal(d: DValue) -> Self {
        Self::new(Spin::One, Channel::Longitudinal, d, 0).expect("valid longitudinal spec")
    }

    pub fn with_angular_index(mut self, index: u32) -> Self {
        self.angular_index = index;
        self
    }

    pub fn with_d(mut self, d: DValue) -> Self {
        self.d = d;
        self
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn d(&self) -> DValue {
        self.d
    }

    pub fn angular_index(&self) -> u32 {
        self.angular_index
    }

    fn centrifugal(&self) -> f64 {
        let l = self.angular_index as f64;
        l * (l + 1.0)
    }

    /// `W(q)` without the `q > 0` check, for inner loops.
    pub fn value_at(&self, q: f64) -> f64 {
        let q2 = q * q;
        let barrier = self.centrifugal() / q2;
        match (self.spin, self.d) {
            (_, DValue::Infinite) => 1.0 / q2 + q2 + barrier,
            (Spin::Zero, DValue::Finite(d)) => {
                if d == 0.0 {
                    return q2 + barrier;
                }
                let s = 1.0 + d * d * q2;
                d * d / s + d * d / (2.0 * s * s) + q2 + barrier
            }
            (Spin::One, DValue::Finite(d)) => {
                let s = 1.0 + d * d * q2;
                q2 + 1.0 / q2 + 1.0 / (q2 * s) + d * d / (2.0 * s * s) + barrier
            }
        }
    }

    /// The regular-part constant `w₀` in `W = c/q² + w₀ + O(q²)` near the origin.
    pub fn origin_constant(&self) -> f64 {
        match (self.spin, self.d) {
            (_, DValue::Infinite) => 0.0,
            (Spin::Zero, DValue::Finite(d)) => 1.5 * d * d,
            (Spin::One, DValue::Finite(d)) => -0.5 * d * d,
        }
    }
}

/// `W(q)` for `q > 0`.
pub fn effective_potential(q: f64, spec: &PotentialSpec) -> Result<f64, PotentialError> {
    if !(q > 0.0) {
        return Err(PotentialError::NonPositiveQ(q));
    }
    Ok(spec.value_at(q))
}

/// Leading singular behaviour at the origin: `W ≈ c/q²`, regular solution `u ~ q^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginBehavior {
    pub singular_strength: f64,
    /// `α = (1 + √(1 + 4c)) / 2`, so that `α(α - 1) = c`.
    pub exponent_alpha: f64,
}

pub fn origin_behavior(spec: &PotentialSpec) -> OriginBehavior {
    let base = match (spec.spin, spec.d) {
        (_, DValue::Infinite) => 1.0,
        (Spin::Zero, DValue::Finite(_)) => 0.0,
        // 1/q² + 1/(q²(1+q²d²)) → 2/q² at any finite d.
        (Spin::One, DValue::Finite(_)) => 2.0,
    };
    let c = base + spec.centrifugal();
    OriginBehavior {
        singular_strength: c,
        exponent_alpha: 0.5 * (1.0 + (1.0 + 4.0 * c).sqrt()),
    }
}

/// `d = (1/m) (Δp² / Δr²)^{1/4}` in natural units.
pub fn d_parameter(delta_p2: f64, delta_r2: f64, mass: f64) -> Result<f64, PotentialError> {
    if !(delta_p2 > 0.0 && delta_r2 > 0.0 && mass > 0.0) {
        return Err(PotentialError::NonPositiveInput);
    }
    Ok((delta_p2 / delta_r2).powf(0.25) / mass)
}
