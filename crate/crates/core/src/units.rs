//! Unit-tagged quantity parsing for scenario files.
//!
//! Every physical quantity in a scenario is written as a string with an
//! explicit unit, e.g. `"100 m"`, `"27.5 s"`, `"202.30 mW"`, `"10 m/s"`.
//! Parsing a quantity against the wrong dimension is a distinct error from a
//! malformed number, so schema diagnostics can say *which* field carried the
//! wrong unit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Power,
    Speed,
}

impl Dimension {
    pub fn label(self) -> &'static str {
        match self {
            Dimension::Length => "length (m)",
            Dimension::Time => "time (s or ms)",
            Dimension::Power => "power (mW or W)",
            Dimension::Speed => "speed (m/s)",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("malformed quantity {text:?}: expected \"<number> <unit>\"")]
    Malformed { text: String },
    #[error("unit mismatch in {text:?}: expected {expected}, found unit {found:?}")]
    Mismatch {
        text: String,
        expected: &'static str,
        found: String,
    },
    #[error("non-finite quantity {text:?}")]
    NonFinite { text: String },
}

fn split(text: &str) -> Result<(f64, &str), UnitError> {
    let t = text.trim();
    let idx = t
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| UnitError::Malformed { text: text.into() })?;
    let (num, unit) = t.split_at(idx);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| UnitError::Malformed { text: text.into() })?;
    if !value.is_finite() {
        return Err(UnitError::NonFinite { text: text.into() });
    }
    Ok((value, unit.trim()))
}

/// Parse a length into meters.
pub fn meters(text: &str) -> Result<f64, UnitError> {
    let (value, unit) = split(text)?;
    match unit {
        "m" => Ok(value),
        "km" => Ok(value * 1000.0),
        _ => Err(UnitError::Mismatch {
            text: text.into(),
            expected: Dimension::Length.label(),
            found: unit.into(),
        }),
    }
}

/// Parse a duration into integer microseconds.
pub fn micros(text: &str) -> Result<u64, UnitError> {
    let (value, unit) = split(text)?;
    let us = match unit {
        "s" => value * 1_000_000.0,
        "ms" => value * 1_000.0,
        "us" => value,
        _ => {
            return Err(UnitError::Mismatch {
                text: text.into(),
                expected: Dimension::Time.label(),
                found: unit.into(),
            })
        }
    };
    if us < 0.0 || us > 2.0_f64.powi(62) {
        return Err(UnitError::NonFinite { text: text.into() });
    }
    Ok(us.round() as u64)
}

/// Parse a power into milliwatts.
pub fn milliwatts(text: &str) -> Result<f64, UnitError> {
    let (value, unit) = split(text)?;
    match unit {
        "mW" => Ok(value),
        "W" => Ok(value * 1000.0),
        _ => Err(UnitError::Mismatch {
            text: text.into(),
            expected: Dimension::Power.label(),
            found: unit.into(),
        }),
    }
}

/// Parse a speed into meters per second.
pub fn meters_per_second(text: &str) -> Result<f64, UnitError> {
    let (value, unit) = split(text)?;
    match unit {
        "m/s" => Ok(value),
        "km/h" => Ok(value / 3.6),
        _ => Err(UnitError::Mismatch {
            text: text.into(),
            expected: Dimension::Speed.label(),
            found: unit.into(),
        }),
    }
}

/// Canonical rendering used when a scenario is serialized back out.
pub fn fmt_meters(v: f64) -> String {
    format!("{} m", trim_float(v))
}

pub fn fmt_micros(us: u64) -> String {
    if us.is_multiple_of(1_000_000) {
        format!("{} s", us / 1_000_000)
    } else if us.is_multiple_of(1_000) {
        format!("{} ms", us / 1_000)
    } else {
        format!("{us} us")
    }
}

pub fn fmt_milliwatts(v: f64) -> String {
    format!("{} mW", trim_float(v))
}

pub fn fmt_speed(v: f64) -> String {
    format!("{} m/s", trim_float(v))
}

fn trim_float(v: f64) -> String {
    // Shortest representation that round-trips through f64.
    let mut s = format!("{v}");
    if s.ends_with(".0") {
        s.truncate(s.len() - 2);
    }
    s
}

/// Simulation timestamps and durations: integer microseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    pub fn from_secs(s: u64) -> Micros {
        Micros(s * 1_000_000)
    }

    pub fn from_millis(ms: u64) -> Micros {
        Micros(ms * 1_000)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, rhs: Micros) -> Micros {
        Micros(self.0.saturating_sub(rhs.0))
    }
}

impl std::ops::Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

impl std::ops::Mul<u64> for Micros {
    type Output = Micros;
    fn mul(self, rhs: u64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl std::fmt::Display for Micros {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}us", self.0)
    }
}
