//! Doppler shift and the single-receiver range formula.
//!
//! The range formula `d = c * f_d / (2 * f_emitted)` assumes a stationary
//! geometry with negligible relative velocity. It is dimensionally a
//! velocity-derived quantity rather than a geometric range, and a Doppler
//! shift alone isn't sufficient for accurate distance measurement once a
//! reflected signal is present. Every result therefore carries a
//! [`RangeCaveat`] so callers cannot mistake it for a measured range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used throughout unless configured otherwise (m/s).
pub const DEFAULT_PROPAGATION_SPEED: f64 = 3.0e8;

/// Exact speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerReading {
    f_emitted: f64,
    f_received: f64,
    c: f64,
}

impl DopplerReading {
    pub fn new(f_emitted: f64, f_received: f64, c: f64) -> Result<Self> {
        for (name, v) in [("f_emitted", f_emitted), ("f_received", f_received), ("c", c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { f_emitted, f_received, c })
    }

    /// Reading with the default propagation speed of 3e8 m/s.
    pub fn with_default_speed(f_emitted: f64, f_received: f64) -> Result<Self> {
        Self::new(f_emitted, f_received, DEFAULT_PROPAGATION_SPEED)
    }

    pub fn f_emitted(&self) -> f64 {
        self.f_emitted
    }

    pub fn f_received(&self) -> f64 {
        self.f_received
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeCaveat {
    /// Stationary-geometry idealization; not a geometric range measurement.
    IdealizedEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerRange {
    pub meters: f64,
    pub caveat: RangeCaveat,
}

/// `|f_received - f_emitted|` in hertz.
pub fn doppler_shift(r: &DopplerReading) -> f64 {
    (r.f_received - r.f_emitted).abs()
}

/// `c * f_d / (2 * f_emitted)`, flagged as an idealized estimate.
pub fn doppler_distance(r: &DopplerReading) -> DopplerRange {
    DopplerRange {
        meters: r.c * doppler_shift(r) / (2.0 * r.f_emitted),
        caveat: RangeCaveat::IdealizedEstimate,
    }
}
