//! Forward measurement simulator.
//!
//! Given emitter and receiver geometry this produces the true range matrix,
//! noise-free arrival timestamps and seeded timestamp jitter. It is the data
//! source for every solver test and for the CLI's Monte-Carlo sweeps.
//!
//! # Noise generator
//!
//! Jitter is drawn from `ChaCha8Rng::seed_from_u64(seed)` (the ChaCha stream
//! cipher with 8 rounds, from `rand_chacha`) fed through `rand_distr`'s
//! ziggurat `StandardNormal` sampler, then scaled by `sigma_t`. Samples are
//! consumed in row-major `[receiver][emitter]` order. Both algorithms are
//! pure integer/IEEE arithmetic, so a given `(arrivals, sigma_t, seed)`
//! yields bit-identical output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::doppler::DEFAULT_PROPAGATION_SPEED;
use crate::error::{Error, Result};
use crate::geometry::{distance, Dimension, Point};

/// How receivers timestamp arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClockModel {
    /// Every receiver reads one synchronized clock.
    #[default]
    Shared,
    /// Receiver `i` reads the shared clock plus `offsets[i]` seconds.
    Offsets(Vec<f64>),
}

impl ClockModel {
    fn offset(&self, receiver: usize) -> f64 {
        match self {
            ClockModel::Shared => 0.0,
            ClockModel::Offsets(o) => o[receiver],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub emitters: Vec<Point>,
    pub receivers: Vec<Point>,
    /// Propagation speed, m/s.
    pub c: f64,
    /// Carrier frequency, Hz.
    pub carrier: f64,
    /// Emission instant, s.
    pub emission_time: f64,
    /// Timestamp jitter standard deviation, s.
    pub noise_sigma_t: f64,
    pub seed: u64,
    pub clock: ClockModel,
}

impl Scenario {
    /// Scenario with c = 3e8 m/s, a 1 GHz carrier, emission at t = 0, no
    /// noise, seed 0 and a shared clock.
    pub fn new(emitters: Vec<Point>, receivers: Vec<Point>) -> Self {
        Self {
            emitters,
            receivers,
            c: DEFAULT_PROPAGATION_SPEED,
            carrier: 1.0e9,
            emission_time: 0.0,
            noise_sigma_t: 0.0,
            seed: 0,
            clock: ClockModel::Shared,
        }
    }

    pub fn dimension(&self) -> Option<Dimension> {
        self.emitters.first().or(self.receivers.first()).map(Point::dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.emitters.is_empty() {
            return Err(Error::EmptyInput("scenario has no emitters"));
        }
        if self.receivers.is_empty() {
            return Err(Error::EmptyInput("scenario has no receivers"));
        }
        let dim = self.emitters[0].dim();
        for p in self.emitters.iter().chain(&self.receivers) {
            if p.dim() != dim {
                return Err(Error::Dimension { expected: dim, found: p.dim() });
            }
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite position {p}")));
            }
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidInput(format!("c must be > 0, got {}", self.c)));
        }
        if !(self.carrier.is_finite() && self.carrier > 0.0) {
            return Err(Error::InvalidInput(format!("carrier must be > 0, got {}", self.carrier)));
        }
        if !self.emission_time.is_finite() {
            return Err(Error::InvalidInput("emission_time must be finite".into()));
        }
        if !(self.noise_sigma_t.is_finite() && self.noise_sigma_t >= 0.0) {
            return Err(Error::InvalidNoise(self.noise_sigma_t));
        }
        if let ClockModel::Offsets(o) = &self.clock {
            if o.len() != self.receivers.len() {
                return Err(Error::InvalidInput(format!(
                    "{} clock offsets for {} receivers",
                    o.len(),
                    self.receivers.len()
                )));
            }
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("clock offsets must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Ranges in meters indexed `[receiver][emitter]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let cols = d.first().map_or(0, Vec::len);
        if d.is_empty() || cols == 0 {
            return Err(Error::EmptyInput("distance matrix is empty"));
        }
        for row in &d {
            if row.len() != cols {
                return Err(Error::InvalidInput("distance matrix rows differ in length".into()));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidInput(format!("distance {v} is not finite and >= 0")));
            }
        }
        Ok(Self { d })
    }

    /// Distances from every receiver to every emitter.
    pub fn between(receivers: &[Point], emitters: &[Point]) -> Result<Self> {
        let d = receivers
            .iter()
            .map(|r| emitters.iter().map(|e| distance(r, e)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(d)
    }

    pub fn receivers(&self) -> usize {
        self.d.len()
    }

    pub fn emitters(&self) -> usize {
        self.d[0].len()
    }

    pub fn get(&self, receiver: usize, emitter: usize) -> f64 {
        self.d[receiver][emitter]
    }

    pub fn row(&self, receiver: usize) -> &[f64] {
        &self.d[receiver]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.d
    }
}

/// Arrival timestamps in seconds indexed `[receiver][emitter]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSet {
    pub times: Vec<Vec<f64>>,
    pub clock_model: ClockModel,
}

impl ArrivalSet {
    pub fn receivers(&self) -> usize {
        self.times.len()
    }

    pub fn emitters(&self) -> usize {
        self.times.first().map_or(0, Vec::len)
    }

    pub fn time(&self, receiver: usize, emitter: usize) -> f64 {
        self.times[receiver][emitter]
    }

    /// Arrival timestamps for a set of ranges, as if every signal left at
    /// `emission_time` and travelled at `c`.
    pub fn from_distances(dm: &DistanceMatrix, c: f64, emission_time: f64) -> Self {
        let times = dm
            .rows()
            .iter()
            .map(|row| row.iter().map(|d| emission_time + d / c).collect())
            .collect();
        Self { times, clock_model: ClockModel::Shared }
    }
}

pub fn true_distance_matrix(s: &Scenario) -> Result<DistanceMatrix> {
    s.validate()?;
    DistanceMatrix::between(&s.receivers, &s.emitters)
}

/// Noise-free arrivals: `emission_time + d / c`, plus the receiver's clock
/// offset when the clock model is not shared.
pub fn simulate_arrivals(s: &Scenario) -> Result<ArrivalSet> {
    let dm = true_distance_matrix(s)?;
    let times = dm
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let offset = s.clock.offset(i);
            row.iter().map(|d| s.emission_time + d / s.c + offset).collect()
        })
        .collect();
    Ok(ArrivalSet { times, clock_model: s.clock.clone() })
}

/// Adds independent zero-mean Gaussian jitter with standard deviation
/// `sigma_t` to every timestamp. See the module docs for the generator.
pub fn perturb_arrivals(a: &ArrivalSet, sigma_t: f64, seed: u64) -> Result<ArrivalSet> {
    if !(sigma_t.is_finite() && sigma_t >= 0.0) {
        return Err(Error::InvalidNoise(sigma_t));
    }
    if sigma_t == 0.0 {
        return Ok(a.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = a
        .times
        .iter()
        .map(|row| {
            row.iter()
                .map(|t| {
                    let z: f64 = rng.sample(StandardNormal);
                    t + sigma_t * z
                })
                .collect()
        })
        .collect();
    Ok(ArrivalSet { times, clock_model: a.clock_model.clone() })
}
