//! Scenario file schema, parsing and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doppler::DEFAULT_PROPAGATION_SPEED;
use crate::geometry::{is_collinear, Dimension, Point};
use crate::sim::{ClockModel, Scenario};
use crate::solver::SolverOptions;

use super::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Doppler,
    Tdoa2d,
    Tdoa3d,
    Trilat2d,
    Trilat3d,
    Pipeline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Doppler => "doppler",
            Mode::Tdoa2d => "tdoa2d",
            Mode::Tdoa3d => "tdoa3d",
            Mode::Trilat2d => "trilat2d",
            Mode::Trilat3d => "trilat3d",
            Mode::Pipeline => "pipeline",
        }
    }

    fn dimension(self) -> Option<Dimension> {
        match self {
            Mode::Doppler => None,
            Mode::Tdoa2d | Mode::Trilat2d => Some(Dimension::Two),
            Mode::Tdoa3d | Mode::Trilat3d | Mode::Pipeline => Some(Dimension::Three),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| format!("unknown mode '{s}' (doppler, tdoa2d, tdoa3d, trilat2d, trilat3d, pipeline)"))
    }
}

fn default_c() -> f64 {
    DEFAULT_PROPAGATION_SPEED
}

fn default_carrier() -> f64 {
    1.0e9
}

fn default_plane() -> Option<f64> {
    Some(0.0)
}

fn is_shared(c: &ClockModel) -> bool {
    *c == ClockModel::Shared
}

/// Geometry and measurement settings. Field names match [`Scenario`], plus
/// the directly supplied measurements some modes accept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub emitters: Vec<Point>,
    #[serde(default)]
    pub receivers: Vec<Point>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_carrier")]
    pub carrier: f64,
    #[serde(default)]
    pub emission_time: f64,
    #[serde(default)]
    pub noise_sigma_t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "is_shared")]
    pub clock: ClockModel,
    /// Receiver-to-emitter ranges for the trilateration modes, one per
    /// emitter. Mutually exclusive with `receivers` there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    /// Received frequencies for doppler mode; `carrier` is the emitted one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_received: Option<Vec<f64>>,
}

impl ScenarioSpec {
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            emitters: self.emitters.clone(),
            receivers: self.receivers.clone(),
            c: self.c,
            carrier: self.carrier,
            emission_time: self.emission_time,
            noise_sigma_t: self.noise_sigma_t,
            seed: self.seed,
            clock: self.clock.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub mode: Mode,
    /// Height of the plane ground emitters lie on (tdoa3d and pipeline).
    /// `null` leaves all three coordinates free.
    #[serde(default = "default_plane")]
    pub emitter_plane_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub trials: usize,
    pub sigma_t_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub scenario: ScenarioSpec,
    pub solve: SolveSpec,
    #[serde(default)]
    pub options: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let file = read_scenario(path)?;
    file.validate()?;
    Ok(file)
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile, CliError> {
    let file = parse_unvalidated(text)?;
    file.validate()?;
    Ok(file)
}

/// Reads a scenario file, checking syntax and schema but not invariants, so
/// that command-line overrides can be applied before [`ScenarioFile::validate`].
pub fn read_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_unvalidated(&text)
}

fn parse_unvalidated(text: &str) -> Result<ScenarioFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.to_owned(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and >= 0, got {v}")))
    }
}

fn check_points(field: &str, points: &[Point], dim: Dimension) -> Result<(), CliError> {
    for (i, p) in points.iter().enumerate() {
        if p.dim() != dim {
            return Err(invalid(field, format!("entry {i} has {} coordinates, mode needs {}", p.dim().len(), dim.len())));
        }
    }
    Ok(())
}

fn check_count(field: &str, points: &[Point], n: usize) -> Result<(), CliError> {
    if points.len() == n {
        Ok(())
    } else {
        Err(invalid(field, format!("mode needs exactly {n}, got {}", points.len())))
    }
}

fn check_not_collinear(field: &str, points: &[Point]) -> Result<(), CliError> {
    if points.len() == 3 && is_collinear(&points[0], &points[1], &points[2], 1e-9) {
        Err(invalid(field, "points are collinear"))
    } else {
        Ok(())
    }
}

impl ScenarioFile {
    /// Enforces every invariant of the scenario, the options and the chosen
    /// mode, naming the first offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let s = &self.scenario;
        positive("c", s.c)?;
        positive("carrier", s.carrier)?;
        if !s.emission_time.is_finite() {
            return Err(invalid("emission_time", "must be finite"));
        }
        non_negative("noise_sigma_t", s.noise_sigma_t)?;
        if let ClockModel::Offsets(o) = &s.clock {
            if o.len() != s.receivers.len() {
                return Err(invalid("clock", format!("{} offsets for {} receivers", o.len(), s.receivers.len())));
            }
            if o.iter().any(|v| !v.is_finite()) {
                return Err(invalid("clock", "offsets must be finite"));
            }
        }
        self.validate_options()?;

        let mode = self.solve.mode;
        if mode != Mode::Doppler && s.f_received.is_some() {
            return Err(invalid("f_received", "only used in doppler mode"));
        }
        if !matches!(mode, Mode::Trilat2d | Mode::Trilat3d) && s.distances.is_some() {
            return Err(invalid("distances", "only used in trilat2d/trilat3d modes"));
        }
        if let Some(z) = self.solve.emitter_plane_z {
            if !z.is_finite() {
                return Err(invalid("emitter_plane_z", "must be finite or null"));
            }
        }
        match mode {
            Mode::Doppler => self.validate_doppler()?,
            Mode::Tdoa2d | Mode::Tdoa3d => {
                let dim = mode.dimension().expect("tdoa modes have a dimension");
                check_count("receivers", &s.receivers, 3)?;
                check_points("receivers", &s.receivers, dim)?;
                check_not_collinear("receivers", &s.receivers)?;
                if s.emitters.is_empty() {
                    return Err(invalid("emitters", "at least one emitter is required"));
                }
                check_points("emitters", &s.emitters, dim)?;
            }
            Mode::Trilat2d | Mode::Trilat3d => self.validate_trilat(mode.dimension().expect("trilat modes have a dimension"))?,
            Mode::Pipeline => {
                check_count("receivers", &s.receivers, 3)?;
                check_points("receivers", &s.receivers, Dimension::Three)?;
                check_not_collinear("receivers", &s.receivers)?;
                check_count("emitters", &s.emitters, 3)?;
                check_points("emitters", &s.emitters, Dimension::Three)?;
            }
        }
        if let Some(mc) = &self.monte_carlo {
            if mode == Mode::Doppler {
                return Err(invalid("monte_carlo", "doppler mode has no timestamp noise to sweep"));
            }
            if s.distances.is_some() {
                return Err(invalid("monte_carlo", "supplied distances carry no timestamps to perturb"));
            }
            if mc.trials == 0 {
                return Err(invalid("trials", "must be >= 1"));
            }
            if mc.sigma_t_list.is_empty() {
                return Err(invalid("sigma_t_list", "must not be empty"));
            }
            for v in &mc.sigma_t_list {
                non_negative("sigma_t_list", *v)?;
            }
        }
        Ok(())
    }

    fn validate_options(&self) -> Result<(), CliError> {
        let o = &self.options;
        if o.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be >= 1"));
        }
        if o.multistart_count == 0 {
            return Err(invalid("multistart_count", "must be >= 1"));
        }
        positive("step_tolerance", o.step_tolerance)?;
        positive("residual_tolerance", o.residual_tolerance)?;
        positive("damping_initial", o.damping_initial)
    }

    fn validate_doppler(&self) -> Result<(), CliError> {
        match &self.scenario.f_received {
            None => Err(invalid("f_received", "doppler mode needs received frequencies")),
            Some(f) if f.is_empty() => Err(invalid("f_received", "must not be empty")),
            Some(f) => f.iter().try_for_each(|v| positive("f_received", *v)),
        }
    }

    fn validate_trilat(&self, dim: Dimension) -> Result<(), CliError> {
        let s = &self.scenario;
        if s.emitters.len() < 3 {
            return Err(invalid("emitters", format!("at least 3 are required, got {}", s.emitters.len())));
        }
        check_points("emitters", &s.emitters, dim)?;
        check_not_collinear("emitters", &s.emitters)?;
        match (&s.distances, s.receivers.is_empty()) {
            (Some(_), false) => Err(invalid("distances", "give either distances or receivers, not both")),
            (None, true) => Err(invalid("distances", "give either distances or receivers")),
            (Some(d), true) => {
                if d.len() != s.emitters.len() {
                    return Err(invalid("distances", format!("{} distances for {} emitters", d.len(), s.emitters.len())));
                }
                d.iter().try_for_each(|v| non_negative("distances", *v))
            }
            (None, false) => check_points("receivers", &s.receivers, dim),
        }
    }
}
