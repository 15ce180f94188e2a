//! Mode dispatch and Monte-Carlo sweeps.

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::doppler::{doppler_distance, doppler_shift, DopplerReading};
use crate::error::{Error, Result};
use crate::geometry::{centroid, distance, Point};
use crate::sim::{perturb_arrivals, simulate_arrivals, ArrivalSet, DistanceMatrix};
use crate::solver::SolveResult;
use crate::tdoa::{arrival_deltas, combined_direction, locate_emitter_2d, locate_emitter_3d};
use crate::trilat::{team_relative_position, trilaterate_2d, trilaterate_3d, trilaterate_lsq, TrilaterationProblem};

use super::report::{summarize, DopplerOutput, MonteCarloReport, Provenance, Report, SolveRecord, TrialRecord};
use super::scenario::{Mode, ScenarioFile};

/// Runs a validated scenario file. Deterministic apart from
/// `provenance.generated_at`.
pub fn run(file: &ScenarioFile) -> Report {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    run_at(file, now)
}

/// [`run`] with a caller-supplied timestamp.
pub fn run_at(file: &ScenarioFile, generated_at: u64) -> Report {
    let s = &file.scenario;
    let solves = match file.solve.mode {
        Mode::Doppler => doppler_records(file),
        Mode::Trilat2d | Mode::Trilat3d if s.distances.is_some() => {
            let d = s.distances.clone().unwrap_or_default();
            vec![trilat_record("position", file, d, None)]
        }
        _ => match noisy_arrivals(file, s.noise_sigma_t, s.seed) {
            Ok(a) => solve_from_arrivals(file, &a),
            Err(e) => vec![failed("arrivals", e)],
        },
    };
    Report {
        input: file.clone(),
        mode: file.solve.mode,
        solves,
        monte_carlo: file.monte_carlo.as_ref().map(|_| monte_carlo(file)),
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: s.seed,
            generated_at,
        },
    }
}

fn failed(label: &str, e: Error) -> SolveRecord {
    let mut r = SolveRecord::new(label);
    r.error = Some(e.to_string());
    r
}

fn noisy_arrivals(file: &ScenarioFile, sigma_t: f64, seed: u64) -> Result<ArrivalSet> {
    let clean = simulate_arrivals(&file.scenario.to_scenario())?;
    perturb_arrivals(&clean, sigma_t, seed)
}

/// Fills result, truth and error from a solve outcome. A non-converged
/// solve keeps its best iterate alongside the error.
fn record(label: &str, outcome: Result<SolveResult>, truth: Option<Point>) -> SolveRecord {
    let mut r = SolveRecord::new(label);
    r.truth = truth;
    match outcome {
        Ok(res) => r.result = Some(res),
        Err(Error::NoConvergence { best }) => {
            r.error = Some(Error::NoConvergence { best: best.clone() }.to_string());
            r.result = Some(*best);
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    if let (Some(res), Some(t)) = (&r.result, truth) {
        r.error_m = distance(&res.estimate, &t).ok();
    }
    r
}

fn doppler_records(file: &ScenarioFile) -> Vec<SolveRecord> {
    let s = &file.scenario;
    s.f_received
        .iter()
        .flatten()
        .enumerate()
        .map(|(i, &f_r)| {
            let label = format!("reading {i}");
            match DopplerReading::new(s.carrier, f_r, s.c) {
                Ok(reading) => {
                    let mut r = SolveRecord::new(label);
                    r.doppler = Some(DopplerOutput {
                        f_emitted: s.carrier,
                        f_received: f_r,
                        shift_hz: doppler_shift(&reading),
                        range: doppler_distance(&reading),
                    });
                    r
                }
                Err(e) => failed(&label, e),
            }
        })
        .collect()
}

fn trilaterate(file: &ScenarioFile, distances: Vec<f64>) -> Result<SolveResult> {
    let p = TrilaterationProblem::new(file.scenario.emitters.clone(), distances)?;
    match (p.emitters().len(), file.solve.mode) {
        (3, Mode::Trilat2d) => trilaterate_2d(&p),
        (3, _) => trilaterate_3d(&p),
        _ => trilaterate_lsq(&p, centroid(p.emitters())?, &file.options),
    }
}

fn trilat_record(label: &str, file: &ScenarioFile, distances: Vec<f64>, truth: Option<Point>) -> SolveRecord {
    record(label, trilaterate(file, distances), truth)
}

fn locate(file: &ScenarioFile, a: &ArrivalSet, emitter: usize) -> Result<SolveResult> {
    let rd = arrival_deltas(a, emitter, 0, file.scenario.c)?;
    let receivers = &file.scenario.receivers;
    match file.solve.mode {
        Mode::Tdoa2d => locate_emitter_2d(receivers, &rd, &file.options),
        _ => locate_emitter_3d(receivers, &rd, file.solve.emitter_plane_z, &file.options),
    }
}

fn tdoa_record(file: &ScenarioFile, a: &ArrivalSet, emitter: usize) -> SolveRecord {
    let s = &file.scenario;
    let mut r = record(&format!("emitter {emitter}"), locate(file, a, emitter), Some(s.emitters[emitter]));
    if let Some(res) = r.result.as_ref().filter(|_| r.error.is_none()) {
        if let Ok(dir) = combined_direction(&s.receivers, &res.estimate) {
            r.heading = dir.renormalized().ok();
            r.direction = Some(dir);
        }
    }
    r
}

/// Every record for the modes driven by simulated timestamps.
fn solve_from_arrivals(file: &ScenarioFile, a: &ArrivalSet) -> Vec<SolveRecord> {
    let s = &file.scenario;
    match file.solve.mode {
        Mode::Tdoa2d | Mode::Tdoa3d => (0..s.emitters.len()).map(|e| tdoa_record(file, a, e)).collect(),
        Mode::Trilat2d | Mode::Trilat3d => (0..s.receivers.len())
            .map(|j| {
                let ranges = (0..s.emitters.len()).map(|i| s.c * (a.time(j, i) - s.emission_time)).collect();
                trilat_record(&format!("receiver {j}"), file, ranges, Some(s.receivers[j]))
            })
            .collect(),
        Mode::Pipeline => {
            let mut records: Vec<SolveRecord> = (0..s.emitters.len()).map(|e| tdoa_record(file, a, e)).collect();
            records.push(team_record(file, &records));
            records
        }
        Mode::Doppler => doppler_records(file),
    }
}

/// Second pipeline step: the team reference point from the drones' ranges
/// to the estimated emitters.
fn team_record(file: &ScenarioFile, emitter_records: &[SolveRecord]) -> SolveRecord {
    let drones = &file.scenario.receivers;
    let truth = centroid(drones).ok();
    let estimates: Option<Vec<Point>> = emitter_records
        .iter()
        .map(|r| r.result.as_ref().filter(|_| r.error.is_none()).map(|res| res.estimate))
        .collect();
    let Some(estimates) = estimates else {
        let mut r = SolveRecord::new("team");
        r.truth = truth;
        r.error = Some("an emitter could not be located".to_owned());
        return r;
    };
    let outcome = DistanceMatrix::between(drones, &estimates)
        .and_then(|dm| team_relative_position(drones, &estimates, &dm, &file.options));
    record("team", outcome, truth)
}

fn target(mode: Mode) -> &'static str {
    match mode {
        Mode::Tdoa2d | Mode::Tdoa3d => "emitter 0",
        Mode::Trilat2d | Mode::Trilat3d => "receiver 0",
        Mode::Pipeline => "team",
        Mode::Doppler => "reading 0",
    }
}

fn trial(file: &ScenarioFile, clean: &Result<ArrivalSet>, index: usize, sigma_t: f64) -> TrialRecord {
    let seed = file.scenario.seed.wrapping_add(index as u64);
    let mut t = TrialRecord {
        trial: index,
        sigma_t,
        seed,
        estimate: None,
        residual_norm: None,
        converged: false,
        error_m: None,
        error: None,
    };
    let arrivals = match clean.as_ref().map_err(Clone::clone).and_then(|a| perturb_arrivals(a, sigma_t, seed)) {
        Ok(a) => a,
        Err(e) => {
            t.error = Some(e.to_string());
            return t;
        }
    };
    let records = solve_from_arrivals(file, &arrivals);
    let name = target(file.solve.mode);
    let r = records.into_iter().find(|r| r.label == name).expect("target record is always produced");
    if let Some(res) = &r.result {
        t.estimate = Some(res.estimate);
        t.residual_norm = Some(res.residual_norm);
        t.converged = res.converged && r.error.is_none();
    }
    t.error_m = r.error_m.filter(|_| r.error.is_none());
    t.error = r.error;
    t
}

/// Trials for every sigma in the list. Trial `i` perturbs with seed
/// `scenario.seed + i` at every noise level, and output order follows
/// (sigma, trial) regardless of scheduling.
fn monte_carlo(file: &ScenarioFile) -> MonteCarloReport {
    let mc = file.monte_carlo.as_ref().expect("called with a monte_carlo section");
    let clean = simulate_arrivals(&file.scenario.to_scenario());
    let jobs: Vec<(usize, f64)> = mc
        .sigma_t_list
        .iter()
        .flat_map(|&sigma| (0..mc.trials).map(move |i| (i, sigma)))
        .collect();
    let trials: Vec<TrialRecord> = jobs.par_iter().map(|&(i, sigma)| trial(file, &clean, i, sigma)).collect();
    let levels = mc
        .sigma_t_list
        .iter()
        .zip(trials.chunks(mc.trials))
        .map(|(&sigma, chunk)| summarize(sigma, chunk))
        .collect();
    MonteCarloReport { target: target(file.solve.mode).to_owned(), levels, trials }
}
