//! CSV export, one row per trial.

use std::io::Write;

use serde::Serialize;

use super::report::Report;

#[derive(Debug, Serialize)]
struct Row<'a> {
    trial: usize,
    sigma_t: f64,
    mode: &'a str,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    residual_norm: Option<f64>,
    converged: bool,
}

/// Writes `trial, sigma_t, mode, x, y, z, residual_norm, converged`.
///
/// Monte-Carlo reports produce one row per trial. Otherwise the single run
/// is trial 0 and each solve record becomes a row. Missing values (failed
/// solves, `z` in 2D, Doppler readings) are empty cells.
pub fn write_csv<W: Write>(report: &Report, out: W) -> csv::Result<()> {
    let mode = report.mode.name();
    let mut w = csv::Writer::from_writer(out);
    let coords = |p: Option<&crate::Point>| match p {
        Some(p) => (Some(p.x), Some(p.y), (p.dim().len() == 3).then_some(p.z)),
        None => (None, None, None),
    };
    match &report.monte_carlo {
        Some(mc) => {
            for t in &mc.trials {
                let (x, y, z) = coords(t.estimate.as_ref());
                w.serialize(Row {
                    trial: t.trial,
                    sigma_t: t.sigma_t,
                    mode,
                    x,
                    y,
                    z,
                    residual_norm: t.residual_norm,
                    converged: t.converged,
                })?;
            }
        }
        None => {
            for s in &report.solves {
                let (x, y, z) = coords(s.result.as_ref().map(|r| &r.estimate));
                w.serialize(Row {
                    trial: 0,
                    sigma_t: report.input.scenario.noise_sigma_t,
                    mode,
                    x,
                    y,
                    z,
                    residual_norm: s.result.as_ref().map(|r| r.residual_norm),
                    converged: s.error.is_none() && s.result.as_ref().is_none_or(|r| r.converged),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
