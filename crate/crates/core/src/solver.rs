//! Nonlinear least-squares machinery shared by the TDOA and trilateration
//! solvers, plus the brute-force oracles used to check them.
//!
//! [`gauss_newton`] is a damped Gauss-Newton iteration in the Newton-Raphson
//! family. Each iteration first tries the undamped step. Singular normal
//! equations or a step that does not reduce the squared residual switch on
//! Levenberg-Marquardt damping, which is multiplied by 10 on every rejected
//! step and divided by 10 on every accepted one (dropping back to zero once
//! it falls below `damping_initial`).

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dimension, Point};

/// Evaluations closer than this to an anchor are nudged off it.
pub const ANCHOR_GUARD: f64 = 1e-9;

/// Default lattice size limit for [`grid_search`].
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

const MAX_DAMPING: f64 = 1e20;

/// Relative residual level treated as exact: a few ulps of the coordinates.
const ROUNDING_FLOOR: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop once a step is shorter than this (m).
    pub step_tolerance: f64,
    /// Stop once an accepted step lowers the squared residual by less than
    /// this fraction of its previous value.
    pub residual_tolerance: f64,
    pub damping_initial: f64,
    /// Number of starting points for multi-start solves.
    pub multistart_count: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-10,
            residual_tolerance: 1e-12,
            damping_initial: 1e-3,
            multistart_count: 9,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")))
            }
        };
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if self.multistart_count == 0 {
            return Err(Error::InvalidInput("multistart_count must be >= 1".into()));
        }
        positive("step_tolerance", self.step_tolerance)?;
        positive("residual_tolerance", self.residual_tolerance)?;
        positive("damping_initial", self.damping_initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveFlag {
    /// Two solutions mirrored through the anchor plane fit equally well.
    MirrorAmbiguity,
    /// Fewer independent constraints than unknowns.
    UnderDetermined,
    /// No point satisfies every measurement within tolerance.
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: Point,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub estimate: Point,
    /// Sorted by residual norm, then lexicographically by coordinates.
    pub candidates: Vec<Candidate>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flags: BTreeSet<SolveFlag>,
}

impl SolveResult {
    pub fn single(point: Point, residual_norm: f64, iterations: usize, converged: bool) -> Self {
        Self {
            estimate: point,
            candidates: vec![Candidate { point, residual_norm }],
            residual_norm,
            iterations,
            converged,
            flags: BTreeSet::new(),
        }
    }

    pub fn has_flag(&self, flag: SolveFlag) -> bool {
        self.flags.contains(&flag)
    }
}

pub fn sort_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| {
        a.residual_norm
            .total_cmp(&b.residual_norm)
            .then_with(|| a.point.lex_cmp(&b.point))
    });
}

pub fn sum_of_squares(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// `q - anchor` and its length, with `q` moved `ANCHOR_GUARD` along +x when
/// it sits on the anchor so that unit vectors stay defined.
pub fn guarded_offset(q: &Point, anchor: &Point) -> (Point, f64) {
    let delta = *q - *anchor;
    let n = delta.norm();
    if n >= ANCHOR_GUARD {
        return (delta, n);
    }
    let mut nudged = delta;
    nudged.x += ANCHOR_GUARD;
    let n = nudged.norm();
    (nudged, n)
}

/// Full iteration record, kept separate so tests can inspect the history.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub point: Point,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Squared residual norm after each accepted step, starting at `init`.
    #[cfg_attr(not(test), allow(dead_code))]
    pub accepted_costs: Vec<f64>,
}

fn residual_vector<R>(residual_fn: &R, p: &Point) -> DVector<f64>
where
    R: Fn(&Point) -> Vec<f64>,
{
    DVector::from_vec(residual_fn(p))
}

pub(crate) fn minimize<R, J>(residual_fn: R, jacobian_fn: J, init: Point, opts: &SolverOptions) -> Result<Trace>
where
    R: Fn(&Point) -> Vec<f64>,
    J: Fn(&Point) -> DMatrix<f64>,
{
    opts.validate()?;
    if !init.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite initial point {init}")));
    }
    let n = init.dim().len();
    let mut p = init;
    let mut r = residual_vector(&residual_fn, &p);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::InvalidInput(format!("residuals are not finite at {init}")));
    }
    let mut accepted_costs = vec![cost];
    let mut damping = 0.0_f64;
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian_fn(&p);
        assert_eq!(jac.ncols(), n, "jacobian has wrong column count");
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let gradient = &jt * &r;
        if cost == 0.0 || gradient.norm() == 0.0 || at_rounding_floor(cost, &p) {
            converged = true;
            break;
        }
        let max_diag = (0..n).map(|k| normal[(k, k)]).fold(0.0_f64, f64::max);
        let diag_floor = if max_diag > 0.0 { max_diag * 1e-9 } else { 1.0 };

        loop {
            let mut damped = normal.clone();
            if damping > 0.0 {
                for k in 0..n {
                    damped[(k, k)] += damping * normal[(k, k)].max(diag_floor);
                }
            }
            let step = match damped.cholesky() {
                Some(chol) => -chol.solve(&gradient),
                None => {
                    damping = escalate(damping, opts);
                    if damping > MAX_DAMPING {
                        converged = true;
                        break 'outer;
                    }
                    continue;
                }
            };
            let step_norm = step.norm();
            let mut candidate = p;
            for k in 0..n {
                candidate.set_coord(k, p.coord(k) + step[k]);
            }
            let r_new = residual_vector(&residual_fn, &candidate);
            let cost_new = r_new.norm_squared();

            if cost_new.is_finite() && cost_new < cost {
                let decrease = cost - cost_new;
                let previous = cost;
                p = candidate;
                r = r_new;
                cost = cost_new;
                accepted_costs.push(cost);
                damping /= 10.0;
                if damping < opts.damping_initial {
                    damping = 0.0;
                }
                if step_norm < opts.step_tolerance
                    || decrease <= opts.residual_tolerance * previous
                    || at_rounding_floor(cost, &p)
                {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if step_norm < opts.step_tolerance {
                // No representable improvement left.
                converged = true;
                break 'outer;
            }
            damping = escalate(damping, opts);
            if damping > MAX_DAMPING {
                converged = true;
                break 'outer;
            }
        }
    }

    Ok(Trace { point: p, cost, iterations, converged, accepted_costs })
}

/// Residual norm indistinguishable from rounding in coordinates of this size.
fn at_rounding_floor(cost: f64, p: &Point) -> bool {
    cost.sqrt() <= ROUNDING_FLOOR * p.norm().max(1.0)
}

fn escalate(damping: f64, opts: &SolverOptions) -> f64 {
    if damping == 0.0 {
        opts.damping_initial
    } else {
        damping * 10.0
    }
}

/// Minimizes `||residual_fn(p)||^2` starting from `init`.
///
/// The number of free coordinates follows `init`'s dimension, and
/// `jacobian_fn` must return one column per free coordinate. Accepted steps
/// never increase the squared residual. Running out of iterations yields
/// [`Error::NoConvergence`] carrying the best iterate.
pub fn gauss_newton<R, J>(residual_fn: R, jacobian_fn: J, init: Point, opts: &SolverOptions) -> Result<SolveResult>
where
    R: Fn(&Point) -> Vec<f64>,
    J: Fn(&Point) -> DMatrix<f64>,
{
    let trace = minimize(residual_fn, jacobian_fn, init, opts)?;
    let result = SolveResult::single(trace.point, trace.cost.sqrt(), trace.iterations, trace.converged);
    if trace.converged {
        Ok(result)
    } else {
        Err(Error::NoConvergence { best: Box::new(result) })
    }
}

/// Central-difference Jacobian: entry `(i, k)` is
/// `(r_i(q + h e_k) - r_i(q - h e_k)) / 2h`.
pub fn finite_difference_jacobian<R>(residual_fn: R, q: &Point, h: f64) -> DMatrix<f64>
where
    R: Fn(&Point) -> Vec<f64>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = q.dim().len();
    let m = residual_fn(q).len();
    let mut jac = DMatrix::zeros(m, n);
    for k in 0..n {
        let mut plus = *q;
        let mut minus = *q;
        plus.set_coord(k, q.coord(k) + h);
        minus.set_coord(k, q.coord(k) - h);
        let (rp, rm) = (residual_fn(&plus), residual_fn(&minus));
        for i in 0..m {
            jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Axis-aligned search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub lower: Point,
    pub upper: Point,
}

impl GridBounds {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::Dimension { expected: lower.dim(), found: upper.dim() });
        }
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        for k in 0..lower.dim().len() {
            if lower.coord(k) > upper.coord(k) {
                return Err(Error::InvalidInput(format!("empty grid bounds along axis {k}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Cube of half-width `half` around `center`.
    pub fn around(center: Point, half: f64) -> Result<Self> {
        let offset = match center.dim() {
            Dimension::Two => Point::xy(half, half),
            Dimension::Three => Point::xyz(half, half, half),
        };
        Self::new(center - offset, center + offset)
    }
}

/// Exhaustive lattice minimization with the default node budget.
pub fn grid_search<F>(objective: F, bounds: &GridBounds, resolution: f64) -> Result<(Point, f64)>
where
    F: Fn(&Point) -> f64 + Sync,
{
    grid_search_with_budget(objective, bounds, resolution, DEFAULT_NODE_BUDGET)
}

/// Evaluates `objective` at every node `lower + k * resolution` inside
/// `bounds` and returns the minimizing node. Ties go to the
/// lexicographically smallest node; the parallel scan returns exactly what
/// a serial scan would.
pub fn grid_search_with_budget<F>(
    objective: F,
    bounds: &GridBounds,
    resolution: f64,
    node_budget: u64,
) -> Result<(Point, f64)>
where
    F: Fn(&Point) -> f64 + Sync,
{
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidInput(format!("grid resolution must be > 0, got {resolution}")));
    }
    let dims = bounds.lower.dim().len();
    let counts: Vec<u64> = (0..dims)
        .map(|k| {
            let span = bounds.upper.coord(k) - bounds.lower.coord(k);
            (span / resolution + 1e-9).floor() as u64 + 1
        })
        .collect();
    let nodes: u128 = counts.iter().map(|&c| c as u128).product();
    if nodes > node_budget as u128 {
        return Err(Error::BudgetExceeded { nodes, budget: node_budget });
    }
    let ny = counts[1];
    let nz = if dims == 3 { counts[2] } else { 1 };
    let lower = bounds.lower;
    let node = |ix: u64, iy: u64, iz: u64| {
        let mut p = lower;
        p.x = lower.x + ix as f64 * resolution;
        p.y = lower.y + iy as f64 * resolution;
        if dims == 3 {
            p.z = lower.z + iz as f64 * resolution;
        }
        p
    };

    // (value, flat index); NaN objectives never win.
    let best = (0..counts[0])
        .into_par_iter()
        .map(|ix| {
            let mut best = (f64::INFINITY, u64::MAX);
            for iy in 0..ny {
                for iz in 0..nz {
                    let v = objective(&node(ix, iy, iz));
                    let flat = (ix * ny + iy) * nz + iz;
                    if v < best.0 || (best.1 == u64::MAX && !v.is_nan()) {
                        best = (v, flat);
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    if best.1 == u64::MAX {
        return Err(Error::InvalidInput("objective is NaN on the whole grid".into()));
    }
    let (ix, rest) = (best.1 / (ny * nz), best.1 % (ny * nz));
    Ok((node(ix, rest / nz, rest % nz), best.0))
}
