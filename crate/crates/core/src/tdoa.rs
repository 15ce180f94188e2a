//! Time-difference-of-arrival emitter localization.
//!
//! Arrival times at a reference receiver and its partners become range
//! differences, each of which pins the emitter to one branch of a hyperbola
//! (2D) or hyperboloid (3D). Three receivers give two such constraints; the
//! emitter is recovered by multi-start damped Gauss-Newton on the squared
//! hyperbolic residuals.
//!
//! # Sign convention
//!
//! `delta_t = t_ref - t_other` and `delta_d = c * delta_t`, so the residual
//! for a pair is `|p - r_ref| - |p - r_other| - delta_d`. Flipping the sign of
//! the deltas silently mirrors the solution, so every function in this
//! module uses this convention and no other.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    average_direction, centroid, diameter, direction_unit, is_collinear, Dimension, DirectionVector, Point,
};
use crate::sim::ArrivalSet;
use crate::solver::{
    guarded_offset, minimize, sort_candidates, Candidate, SolveFlag, SolveResult, SolverOptions,
};

/// Converged starts closer than this are the same minimizer (m).
pub const DEDUP_RADIUS: f64 = 1e-6;

/// Residual norms closer than this count as tied when picking the estimate (m).
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Best residual norm above which a solve is flagged inconsistent (m).
pub const INCONSISTENCY_TOLERANCE: f64 = 1e-6;

const COLLINEAR_TOLERANCE: f64 = 1e-9;

/// Inexact converged points farther than this many receiver diameters from
/// the centroid are asymptotic limits along a hyperbola branch, not
/// minimizers.
pub const FAR_FIELD_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeDifference {
    pub other_index: usize,
    /// `t_ref - t_other`, s.
    pub delta_t: f64,
    /// `c * delta_t`, m.
    pub delta_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeDifferenceSet {
    pub reference_index: usize,
    pub deltas: Vec<RangeDifference>,
}

impl RangeDifferenceSet {
    /// Builds a set directly from range differences in meters.
    pub fn from_range_differences(reference_index: usize, pairs: &[(usize, f64)], c: f64) -> Self {
        Self {
            reference_index,
            deltas: pairs
                .iter()
                .map(|&(other_index, delta_d)| RangeDifference { other_index, delta_t: delta_d / c, delta_d })
                .collect(),
        }
    }

    fn check_indices(&self, receivers: usize) -> Result<()> {
        if self.reference_index >= receivers {
            return Err(Error::InvalidInput(format!(
                "reference receiver {} out of range for {receivers} receivers",
                self.reference_index
            )));
        }
        for d in &self.deltas {
            if d.other_index >= receivers || d.other_index == self.reference_index {
                return Err(Error::InvalidInput(format!("invalid partner receiver {}", d.other_index)));
            }
        }
        Ok(())
    }
}

/// Range differences for one emitter against `reference_index`.
pub fn arrival_deltas(a: &ArrivalSet, emitter_index: usize, reference_index: usize, c: f64) -> Result<RangeDifferenceSet> {
    let n = a.receivers();
    if n < 2 {
        return Err(Error::InsufficientReceivers(n));
    }
    if emitter_index >= a.emitters() {
        return Err(Error::InvalidInput(format!("emitter index {emitter_index} out of range")));
    }
    if reference_index >= n {
        return Err(Error::InvalidInput(format!("reference index {reference_index} out of range")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput(format!("c must be > 0, got {c}")));
    }
    let t_ref = a.time(reference_index, emitter_index);
    let deltas = (0..n)
        .filter(|&i| i != reference_index)
        .map(|i| {
            let delta_t = t_ref - a.time(i, emitter_index);
            RangeDifference { other_index: i, delta_t, delta_d: c * delta_t }
        })
        .collect();
    Ok(RangeDifferenceSet { reference_index, deltas })
}

fn check_dims(receivers: &[Point], p: &Point) -> Result<()> {
    for r in receivers {
        if r.dim() != p.dim() {
            return Err(Error::Dimension { expected: r.dim(), found: p.dim() });
        }
    }
    Ok(())
}

/// One residual per pair: `|p - r_ref| - |p - r_other| - delta_d`.
pub fn hyperbolic_residuals(receivers: &[Point], rd: &RangeDifferenceSet, p: &Point) -> Result<Vec<f64>> {
    rd.check_indices(receivers.len())?;
    check_dims(receivers, p)?;
    Ok(residuals_unchecked(receivers, rd, p))
}

fn residuals_unchecked(receivers: &[Point], rd: &RangeDifferenceSet, p: &Point) -> Vec<f64> {
    let d_ref = guarded_offset(p, &receivers[rd.reference_index]).1;
    rd.deltas
        .iter()
        .map(|d| d_ref - guarded_offset(p, &receivers[d.other_index]).1 - d.delta_d)
        .collect()
}

/// Analytic Jacobian of [`hyperbolic_residuals`]: row k is the difference of
/// the unit vectors from the reference and from partner k towards `p`.
pub fn hyperbolic_jacobian(receivers: &[Point], rd: &RangeDifferenceSet, p: &Point) -> Result<DMatrix<f64>> {
    rd.check_indices(receivers.len())?;
    check_dims(receivers, p)?;
    Ok(jacobian_unchecked(receivers, rd, p, p.dim().len()))
}

fn jacobian_unchecked(receivers: &[Point], rd: &RangeDifferenceSet, p: &Point, cols: usize) -> DMatrix<f64> {
    let (v_ref, n_ref) = guarded_offset(p, &receivers[rd.reference_index]);
    let mut jac = DMatrix::zeros(rd.deltas.len(), cols);
    for (row, d) in rd.deltas.iter().enumerate() {
        let (v, n) = guarded_offset(p, &receivers[d.other_index]);
        for k in 0..cols {
            jac[(row, k)] = v_ref.coord(k) / n_ref - v.coord(k) / n;
        }
    }
    jac
}

/// Sum of squared hyperbolic residuals.
pub fn hyperbolic_objective(receivers: &[Point], rd: &RangeDifferenceSet, p: &Point) -> Result<f64> {
    Ok(hyperbolic_residuals(receivers, rd, p)?.iter().map(|r| r * r).sum())
}

fn check_triplet(receivers: &[Point], rd: &RangeDifferenceSet, dim: Dimension) -> Result<()> {
    if receivers.len() != 3 {
        return Err(Error::InvalidInput(format!("exactly 3 receivers are required, got {}", receivers.len())));
    }
    for r in receivers {
        if r.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: r.dim() });
        }
    }
    rd.check_indices(3)?;
    if rd.deltas.len() != 2 {
        return Err(Error::InvalidInput(format!("expected 2 range differences, got {}", rd.deltas.len())));
    }
    if is_collinear(&receivers[0], &receivers[1], &receivers[2], COLLINEAR_TOLERANCE) {
        return Err(Error::GeometryDegenerate("receivers are collinear"));
    }
    Ok(())
}

/// Offsets for the perturbed starts, unit length.
fn start_directions(count: usize, dims: usize) -> Vec<Point> {
    if dims == 2 {
        return (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                Point::xy(a.cos(), a.sin())
            })
            .collect();
    }
    if count == 8 {
        let s = 1.0 / 3f64.sqrt();
        return [-1.0, 1.0]
            .iter()
            .flat_map(|&x| [-1.0, 1.0].iter().flat_map(move |&y| [-1.0, 1.0].map(move |z| Point::xyz(x * s, y * s, z * s))))
            .collect();
    }
    // Golden-spiral points on the unit sphere.
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            Point::xyz(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

/// Exact starting points for the square two-pair system.
///
/// With `R = |p - r_ref|` treated as a parameter, each pair equation
/// `|p - r_k| = R - delta_d_k` minus the reference sphere is linear in the
/// two free coordinates, so `p = alpha + beta * R`. Substituting back into
/// `|p - r_ref| = R` leaves a quadratic in `R`; every root with non-negative
/// ranges becomes a start. `plane_z` fixes the third coordinate of 3D
/// receivers; `None` means 2D receivers. Returns free-coordinate points.
fn algebraic_seeds(receivers: &[Point], rd: &RangeDifferenceSet, plane_z: Option<f64>) -> Vec<Point> {
    let r_ref = receivers[rd.reference_index];
    let uz = plane_z.map_or(0.0, |z0| z0 - r_ref.z);
    let rows: Vec<(Point, f64, f64)> = rd
        .deltas
        .iter()
        .map(|d| {
            let s = (receivers[d.other_index] - r_ref).to_3d();
            let a = (s.dot(&s) - d.delta_d * d.delta_d) / 2.0 - s.z * uz;
            (s, a, d.delta_d)
        })
        .collect();
    let (s1, a1, b1) = rows[0];
    let (s2, a2, b2) = rows[1];
    let det = s1.x * s2.y - s1.y * s2.x;
    let scale = s1.norm() * s2.norm();
    if scale == 0.0 || det.abs() <= 1e-12 * scale {
        return Vec::new();
    }
    let solve = |c1: f64, c2: f64| ((c1 * s2.y - s1.y * c2) / det, (s1.x * c2 - c1 * s2.x) / det);
    let alpha = solve(a1, a2);
    let beta = solve(b1, b2);

    let qa = beta.0 * beta.0 + beta.1 * beta.1 - 1.0;
    let qb = 2.0 * (alpha.0 * beta.0 + alpha.1 * beta.1);
    let qc = alpha.0 * alpha.0 + alpha.1 * alpha.1 + uz * uz;
    let mut ranges = Vec::new();
    if qa.abs() <= 1e-12 {
        if qb != 0.0 {
            ranges.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let t = -0.5 * (qb + qb.signum() * root);
            if t != 0.0 {
                ranges.push(t / qa);
                ranges.push(qc / t);
            } else {
                ranges.push(root / (2.0 * qa));
                ranges.push(-root / (2.0 * qa));
            }
        } else {
            ranges.push(-qb / (2.0 * qa));
        }
    }

    let slack = 1e-9 * (1.0 + rd.deltas.iter().map(|d| d.delta_d.abs()).fold(0.0, f64::max));
    ranges
        .into_iter()
        .filter(|r| r.is_finite() && *r >= -slack && rd.deltas.iter().all(|d| *r - d.delta_d >= -slack))
        .map(|r| {
            let (ux, uy) = (alpha.0 + beta.0 * r, alpha.1 + beta.1 * r);
            Point::xy(r_ref.x + ux, r_ref.y + uy)
        })
        .filter(Point::is_finite)
        .collect()
}

/// Runs one solve per start, keeps every converged minimizer, and picks the
/// estimate. `lift` maps a free-variable point to the full receiver-space
/// point.
fn multistart<L>(
    receivers: &[Point],
    rd: &RangeDifferenceSet,
    starts: &[Point],
    lift: L,
    tie_anchor: Point,
    opts: &SolverOptions,
) -> Result<SolveResult>
where
    L: Fn(&Point) -> Point,
{
    let cols = starts[0].dim().len();
    let far_limit = FAR_FIELD_FACTOR * diameter(receivers);
    let mut converged: Vec<(Point, f64, usize)> = Vec::new();
    let mut best_any: Option<(Point, f64, usize)> = None;
    for start in starts {
        let trace = minimize(
            |q| residuals_unchecked(receivers, rd, &lift(q)),
            |q| jacobian_unchecked(receivers, rd, &lift(q), cols),
            *start,
            opts,
        )?;
        let norm = trace.cost.sqrt();
        if best_any.as_ref().is_none_or(|b| norm < b.1) {
            best_any = Some((lift(&trace.point), norm, trace.iterations));
        }
        let lifted = lift(&trace.point);
        let exact = norm <= INCONSISTENCY_TOLERANCE;
        if trace.converged && lifted.is_finite() && (exact || (lifted - tie_anchor).norm() <= far_limit) {
            converged.push((lifted, norm, trace.iterations));
        }
    }

    if converged.is_empty() {
        let (point, norm, iterations) = best_any.expect("at least one start");
        return Err(Error::NoConvergence { best: Box::new(SolveResult::single(point, norm, iterations, false)) });
    }

    converged.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.lex_cmp(&b.0)));
    let mut kept: Vec<(Point, f64, usize)> = Vec::new();
    for c in converged {
        if kept.iter().all(|k| (k.0 - c.0).norm() > DEDUP_RADIUS) {
            kept.push(c);
        }
    }

    let best_norm = kept[0].1;
    let chosen = kept
        .iter()
        .filter(|k| k.1 - best_norm <= TIE_TOLERANCE)
        .min_by(|a, b| {
            (a.0 - tie_anchor)
                .norm()
                .total_cmp(&(b.0 - tie_anchor).norm())
                .then_with(|| a.0.lex_cmp(&b.0))
        })
        .copied()
        .expect("kept is non-empty");

    let mut candidates: Vec<Candidate> =
        kept.iter().map(|k| Candidate { point: k.0, residual_norm: k.1 }).collect();
    sort_candidates(&mut candidates);
    let mut result = SolveResult {
        estimate: chosen.0,
        candidates,
        residual_norm: chosen.1,
        iterations: chosen.2,
        converged: true,
        flags: Default::default(),
    };
    if chosen.1 > INCONSISTENCY_TOLERANCE {
        result.flags.insert(SolveFlag::Inconsistent);
    }
    Ok(result)
}

fn starts_around(center: Point, radius: f64, opts: &SolverOptions) -> Vec<Point> {
    let dims = center.dim().len();
    let mut starts = vec![center];
    let extra = opts.multistart_count.saturating_sub(1);
    if extra > 0 {
        starts.extend(start_directions(extra, dims).into_iter().map(|d| {
            let d = if dims == 2 { d.to_2d() } else { d };
            center + d * radius
        }));
    }
    starts
}

/// Emitter position from three 2D receivers and two range differences.
///
/// Starts are the receiver centroid, `multistart_count - 1` points on a
/// circle of one receiver-diameter radius around it, and the exact roots of
/// the square system (see `algebraic_seeds`). All distinct converged
/// minimizers are returned as candidates: two hyperbola branches can cross
/// twice, in which case both crossings fit exactly and the one nearer the
/// receiver centroid becomes the estimate.
pub fn locate_emitter_2d(receivers: &[Point], rd: &RangeDifferenceSet, opts: &SolverOptions) -> Result<SolveResult> {
    check_triplet(receivers, rd, Dimension::Two)?;
    let center = centroid(receivers)?;
    let mut starts = starts_around(center, diameter(receivers), opts);
    starts.extend(algebraic_seeds(receivers, rd, None));
    multistart(receivers, rd, &starts, |q| *q, center, opts)
}

/// Emitter position from three 3D receivers.
///
/// Two range differences cannot fix three coordinates. With
/// `emitter_plane_z = Some(z0)` the emitter is assumed to lie on the
/// horizontal plane `z = z0` (ground emitters use `Some(0.0)`) and the square
/// two-by-two system is solved. With `None` all three coordinates are free,
/// the result is whichever minimizer the starts reach, and it is flagged
/// [`SolveFlag::UnderDetermined`].
pub fn locate_emitter_3d(
    receivers: &[Point],
    rd: &RangeDifferenceSet,
    emitter_plane_z: Option<f64>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_triplet(receivers, rd, Dimension::Three)?;
    let center = centroid(receivers)?;
    let radius = diameter(receivers);
    match emitter_plane_z {
        Some(z0) => {
            if !z0.is_finite() {
                return Err(Error::InvalidInput("emitter plane height must be finite".into()));
            }
            let mut starts = starts_around(center.to_2d(), radius, opts);
            starts.extend(algebraic_seeds(receivers, rd, Some(z0)));
            let lift = move |q: &Point| Point::xyz(q.x, q.y, z0);
            let anchor = Point::xyz(center.x, center.y, z0);
            multistart(receivers, rd, &starts, lift, anchor, opts)
        }
        None => {
            let starts = starts_around(center, radius, opts);
            let mut result = multistart(receivers, rd, &starts, |q| *q, center, opts)?;
            result.flags.insert(SolveFlag::UnderDetermined);
            Ok(result)
        }
    }
}

/// Mean of the unit vectors from each receiver towards the emitter.
pub fn combined_direction(receivers: &[Point], emitter: &Point) -> Result<DirectionVector> {
    let dirs = receivers
        .iter()
        .map(|r| direction_unit(r, emitter))
        .collect::<Result<Vec<_>>>()?;
    average_direction(&dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_arrivals, ClockModel, Scenario};
    use crate::solver::finite_difference_jacobian;
    use approx::assert_abs_diff_eq;

    fn triangle() -> Vec<Point> {
        vec![Point::xy(0.0, 0.0), Point::xy(100.0, 0.0), Point::xy(0.0, 100.0)]
    }

    fn deltas_for(receivers: &[Point], emitter: Point) -> RangeDifferenceSet {
        let s = Scenario::new(vec![emitter], receivers.to_vec());
        let a = simulate_arrivals(&s).unwrap();
        arrival_deltas(&a, 0, 0, s.c).unwrap()
    }

    #[test]
    fn equidistant_receivers_give_zero_delta() {
        let rx = vec![Point::xy(-10.0, 0.0), Point::xy(10.0, 0.0)];
        let rd = deltas_for(&rx, Point::xy(0.0, 37.0));
        assert_eq!(rd.deltas[0].delta_t, 0.0);
        assert_eq!(rd.deltas[0].delta_d, 0.0);
    }

    #[test]
    fn forward_simulated_delta() {
        let rd = deltas_for(&triangle()[..2], Point::xy(40.0, 30.0));
        assert_abs_diff_eq!(rd.deltas[0].delta_d, 50.0 - 4500f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(rd.deltas[0].delta_d, -17.0820, epsilon = 1e-4);
    }

    #[test]
    fn delta_sign_convention() {
        let a = ArrivalSet { times: vec![vec![2e-7], vec![1e-7]], clock_model: ClockModel::Shared };
        let rd = arrival_deltas(&a, 0, 0, 3e8).unwrap();
        assert_eq!(rd.deltas[0].other_index, 1);
        assert_abs_diff_eq!(rd.deltas[0].delta_t, 1e-7, epsilon = 1e-22);
        assert_abs_diff_eq!(rd.deltas[0].delta_d, 30.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_receivers() {
        let a = ArrivalSet { times: vec![vec![0.0]], clock_model: ClockModel::Shared };
        assert!(matches!(arrival_deltas(&a, 0, 0, 3e8), Err(Error::InsufficientReceivers(1))));
    }

    #[test]
    fn residual_examples() {
        let rx = triangle();
        let truth = Point::xy(40.0, 30.0);
        let rd = deltas_for(&rx, truth);
        for r in hyperbolic_residuals(&rx, &rd, &truth).unwrap() {
            assert!(r.abs() < 1e-9);
        }

        let rx2 = vec![Point::xy(-5.0, 0.0), Point::xy(5.0, 0.0)];
        let rd0 = RangeDifferenceSet::from_range_differences(0, &[(1, 0.0)], 3e8);
        assert_eq!(hyperbolic_residuals(&rx2, &rd0, &Point::xy(0.0, 12.0)).unwrap(), vec![0.0]);

        let rd = RangeDifferenceSet::from_range_differences(0, &[(1, -17.0820)], 3e8);
        // p sits on R1, so the anchor guard shifts it by 1e-9 m.
        let r = hyperbolic_residuals(&triangle()[..2], &rd, &Point::xy(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r[0], -82.9180, epsilon = 1e-8);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let rx = triangle();
        let rd = deltas_for(&rx, Point::xy(40.0, 30.0));
        let q = Point::xy(63.0, -21.0);
        let analytic = hyperbolic_jacobian(&rx, &rd, &q).unwrap();
        let numeric = finite_difference_jacobian(|p| hyperbolic_residuals(&rx, &rd, p).unwrap(), &q, 1e-5);
        assert!((analytic - numeric).abs().max() < 1e-8);
    }

    #[test]
    fn recovers_emitter_inside_triangle() {
        let rx = triangle();
        let rd = deltas_for(&rx, Point::xy(40.0, 30.0));
        let out = locate_emitter_2d(&rx, &rd, &SolverOptions::default()).unwrap();
        assert!((out.estimate - Point::xy(40.0, 30.0)).norm() < 1e-6, "{}", out.estimate);
        assert!(!out.has_flag(SolveFlag::Inconsistent));
    }

    #[test]
    fn zero_deltas_give_circumcenter() {
        let rx = vec![Point::xy(0.0, 0.0), Point::xy(60.0, 0.0), Point::xy(10.0, 50.0)];
        let rd = RangeDifferenceSet::from_range_differences(0, &[(1, 0.0), (2, 0.0)], 3e8);
        let out = locate_emitter_2d(&rx, &rd, &SolverOptions::default()).unwrap();
        let d: Vec<f64> = rx.iter().map(|r| (*r - out.estimate).norm()).collect();
        assert_abs_diff_eq!(d[0], d[1], epsilon = 1e-8);
        assert_abs_diff_eq!(d[0], d[2], epsilon = 1e-8);
    }

    #[test]
    fn collinear_receivers_are_rejected() {
        let rx = vec![Point::xy(0.0, 0.0), Point::xy(50.0, 0.0), Point::xy(100.0, 0.0)];
        let rd = RangeDifferenceSet::from_range_differences(0, &[(1, 1.0), (2, 2.0)], 3e8);
        assert!(matches!(locate_emitter_2d(&rx, &rd, &SolverOptions::default()), Err(Error::GeometryDegenerate(_))));
    }

    fn drones() -> Vec<Point> {
        vec![Point::xyz(0.0, 0.0, 100.0), Point::xyz(400.0, 0.0, 120.0), Point::xyz(0.0, 400.0, 140.0)]
    }

    #[test]
    fn ground_emitter_from_drones() {
        let truth = Point::xyz(200.0, 150.0, 0.0);
        let rd = deltas_for(&drones(), truth);
        let out = locate_emitter_3d(&drones(), &rd, Some(0.0), &SolverOptions::default()).unwrap();
        assert!((out.estimate.x - 200.0).abs() < 1e-4 && (out.estimate.y - 150.0).abs() < 1e-4, "{}", out.estimate);
        assert_eq!(out.estimate.z, 0.0);
        assert!(!out.has_flag(SolveFlag::UnderDetermined));
    }

    #[test]
    fn equidistant_emitter_has_zero_objective() {
        let rx = vec![Point::xyz(100.0, 0.0, 50.0), Point::xyz(-100.0, 0.0, 50.0), Point::xyz(0.0, 100.0, 50.0)];
        let truth = Point::xyz(0.0, 0.0, 0.0);
        let rd = deltas_for(&rx, truth);
        assert!(rd.deltas.iter().all(|d| d.delta_d.abs() < 1e-12));
        assert!(hyperbolic_objective(&rx, &rd, &truth).unwrap() < 1e-20);
    }

    #[test]
    fn free_height_is_flagged_under_determined() {
        let truth = Point::xyz(200.0, 150.0, 0.0);
        let rd = deltas_for(&drones(), truth);
        let out = locate_emitter_3d(&drones(), &rd, None, &SolverOptions::default()).unwrap();
        assert!(out.has_flag(SolveFlag::UnderDetermined));
        assert!(out.residual_norm < 1e-6);
    }

    #[test]
    fn direction_examples() {
        let far = combined_direction(&[Point::xy(-1.0, 0.0), Point::xy(1.0, 0.0)], &Point::xy(0.0, 1e9)).unwrap();
        assert_abs_diff_eq!(far.components()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(far.components()[1], 1.0, epsilon = 1e-12);

        let single = combined_direction(&[Point::xy(0.0, 0.0)], &Point::xy(3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(single.components()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(single.components()[1], 0.8, epsilon = 1e-15);

        let e = Point::xy(40.0, 30.0);
        let got = combined_direction(&triangle(), &e).unwrap();
        // Unit vectors by hand: (40,30)/50, (-60,30)/sqrt(4500), (40,-70)/sqrt(6500).
        let (a, b) = (4500f64.sqrt(), 6500f64.sqrt());
        let expected = [(0.8 - 60.0 / a + 40.0 / b) / 3.0, (0.6 + 30.0 / a - 70.0 / b) / 3.0];
        assert_abs_diff_eq!(got.components()[0], expected[0], epsilon = 1e-15);
        assert_abs_diff_eq!(got.components()[1], expected[1], epsilon = 1e-15);
        assert!(!got.is_unit());

        assert!(matches!(combined_direction(&triangle(), &Point::xy(0.0, 0.0)), Err(Error::DegenerateDirection)));
    }
}
