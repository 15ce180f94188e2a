//! Trilateration: position from absolute distances to known anchors.
//!
//! Two algebraic solvers subtract circle/sphere equations pairwise to get
//! linear constraints and recover the remaining coordinate from a quadratic,
//! returning every root as a candidate. [`trilaterate_lsq`] minimizes the
//! summed squared range residuals iteratively, and [`team_relative_position`]
//! builds the team reference point on top of it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, diameter, is_collinear, Dimension, Point};
use crate::sim::DistanceMatrix;
use crate::solver::{
    gauss_newton, guarded_offset, sort_candidates, Candidate, SolveFlag, SolveResult, SolverOptions,
};

/// Best residual norm above which a solve is flagged inconsistent (m).
pub const INCONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Relative slack on a negative sphere radicand before it is an error.
pub const RADICAND_SLACK: f64 = 1e-9;

const COLLINEAR_TOLERANCE: f64 = 1e-9;
const COPLANAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilaterationProblem {
    emitters: Vec<Point>,
    distances: Vec<f64>,
    dimension: Dimension,
}

impl TrilaterationProblem {
    pub fn new(emitters: Vec<Point>, distances: Vec<f64>) -> Result<Self> {
        if emitters.len() < 3 {
            return Err(Error::InvalidInput(format!("at least 3 emitters are required, got {}", emitters.len())));
        }
        if emitters.len() != distances.len() {
            return Err(Error::InvalidInput(format!(
                "{} emitters but {} distances",
                emitters.len(),
                distances.len()
            )));
        }
        let dimension = emitters[0].dim();
        for e in &emitters {
            if e.dim() != dimension {
                return Err(Error::Dimension { expected: dimension, found: e.dim() });
            }
            if !e.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite emitter {e}")));
            }
        }
        if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidInput(format!("distance {d} is not finite and >= 0")));
        }
        Ok(Self { emitters, distances, dimension })
    }

    pub fn emitters(&self) -> &[Point] {
        &self.emitters
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    fn check_point(&self, q: &Point) -> Result<()> {
        if q.dim() == self.dimension {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dimension, found: q.dim() })
        }
    }
}

/// `|q - E_i| - d_i` for every emitter.
pub fn trilateration_residuals(p: &TrilaterationProblem, q: &Point) -> Result<Vec<f64>> {
    p.check_point(q)?;
    Ok(residuals_unchecked(p, q))
}

fn residuals_unchecked(p: &TrilaterationProblem, q: &Point) -> Vec<f64> {
    p.emitters
        .iter()
        .zip(&p.distances)
        .map(|(e, d)| guarded_offset(q, e).1 - d)
        .collect()
}

/// Analytic Jacobian: row i is the unit vector from `E_i` towards `q`.
pub fn trilateration_jacobian(p: &TrilaterationProblem, q: &Point) -> Result<DMatrix<f64>> {
    p.check_point(q)?;
    Ok(jacobian_unchecked(p, q))
}

fn jacobian_unchecked(p: &TrilaterationProblem, q: &Point) -> DMatrix<f64> {
    let cols = q.dim().len();
    let mut jac = DMatrix::zeros(p.emitters.len(), cols);
    for (row, e) in p.emitters.iter().enumerate() {
        let (v, n) = guarded_offset(q, e);
        for k in 0..cols {
            jac[(row, k)] = v.coord(k) / n;
        }
    }
    jac
}

/// Summed squared range residuals.
pub fn trilateration_objective(p: &TrilaterationProblem, q: &Point) -> Result<f64> {
    Ok(trilateration_residuals(p, q)?.iter().map(|r| r * r).sum())
}

fn residual_norm(p: &TrilaterationProblem, q: &Point) -> f64 {
    residuals_unchecked(p, q).iter().map(|r| r * r).sum::<f64>().sqrt()
}

fn check_three(p: &TrilaterationProblem, dim: Dimension) -> Result<()> {
    if p.dimension != dim {
        return Err(Error::Dimension { expected: dim, found: p.dimension });
    }
    if p.emitters.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "algebraic trilateration takes exactly 3 emitters, got {}",
            p.emitters.len()
        )));
    }
    let e = &p.emitters;
    if is_collinear(&e[0], &e[1], &e[2], COLLINEAR_TOLERANCE) {
        return Err(Error::GeometryDegenerate("emitters are collinear"));
    }
    Ok(())
}

fn finish(p: &TrilaterationProblem, points: Vec<Point>, estimate: Point) -> SolveResult {
    let mut candidates: Vec<Candidate> =
        points.iter().map(|q| Candidate { point: *q, residual_norm: residual_norm(p, q) }).collect();
    sort_candidates(&mut candidates);
    let norm = residual_norm(p, &estimate);
    let mut result = SolveResult {
        estimate,
        candidates,
        residual_norm: norm,
        iterations: 0,
        converged: true,
        flags: Default::default(),
    };
    if norm > INCONSISTENCY_TOLERANCE {
        result.flags.insert(SolveFlag::Inconsistent);
    }
    result
}

/// Roots of `t^2 + 2 beta t + gamma = 0`, computed without cancellation.
/// A negative discriminant yields the vertex `-beta`.
fn quadratic_roots(beta: f64, gamma: f64) -> Vec<f64> {
    let disc = beta * beta - gamma;
    if disc <= 0.0 {
        return vec![-beta];
    }
    let root = disc.sqrt();
    let t1 = -beta - beta.signum() * root;
    if t1 == 0.0 {
        return vec![root, -root];
    }
    vec![t1, gamma / t1]
}

/// Three-circle trilateration.
///
/// Subtracting the second circle from the first leaves the line on which
/// both intersection points lie. Substituting that line into the third
/// circle leaves a quadratic whose roots are the candidates, checked against
/// all three circles: the estimate is the candidate with the lowest total
/// squared residual. When the circles share no common point the problem is
/// flagged [`SolveFlag::Inconsistent`].
pub fn trilaterate_2d(p: &TrilaterationProblem) -> Result<SolveResult> {
    check_three(p, Dimension::Two)?;
    let [e1, e2, e3] = [p.emitters[0], p.emitters[1], p.emitters[2]];
    let [d1, d2, d3] = [p.distances[0], p.distances[1], p.distances[2]];
    // Work relative to E1.
    let a = e2 - e1;
    let b = e3 - e1;
    let aa = a.dot(&a);
    let k = (d1 * d1 - d2 * d2 + aa) / 2.0;
    let foot = a * (k / aa);
    let normal = Point::xy(-a.y, a.x) * (1.0 / aa.sqrt());
    let w = foot - b;
    let beta = normal.dot(&w);
    let gamma = w.dot(&w) - d3 * d3;

    let points: Vec<Point> = quadratic_roots(beta, gamma)
        .into_iter()
        .map(|t| e1 + foot + normal * t)
        .collect();
    let estimate = *points
        .iter()
        .min_by(|x, y| residual_norm(p, x).total_cmp(&residual_norm(p, y)).then_with(|| x.lex_cmp(y)))
        .expect("at least one root");
    Ok(finish(p, points, estimate))
}

/// Three-sphere trilateration.
///
/// The in-plane coordinates come from pairwise differences of the sphere
/// equations; the offset from the emitter plane is `±sqrt(d1^2 - x^2 - y^2)`.
/// Both mirror images are returned with [`SolveFlag::MirrorAmbiguity`]; the
/// estimate is the one with the larger z. A radicand below
/// `-RADICAND_SLACK * d1^2` means the spheres do not meet.
pub fn trilaterate_3d(p: &TrilaterationProblem) -> Result<SolveResult> {
    check_three(p, Dimension::Three)?;
    let [e1, e2, e3] = [p.emitters[0], p.emitters[1], p.emitters[2]];
    let [d1, d2, d3] = [p.distances[0], p.distances[1], p.distances[2]];
    let a = e2 - e1;
    let b = e3 - e1;
    let base = a.norm();
    let ex = a * (1.0 / base);
    let i = ex.dot(&b);
    let b_perp = b - ex * i;
    let ey = b_perp * (1.0 / b_perp.norm());
    let ez = ex.cross(&ey);
    let j = ey.dot(&b);

    let x = (d1 * d1 - d2 * d2 + base * base) / (2.0 * base);
    let y = (d1 * d1 - d3 * d3 + i * i + j * j) / (2.0 * j) - (i / j) * x;
    let radicand = d1 * d1 - x * x - y * y;
    if radicand < -RADICAND_SLACK * d1 * d1 {
        return Err(Error::Inconsistent(format!(
            "spheres do not intersect (radicand {radicand:.6e} m^2)"
        )));
    }
    let in_plane = e1 + ex * x + ey * y;
    // Anything at rounding level is a tangency, not two mirror images.
    if radicand <= 16.0 * f64::EPSILON * d1 * d1 {
        return Ok(finish(p, vec![in_plane], in_plane));
    }
    let h = radicand.sqrt();
    let above = in_plane + ez * h;
    let below = in_plane - ez * h;
    let estimate = if above.z > below.z || (above.z == below.z && above.lex_cmp(&below).is_lt()) {
        above
    } else {
        below
    };
    let mut result = finish(p, vec![above, below], estimate);
    result.flags.insert(SolveFlag::MirrorAmbiguity);
    Ok(result)
}

/// Unit normal of the emitter plane when every emitter lies on one plane.
fn emitter_plane(emitters: &[Point]) -> Option<(Point, Point)> {
    let origin = emitters[0];
    let scale = diameter(emitters).max(f64::MIN_POSITIVE);
    let mut normal = None;
    'search: for (i, a) in emitters.iter().enumerate().skip(1) {
        for b in &emitters[i + 1..] {
            let n = (*a - origin).cross(&(*b - origin));
            if n.norm() > COLLINEAR_TOLERANCE * scale * scale {
                normal = Some(n * (1.0 / n.norm()));
                break 'search;
            }
        }
    }
    let normal = normal?;
    emitters
        .iter()
        .all(|e| (*e - origin).dot(&normal).abs() <= COPLANAR_TOLERANCE * scale)
        .then_some((origin, normal))
}

/// Gauss-Newton minimization of the summed squared range residuals from
/// `init`.
///
/// For 3D problems whose emitters are coplanar the reflection of the
/// estimate through the emitter plane fits equally well; it is added as a
/// second candidate and the result is flagged
/// [`SolveFlag::MirrorAmbiguity`].
pub fn trilaterate_lsq(p: &TrilaterationProblem, init: Point, opts: &SolverOptions) -> Result<SolveResult> {
    p.check_point(&init)?;
    let mut result = gauss_newton(|q| residuals_unchecked(p, q), |q| jacobian_unchecked(p, q), init, opts)?;
    if p.dimension == Dimension::Three {
        if let Some((origin, normal)) = emitter_plane(&p.emitters) {
            let offset = (result.estimate - origin).dot(&normal);
            if offset.abs() > crate::tdoa::DEDUP_RADIUS {
                let mirror = result.estimate - normal * (2.0 * offset);
                result.candidates.push(Candidate { point: mirror, residual_norm: residual_norm(p, &mirror) });
                sort_candidates(&mut result.candidates);
                result.flags.insert(SolveFlag::MirrorAmbiguity);
            }
        }
    }
    if result.residual_norm > INCONSISTENCY_TOLERANCE {
        result.flags.insert(SolveFlag::Inconsistent);
    }
    Ok(result)
}

/// Team reference point from every drone's ranges to the same emitters.
///
/// Each emitter's range is averaged over the drones, then one least-squares
/// trilateration against the emitter positions runs from the drone
/// centroid. With a single drone this is exactly [`trilaterate_lsq`] on its
/// row of the distance matrix.
pub fn team_relative_position(
    drones: &[Point],
    emitter_estimates: &[Point],
    dm: &DistanceMatrix,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if drones.is_empty() {
        return Err(Error::EmptyInput("no drones"));
    }
    if dm.receivers() != drones.len() || dm.emitters() != emitter_estimates.len() {
        return Err(Error::InvalidInput(format!(
            "distance matrix is {}x{} but there are {} drones and {} emitters",
            dm.receivers(),
            dm.emitters(),
            drones.len(),
            emitter_estimates.len()
        )));
    }
    let n = drones.len() as f64;
    let averaged: Vec<f64> = (0..dm.emitters())
        .map(|e| (0..dm.receivers()).map(|d| dm.get(d, e)).sum::<f64>() / n)
        .collect();
    let problem = TrilaterationProblem::new(emitter_estimates.to_vec(), averaged)?;
    trilaterate_lsq(&problem, centroid(drones)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pyramid_3d() -> TrilaterationProblem {
        TrilaterationProblem::new(
            vec![Point::xyz(0.0, 0.0, 0.0), Point::xyz(500.0, 0.0, 0.0), Point::xyz(0.0, 500.0, 0.0)],
            vec![300.0, 400.0, 500.0],
        )
        .unwrap()
    }

    fn circles_2d() -> TrilaterationProblem {
        TrilaterationProblem::new(
            vec![Point::xy(0.0, 0.0), Point::xy(10.0, 0.0), Point::xy(5.0, 10.0)],
            vec![5.0, 5.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let p = TrilaterationProblem::new(
            vec![Point::xy(0.0, 0.0), Point::xy(6.0, 0.0), Point::xy(0.0, 8.0)],
            vec![5.0, 5.0, 5.0],
        )
        .unwrap();
        for r in trilateration_residuals(&p, &Point::xy(3.0, 4.0)).unwrap() {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
        }

        let r = trilateration_residuals(&circles_2d(), &Point::xy(5.0, 5.0)).unwrap();
        let expected = 50f64.sqrt() - 5.0;
        assert_abs_diff_eq!(r[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0], 2.0711, epsilon = 1e-4);

        let q = Point::xyz(180.0, 90.0, 49500f64.sqrt());
        for r in trilateration_residuals(&pyramid_3d(), &q).unwrap() {
            assert!(r.abs() < 1e-9);
        }
        assert!(trilateration_residuals(&pyramid_3d(), &Point::xy(0.0, 0.0)).is_err());
    }

    #[test]
    fn recovers_consistent_2d_point() {
        let p = TrilaterationProblem::new(
            vec![Point::xy(0.0, 0.0), Point::xy(10.0, 0.0), Point::xy(0.0, 10.0)],
            vec![5.0, 65f64.sqrt(), 45f64.sqrt()],
        )
        .unwrap();
        let out = trilaterate_2d(&p).unwrap();
        assert!((out.estimate - Point::xy(3.0, 4.0)).norm() < 1e-9);
        assert!(!out.has_flag(SolveFlag::Inconsistent));
    }

    #[test]
    fn inconsistent_circles_prefer_lower_branch() {
        let out = trilaterate_2d(&circles_2d()).unwrap();
        assert_abs_diff_eq!(out.estimate.x, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.estimate.y, 5.0, epsilon = 1e-9);
        assert!(out.has_flag(SolveFlag::Inconsistent));
        assert_abs_diff_eq!(out.residual_norm, 2.0 * (50f64.sqrt() - 5.0) / 2f64.sqrt(), epsilon = 1e-12);
        let ys: Vec<f64> = out.candidates.iter().map(|c| c.point.y).collect();
        assert_eq!(out.candidates.len(), 2);
        assert!(ys.iter().any(|y| (y - 15.0).abs() < 1e-9));
        assert!(out.candidates[0].residual_norm < out.candidates[1].residual_norm);
    }

    #[test]
    fn collinear_emitters_are_rejected() {
        let p = TrilaterationProblem::new(
            vec![Point::xy(0.0, 0.0), Point::xy(5.0, 0.0), Point::xy(10.0, 0.0)],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        assert!(matches!(trilaterate_2d(&p), Err(Error::GeometryDegenerate(_))));
    }

    #[test]
    fn sphere_intersection_reproduces_experiment() {
        let out = trilaterate_3d(&pyramid_3d()).unwrap();
        let z = 49500f64.sqrt();
        assert_abs_diff_eq!(out.estimate.x, 180.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.estimate.y, 90.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.estimate.z, z, epsilon = 1e-6);
        assert_abs_diff_eq!(out.estimate.z, 222.4860, epsilon = 1e-4);
        assert!(out.has_flag(SolveFlag::MirrorAmbiguity));
        assert!(out.candidates.iter().any(|c| (c.point.z + z).abs() < 1e-6));
    }

    #[test]
    fn sphere_intersection_recovers_forward_point() {
        let p = TrilaterationProblem::new(
            pyramid_3d().emitters().to_vec(),
            vec![52500f64.sqrt(), 450.0, 102500f64.sqrt()],
        )
        .unwrap();
        let out = trilaterate_3d(&p).unwrap();
        assert!((out.estimate - Point::xyz(100.0, 200.0, 50.0)).norm() < 1e-9);
        assert!(out.candidates.iter().any(|c| (c.point - Point::xyz(100.0, 200.0, -50.0)).norm() < 1e-9));
    }

    #[test]
    fn point_on_emitter_plane_has_no_mirror() {
        let q = Point::xyz(250.0, 250.0, 0.0);
        let e = pyramid_3d().emitters().to_vec();
        let d = e.iter().map(|e| (*e - q).norm()).collect();
        let out = trilaterate_3d(&TrilaterationProblem::new(e, d).unwrap()).unwrap();
        assert_eq!(out.candidates.len(), 1);
        assert!(!out.has_flag(SolveFlag::MirrorAmbiguity));
        assert!((out.estimate - q).norm() < 1e-9);
        assert_eq!(out.estimate.z, 0.0);
    }

    #[test]
    fn disjoint_spheres_are_inconsistent() {
        let p = TrilaterationProblem::new(pyramid_3d().emitters().to_vec(), vec![100.0, 100.0, 100.0]).unwrap();
        assert!(matches!(trilaterate_3d(&p), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn least_squares_from_centroid() {
        let p = pyramid_3d();
        let init = centroid(p.emitters()).unwrap() + Point::xyz(1.0, 1.0, 1.0);
        let out = trilaterate_lsq(&p, init, &SolverOptions::default()).unwrap();
        assert!((out.estimate - Point::xyz(180.0, 90.0, 49500f64.sqrt())).norm() < 1e-6);
        assert!(out.has_flag(SolveFlag::MirrorAmbiguity));
        assert!(!out.has_flag(SolveFlag::Inconsistent));
    }

    #[test]
    fn least_squares_fixed_point() {
        let truth = Point::xyz(180.0, 90.0, 49500f64.sqrt());
        let out = trilaterate_lsq(&pyramid_3d(), truth, &SolverOptions::default()).unwrap();
        assert!(out.iterations <= 1);
        assert!(out.residual_norm < 1e-9);
        assert!((out.estimate - truth).norm() < 1e-9);
    }

    #[test]
    fn team_of_coincident_drones() {
        let q = Point::xyz(120.0, 80.0, 60.0);
        let e = pyramid_3d().emitters().to_vec();
        let drones = vec![q; 3];
        let dm = DistanceMatrix::between(&drones, &e).unwrap();
        let out = team_relative_position(&drones, &e, &dm, &SolverOptions::default()).unwrap();
        assert!((out.estimate - q).norm() < 1e-9);
    }

    #[test]
    fn single_drone_team_matches_lsq() {
        let q = Point::xyz(180.0, 90.0, 49500f64.sqrt());
        let e = pyramid_3d().emitters().to_vec();
        let dm = DistanceMatrix::new(vec![vec![300.0, 400.0, 500.0]]).unwrap();
        let team = team_relative_position(&[q + Point::xyz(3.0, -2.0, 5.0)], &e, &dm, &SolverOptions::default()).unwrap();
        let direct = trilaterate_lsq(&pyramid_3d(), q + Point::xyz(3.0, -2.0, 5.0), &SolverOptions::default()).unwrap();
        assert_eq!(team, direct);
    }

    #[test]
    fn team_rejects_mismatched_matrix() {
        let e = pyramid_3d().emitters().to_vec();
        let dm = DistanceMatrix::new(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let drones = vec![Point::xyz(0.0, 0.0, 10.0); 2];
        assert!(team_relative_position(&drones, &e, &dm, &SolverOptions::default()).is_err());
    }
}
