//! Cartesian points, distances and direction vectors.
//!
//! Everything lives in a local Cartesian frame measured in meters. A 2D point
//! is stored as a 3D point with `z = 0` plus a [`Dimension`] tag, so distance
//! and residual arithmetic share a single code path while mixed-dimension
//! inputs are still rejected.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "2d")]
    Two,
    #[serde(rename = "3d")]
    Three,
}

impl Dimension {
    pub fn len(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_len(n: usize) -> Option<Self> {
        match n {
            2 => Some(Dimension::Two),
            3 => Some(Dimension::Three),
            _ => None,
        }
    }
}

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    dim: Dimension,
}

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0, dim: Dimension::Two }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, dim: Dimension::Three }
    }

    /// Builds a point from 2 or 3 coordinates, rejecting non-finite values.
    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {c}")));
        }
        match coords {
            [x, y] => Ok(Self::xy(*x, *y)),
            [x, y, z] => Ok(Self::xyz(*x, *y, *z)),
            _ => Err(Error::InvalidInput(format!(
                "a point needs 2 or 3 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn origin(dim: Dimension) -> Self {
        Self { x: 0.0, y: 0.0, z: 0.0, dim }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Coordinate `k` (0 = x, 1 = y, 2 = z).
    pub fn coord(&self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("coordinate index {k} out of range"),
        }
    }

    pub fn set_coord(&mut self, k: usize, v: f64) {
        match k {
            0 => self.x = v,
            1 => self.y = v,
            2 => self.z = v,
            _ => panic!("coordinate index {k} out of range"),
        }
    }

    /// The active coordinates: two entries for 2D points, three for 3D.
    pub fn coords(&self) -> Vec<f64> {
        match self.dim {
            Dimension::Two => vec![self.x, self.y],
            Dimension::Three => vec![self.x, self.y, self.z],
        }
    }

    /// Returns the same coordinates tagged as 3D.
    pub fn to_3d(self) -> Self {
        Self { dim: Dimension::Three, ..self }
    }

    /// Drops z and tags the point as 2D.
    pub fn to_2d(self) -> Self {
        Self::xy(self.x, self.y)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Point) -> Point {
        Point::xyz(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Lexicographic comparison on (x, y, z), used for deterministic ordering.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.z.total_cmp(&other.z))
    }

    fn check_same_dim(&self, other: &Point) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim, found: other.dim })
        }
    }
}

impl Add for Point {
    type Output = Point;

    fn add(self, rhs: Point) -> Point {
        Point { x: self.x + rhs.x, y: self.y + rhs.y, z: self.z + rhs.z, dim: self.dim }
    }
}

impl Sub for Point {
    type Output = Point;

    fn sub(self, rhs: Point) -> Point {
        Point { x: self.x - rhs.x, y: self.y - rhs.y, z: self.z - rhs.z, dim: self.dim }
    }
}

impl Mul<f64> for Point {
    type Output = Point;

    fn mul(self, s: f64) -> Point {
        Point { x: self.x * s, y: self.y * s, z: self.z * s, dim: self.dim }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            Dimension::Two => write!(f, "({}, {})", self.x, self.y),
            Dimension::Three => write!(f, "({}, {}, {})", self.x, self.y, self.z),
        }
    }
}

// Points travel as plain JSON arrays: [x, y] or [x, y, z].
impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coords = self.coords();
        let mut seq = serializer.serialize_seq(Some(coords.len()))?;
        for c in &coords {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        Point::from_slice(&coords).map_err(de::Error::custom)
    }
}

/// Euclidean distance between two points of the same dimension.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    p.check_same_dim(q)?;
    Ok((*p - *q).norm())
}

/// Centroid of a non-empty set of points.
pub fn centroid(points: &[Point]) -> Result<Point> {
    let first = points.first().ok_or(Error::EmptyInput("centroid of no points"))?;
    let mut sum = Point::origin(first.dim());
    for p in points {
        first.check_same_dim(p)?;
        sum = sum + *p;
    }
    Ok(sum * (1.0 / points.len() as f64))
}

/// Largest pairwise distance in a point set (0 for fewer than two points).
pub fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0_f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max((*p - *q).norm());
        }
    }
    best
}

/// True when three points are collinear relative to their spread.
///
/// The test compares the triangle's doubled area against `rel_tol` times the
/// squared diameter, so it is invariant to translation and scale.
pub fn is_collinear(a: &Point, b: &Point, c: &Point, rel_tol: f64) -> bool {
    let area2 = (*b - *a).to_3d().cross(&(*c - *a).to_3d()).norm();
    let diam = diameter(&[*a, *b, *c]);
    diam == 0.0 || area2 <= rel_tol * diam * diam
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    components: Vec<f64>,
    unit: bool,
}

impl DirectionVector {
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Whether the vector was normalized to unit length.
    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn dim(&self) -> Dimension {
        Dimension::from_len(self.components.len()).expect("direction has 2 or 3 components")
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Rescales to unit length. A zero vector has no direction.
    pub fn renormalized(&self) -> Result<DirectionVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(DirectionVector {
            components: self.components.iter().map(|c| c / n).collect(),
            unit: true,
        })
    }
}

/// Unit vector pointing from `from` towards `to`.
pub fn direction_unit(from: &Point, to: &Point) -> Result<DirectionVector> {
    from.check_same_dim(to)?;
    let delta = *to - *from;
    let n = delta.norm();
    if n == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok(DirectionVector {
        components: delta.coords().into_iter().map(|c| c / n).collect(),
        unit: true,
    })
}

/// Component-wise mean of direction vectors.
///
/// The mean is not renormalized: averaging unit vectors generally shortens
/// them, and antipodal inputs cancel to zero. Call
/// [`DirectionVector::renormalized`] when a unit heading is needed.
pub fn average_direction(dirs: &[DirectionVector]) -> Result<DirectionVector> {
    let first = dirs.first().ok_or(Error::EmptyInput("no direction vectors to average"))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim.len()];
    for d in dirs {
        if d.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: d.dim() });
        }
        for (s, c) in sum.iter_mut().zip(&d.components) {
            *s += c;
        }
    }
    let n = dirs.len() as f64;
    // n identical inputs must come back unchanged, so skip the division there.
    if dirs.iter().all(|d| d.components == first.components) {
        return Ok(DirectionVector { components: first.components.clone(), unit: false });
    }
    Ok(DirectionVector { components: sum.into_iter().map(|s| s / n).collect(), unit: false })
}
