//! Seeded scenario generators shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relpos::Point;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest interior angle of a triangle, radians.
pub fn min_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let angle = |p: &Point, q: &Point, r: &Point| {
        let (u, v) = (*q - *p, *r - *p);
        (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

/// Receiver triangle with every angle above 15 degrees and side scale in
/// [50, 2000] m, placed anywhere in a 10 km box.
pub fn receiver_triangle(rng: &mut ChaCha8Rng) -> [Point; 3] {
    loop {
        let scale = rng.random_range(50.0..2000.0);
        let offset = Point::xy(rng.random_range(-5000.0..5000.0), rng.random_range(-5000.0..5000.0));
        let p: Vec<Point> = (0..3)
            .map(|_| offset + Point::xy(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
            .collect();
        if min_angle(&p[0], &p[1], &p[2]) > 15f64.to_radians() {
            return [p[0], p[1], p[2]];
        }
    }
}

/// Uniform point in the disk of radius `radius` around `center`.
pub fn point_in_disk(rng: &mut ChaCha8Rng, center: Point, radius: f64) -> Point {
    let r = radius * rng.random_range(0.0f64..1.0).sqrt();
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    center + Point::xy(r * a.cos(), r * a.sin())
}

/// Compact three-drone formation over three ground emitters.
///
/// Drones sit within ±0.05 m of a point 100-400 m up, at altitudes
/// `h - δ, h, h + δ` with δ in [0.015, 0.05] m. Emitters lie on z = 0 at
/// 500-1500 m range, roughly 120 degrees apart.
pub fn drone_formation(rng: &mut ChaCha8Rng) -> ([Point; 3], [Point; 3]) {
    let spread = 0.05;
    let g = Point::xyz(
        rng.random_range(-200.0..200.0),
        rng.random_range(-200.0..200.0),
        rng.random_range(100.0..400.0),
    );
    let mut drones = [Point::origin(relpos::Dimension::Three); 3];
    for (k, d) in drones.iter_mut().enumerate() {
        let dz = (k as f64 - 1.0) * rng.random_range(0.3..1.0) * spread;
        *d = g + Point::xyz(rng.random_range(-spread..spread), rng.random_range(-spread..spread), dz);
    }
    let base = rng.random_range(0.0..std::f64::consts::TAU);
    let mut emitters = [Point::origin(relpos::Dimension::Three); 3];
    for (k, e) in emitters.iter_mut().enumerate() {
        let a = base + k as f64 * 2.1 + rng.random_range(-0.3..0.3);
        let r = rng.random_range(500.0..1500.0);
        *e = Point::xyz(r * a.cos(), r * a.sin(), 0.0);
    }
    (drones, emitters)
}
