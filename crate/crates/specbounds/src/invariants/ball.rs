//! Exact area of a triangle clipped to a Euclidean ball.
//!
//! The triangle's plane meets the ball in a disk; the triangle-disk
//! intersection area is assembled edge by edge: chords of the polygon that
//! run inside the circle contribute straight triangle areas, the parts cut
//! away contribute circular sectors.

use nalgebra::{Point3, Vector2};

/// Area of `tri ∩ B(center, r)`, exact up to roundoff.
pub fn triangle_ball_area(tri: &[Point3<f64>; 3], center: &Point3<f64>, r: f64) -> f64 {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let n = e1.cross(&e2);
    let n_norm = n.norm();
    if n_norm == 0.0 {
        return 0.0;
    }
    let n_hat = n / n_norm;
    let plane_dist = (tri[0] - center).dot(&n_hat);
    if plane_dist.abs() >= r {
        return 0.0;
    }
    // Disk cut out of the triangle's plane by the ball.
    let rho = (r * r - plane_dist * plane_dist).sqrt();
    let foot = center + plane_dist * n_hat;

    let u = e1 / e1.norm();
    let v = n_hat.cross(&u);
    let p2: [Vector2<f64>; 3] = [
        Vector2::new((tri[0] - foot).dot(&u), (tri[0] - foot).dot(&v)),
        Vector2::new((tri[1] - foot).dot(&u), (tri[1] - foot).dot(&v)),
        Vector2::new((tri[2] - foot).dot(&u), (tri[2] - foot).dot(&v)),
    ];
    polygon_circle_area(&p2, rho).abs()
}

/// Signed area of the intersection of a polygon with the disk of radius `r`
/// centered at the origin. The sign follows the polygon orientation.
pub fn polygon_circle_area(poly: &[Vector2<f64>], r: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..poly.len() {
        acc += chord_area(&poly[i], &poly[(i + 1) % poly.len()], r);
    }
    acc
}

fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed area of `triangle(0, p, q) ∩ disk(0, r)`.
///
/// Segments inside the disk contribute `cross(p, q) / 2` pieces; segments
/// outside contribute sectors `r^2 * angle / 2`. A straight edge seen from
/// the origin subtends less than pi, so the two-argument arctangent gives
/// the correct signed sector angle.
fn chord_area(p: &Vector2<f64>, q: &Vector2<f64>, r: f64) -> f64 {
    let r2 = r * r;
    let p_in = p.norm_squared() <= r2;
    let q_in = q.norm_squared() <= r2;
    if p_in && q_in {
        return 0.5 * cross2(p, q);
    }

    // Segment p + t (q - p), t in [0, 1] against the circle.
    let d = q - p;
    let a = d.norm_squared();
    let b = p.dot(&d);
    let c = p.norm_squared() - r2;
    let disc = b * b - a * c;

    let sector = |x: &Vector2<f64>, y: &Vector2<f64>| {
        let ang = cross2(x, y).atan2(x.dot(y));
        0.5 * r2 * ang
    };

    if p_in != q_in {
        // One endpoint inside: exactly one crossing in (0, 1).
        let sq = disc.max(0.0).sqrt();
        let (t0, t1) = ((-b - sq) / a, (-b + sq) / a);
        if p_in {
            let t = t1.clamp(0.0, 1.0);
            let x = p + d * t;
            0.5 * cross2(p, &x) + sector(&x, q)
        } else {
            let t = t0.clamp(0.0, 1.0);
            let x = p + d * t;
            sector(p, &x) + 0.5 * cross2(&x, q)
        }
    } else {
        // Both outside: either the segment misses the disk or it is a
        // secant with two crossings.
        if disc <= 0.0 {
            return sector(p, q);
        }
        let sq = disc.sqrt();
        let t0 = (-b - sq) / a;
        let t1 = (-b + sq) / a;
        if t1 <= 0.0 || t0 >= 1.0 {
            return sector(p, q);
        }
        let t0 = t0.max(0.0);
        let t1 = t1.min(1.0);
        let x0 = p + d * t0;
        let x1 = p + d * t1;
        sector(p, &x0) + 0.5 * cross2(&x0, &x1) + sector(&x1, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use std::f64::consts::PI;

    /// Monte Carlo oracle: fraction of points of the triangle inside the
    /// disk, times the triangle area.
    fn mc_area(tri: &[Vector2<f64>; 3], r: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = stream(seed, 0xba11, 0);
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        let area = 0.5 * cross2(&e1, &e2).abs();
        let mut inside = 0usize;
        for _ in 0..samples {
            let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let p = tri[0] + e1 * a + e2 * b;
            if p.norm_squared() <= r * r {
                inside += 1;
            }
        }
        area * inside as f64 / samples as f64
    }

    #[test]
    fn triangle_fully_inside() {
        let tri = [Vector2::new(0.1, 0.1), Vector2::new(0.4, 0.2), Vector2::new(0.2, 0.5)];
        let exact = 0.5 * cross2(&(tri[1] - tri[0]), &(tri[2] - tri[0]));
        assert!((polygon_circle_area(&tri, 2.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn disk_fully_inside_triangle() {
        let tri = [Vector2::new(-50.0, -50.0), Vector2::new(50.0, -40.0), Vector2::new(0.0, 60.0)];
        let got = polygon_circle_area(&tri, 1.5);
        assert!((got - PI * 2.25).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn triangle_fully_outside() {
        let tri = [Vector2::new(5.0, 5.0), Vector2::new(6.0, 5.0), Vector2::new(5.0, 6.0)];
        assert!(polygon_circle_area(&tri, 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_plane_cut() {
        // Giant triangle covering the half plane x < 0 around the disk.
        let tri = [Vector2::new(0.0, -1e4), Vector2::new(0.0, 1e4), Vector2::new(-1e4, 0.0)];
        let got = polygon_circle_area(&tri, 1.0).abs();
        assert!((got - PI / 2.0).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn matches_monte_carlo_on_random_triangles() {
        for case in 0..40u64 {
            let mut rng = stream(1234, 0x7717, case);
            let tri = [
                Vector2::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0),
                Vector2::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0),
                Vector2::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0),
            ];
            let r = 0.3 + 1.2 * rng.gen::<f64>();
            let exact = polygon_circle_area(&tri, r).abs();
            let approx = mc_area(&tri, r, 200_000, case);
            let tri_area = 0.5 * cross2(&(tri[1] - tri[0]), &(tri[2] - tri[0])).abs();
            let tol = 0.01 * tri_area.max(r * r) + 1e-9;
            assert!(
                (exact - approx).abs() < tol,
                "case {case}: exact {exact}, mc {approx}, tol {tol}"
            );
        }
    }

    #[test]
    fn ball_area_of_embedded_triangle() {
        // Triangle in the plane z = 0.6 clipped by the unit ball: the plane
        // cuts a disk of radius 0.8; the triangle covers its first quadrant.
        let tri = [
            Point3::new(0.0, 0.0, 0.6),
            Point3::new(10.0, 0.0, 0.6),
            Point3::new(0.0, 10.0, 0.6),
        ];
        let got = triangle_ball_area(&tri, &Point3::origin(), 1.0);
        let expect = 0.25 * PI * 0.64;
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
    }
}
