//! Invariant hitting measures on line-space and the cost-index change of
//! coordinates.
//!
//! The measure on un-sensed planar lines is `(1/2) dr dphi` in Hesse normal
//! coordinates, normalized so that the mass of lines hitting a convex body
//! equals half its perimeter. These closed forms double as analytic oracles
//! for the samplers.

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Point, Segment};
use std::f64::consts::PI;

/// Mass of the hitting set of a convex body: half the boundary measure.
/// A segment (flat body of length L) gets mass L.
pub fn hitting_measure(body: &ConvexBody) -> f64 {
    0.5 * body.perimeter()
}

/// Mass of the set of lines meeting two disjoint segments.
///
/// When the segments are opposite sides of a convex quadrilateral the
/// classical closed form applies: half of (sum of the crossed endpoint
/// connections minus sum of the uncrossed ones). The crossed pairing is
/// recognized as the one whose connecting segments mutually intersect, so
/// the caller does not have to label endpoints. When the four endpoints
/// are not in convex position (one endpoint inside the hull of the rest)
/// no pairing crosses and the closed form undercounts; that case falls
/// back to quadrature of the offset-interval overlap over the normal
/// angle, at absolute tolerance 1e-12.
pub fn measure_lines_meeting_two_segments(s1: &Segment, s2: &Segment) -> Result<f64> {
    if s1.intersects(s2) {
        return Err(Error::invalid_geometry(
            "segments intersect; the crossed-connection formula needs disjoint segments",
        ));
    }
    let straight = s1.a.dist(s2.a) + s1.b.dist(s2.b);
    let crossed = s1.a.dist(s2.b) + s1.b.dist(s2.a);
    // Disjointness guarantees no shared endpoints, so the four connecting
    // segments are non-degenerate.
    let connects = |p: Point, q: Point, u: Point, v: Point| -> bool {
        Segment::new(p, q)
            .and_then(|x| Segment::new(u, v).map(|y| x.intersects(&y)))
            .unwrap_or(true)
    };
    let crossed_pairing_crosses = connects(s1.a, s2.b, s1.b, s2.a);
    let straight_pairing_crosses = connects(s1.a, s2.a, s1.b, s2.b);
    if crossed_pairing_crosses {
        return Ok(0.5 * (crossed - straight));
    }
    if straight_pairing_crosses {
        return Ok(0.5 * (straight - crossed));
    }
    let f = |phi: f64| {
        let n = Point::new(phi.cos(), phi.sin());
        let (a1, b1) = (s1.a.dot(n), s1.b.dot(n));
        let (a2, b2) = (s2.a.dot(n), s2.b.dot(n));
        let lo = a1.min(b1).max(a2.min(b2));
        let hi = a1.max(b1).min(a2.max(b2));
        (hi - lo).max(0.0)
    };
    // The integrand kinks exactly where two endpoint projections cross,
    // i.e. at the normal angle perpendicular to an endpoint difference.
    let pts = [s1.a, s1.b, s2.a, s2.b];
    let mut kinks = Vec::new();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = pts[i] - pts[j];
            kinks.push(normal_angle_perpendicular_to(d));
        }
    }
    Ok(0.5 * panel_adaptive_simpson(&f, 0.0, PI, 1e-12, &kinks))
}

/// Normal angle in [0, pi) whose direction is perpendicular to `d`.
fn normal_angle_perpendicular_to(d: Point) -> f64 {
    let mut phi = d.y.atan2(d.x) + std::f64::consts::FRAC_PI_2;
    phi = phi.rem_euclid(PI);
    if phi >= PI {
        phi -= PI;
    }
    phi
}

/// Mass of the set of lines meeting both `ball(c1, rho)` and `ball(c2, rho)`,
/// by adaptive quadrature over the normal angle of the overlap of the two
/// offset intervals. Absolute tolerance 1e-9.
pub fn measure_lines_meeting_two_disks(c1: Point, c2: Point, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::invalid_geometry("disk radius must be positive"));
    }
    if c1.dist(c2) <= 2.0 * rho {
        return Err(Error::invalid_geometry(
            "disks overlap; separation must exceed 2 rho",
        ));
    }
    let overlap = |phi: f64| -> f64 {
        let n = Point::new(phi.cos(), phi.sin());
        let (a, b) = (c1.dot(n), c2.dot(n));
        let lo = (a - rho).max(b - rho);
        let hi = (a + rho).min(b + rho);
        (hi - lo).max(0.0)
    };
    // Support boundaries sit where |(c1 - c2) . n| = 2 rho; seed the panels
    // there so narrow supports cannot be missed.
    let d = c1 - c2;
    let theta = d.y.atan2(d.x);
    let u = (2.0 * rho / d.norm()).min(1.0);
    let mut kinks = vec![normal_angle_perpendicular_to(d)];
    for root in [u.acos(), (-u).acos()] {
        for sign in [-1.0, 1.0] {
            kinks.push((theta + sign * root).rem_euclid(PI));
        }
    }
    Ok(0.5 * panel_adaptive_simpson(&overlap, 0.0, PI, 1e-9, &kinks))
}

/// Relative cost index of approaching a reference line of speed `w` along a
/// line of speed `v` at angle `theta`: `csc(theta)/v - cot(theta)/w`.
pub fn cost_index(v: f64, theta: f64, w: f64) -> Result<f64> {
    if !(v > 0.0) || !(w > 0.0) {
        return Err(Error::invalid_parameter("speeds must be positive"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::invalid_parameter(
            "cost index is undefined at theta = 0 or pi (the reference line itself)",
        ));
    }
    let s = theta.sin();
    Ok(1.0 / (v * s) - theta.cos() / (w * s))
}

/// Intensity density in `(c, r, theta)` coordinates of the sub-process of
/// lines slower than `w`, per unit `(c, r, theta)`:
/// `(gamma-1)/2 * sin(theta) * (c sin(theta) + cos(theta)/w)^(gamma-2)`.
///
/// Outside the support (where the base is non-positive, i.e. the implied
/// speed would be negative or above `w` is impossible) the density is 0.
pub fn cost_intensity_density(c: f64, theta: f64, w: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 2.0) {
        return Err(Error::invalid_parameter("gamma must exceed 2"));
    }
    if !(w > 0.0) {
        return Err(Error::invalid_parameter("reference speed must be positive"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::invalid_parameter("theta must lie in (0, pi)"));
    }
    let base = c * theta.sin() + theta.cos() / w;
    if base <= 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * (gamma - 1.0) * theta.sin() * base.powf(gamma - 2.0))
}

/// Speed corresponding to a cost index against a reference line of speed `w`.
pub fn speed_from_cost(c: f64, theta: f64, w: f64) -> f64 {
    1.0 / (c * theta.sin() + theta.cos() / w)
}

/// Adaptive Simpson over `[a, b]` with panels seeded at `breakpoints`
/// (values outside `(a, b)` are ignored). Needed when the integrand is
/// supported on a narrow window that plain recursive probing could miss.
pub fn panel_adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    breakpoints: &[f64],
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let per_panel = tol / (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], per_panel))
        .sum()
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ORIGIN;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn disk_measure_is_pi_r() {
        let d = ConvexBody::disk(Point::new(3.0, -7.0), 1.0).unwrap();
        assert!((hitting_measure(&d) - PI).abs() < 1e-12);
        let d2 = ConvexBody::disk(ORIGIN, 1.0).unwrap();
        assert_eq!(hitting_measure(&d), hitting_measure(&d2));
    }

    #[test]
    fn unit_square_measure_is_two() {
        let sq = ConvexBody::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((hitting_measure(&sq) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_segment_measure_vanishes() {
        let s = ConvexBody::segment(ORIGIN, Point::new(1e-9, 0.0)).unwrap();
        assert!(hitting_measure(&s) < 1e-8);
    }

    // Frozen closed forms: (sqrt(5)-2)/4 for the segment pair used in the
    // in-ball construction, sqrt(10)-3 for the short sides of a 1x3
    // rectangle.
    #[test]
    fn two_segment_measure_closed_forms() {
        let s1 = Segment::new(Point::new(-0.5, 0.0), Point::new(-0.75, 0.0)).unwrap();
        let s2 = Segment::new(Point::new(0.0, 0.0), Point::new(0.0, 1.0)).unwrap();
        let m = measure_lines_meeting_two_segments(&s1, &s2).unwrap();
        assert!((m - (5f64.sqrt() - 2.0) / 4.0).abs() < 1e-12);

        let s1 = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let s2 = Segment::new(Point::new(0.0, 3.0), Point::new(1.0, 3.0)).unwrap();
        let m = measure_lines_meeting_two_segments(&s1, &s2).unwrap();
        assert!((m - (10f64.sqrt() - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn facing_segments_limit_is_length() {
        // Crossed connections exceed uncrossed by twice the length as the
        // gap closes.
        let h = 1e-8;
        let s1 = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let s2 = Segment::new(Point::new(0.0, h), Point::new(1.0, h)).unwrap();
        let m = measure_lines_meeting_two_segments(&s1, &s2).unwrap();
        assert!((m - 1.0).abs() < 1e-7);
    }

    #[test]
    fn two_segment_measure_rejects_intersecting() {
        let s1 = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let s2 = Segment::new(Point::new(0.0, 1.0), Point::new(1.0, 0.0)).unwrap();
        assert!(measure_lines_meeting_two_segments(&s1, &s2).is_err());
    }

    /// Quadrature oracle for the segment-pair measure: integrate the overlap
    /// of offset intervals over the normal angle on a dense uniform panel
    /// grid, independently of the closed form and of the kink seeding.
    fn two_segment_measure_quadrature(s1: &Segment, s2: &Segment) -> f64 {
        let f = |phi: f64| {
            let n = Point::new(phi.cos(), phi.sin());
            let (a1, b1) = (s1.a.dot(n), s1.b.dot(n));
            let (a2, b2) = (s2.a.dot(n), s2.b.dot(n));
            let lo = a1.min(b1).max(a2.min(b2));
            let hi = a1.max(b1).min(a2.max(b2));
            (hi - lo).max(0.0)
        };
        let panels: Vec<f64> = (1..512).map(|i| PI * i as f64 / 512.0).collect();
        0.5 * panel_adaptive_simpson(&f, 0.0, PI, 1e-11, &panels)
    }

    #[test]
    fn two_segment_measure_matches_quadrature_on_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut tested = 0;
        while tested < 60 {
            let p = |rng: &mut ChaCha12Rng| {
                Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
            };
            let s1 = match Segment::new(p(&mut rng), p(&mut rng)) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let s2 = match Segment::new(p(&mut rng), p(&mut rng)) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if s1.intersects(&s2) {
                continue;
            }
            let exact = measure_lines_meeting_two_segments(&s1, &s2).unwrap();
            let quad = two_segment_measure_quadrature(&s1, &s2);
            assert!(
                (exact - quad).abs() < 1e-8,
                "closed form {exact} vs quadrature {quad}"
            );
            assert!(exact >= 0.0);
            // Symmetry in the arguments (the quadrature fallback is
            // symmetric only up to panel rounding).
            let swapped = measure_lines_meeting_two_segments(&s2, &s1).unwrap();
            assert!((exact - swapped).abs() <= 1e-12 * exact.max(1e-12));
            tested += 1;
        }
    }

    #[test]
    fn two_disk_measure_basics() {
        // Symmetric in the centers.
        let a = measure_lines_meeting_two_disks(ORIGIN, Point::new(1.0, 0.0), 0.1).unwrap();
        let b = measure_lines_meeting_two_disks(Point::new(1.0, 0.0), ORIGIN, 0.1).unwrap();
        assert!((a - b).abs() < 1e-12);
        // Vanishes as rho -> 0.
        let tiny = measure_lines_meeting_two_disks(ORIGIN, Point::new(1.0, 0.0), 1e-9).unwrap();
        assert!(tiny < 1e-7);
        // Overlapping disks are rejected.
        assert!(measure_lines_meeting_two_disks(ORIGIN, Point::new(1.0, 0.0), 0.6).is_err());
    }

    #[test]
    fn two_disk_measure_satisfies_alpha_lower_bound() {
        // For rho = r/alpha with alpha >= 2 the mass is at least r/(2 alpha^2).
        for (r, alpha) in [(1.0, 2.5), (1.0, 10.0), (3.0, 4.0), (0.2, 8.0)] {
            let c2 = Point::new(r, 0.0);
            let m = measure_lines_meeting_two_disks(ORIGIN, c2, r / alpha).unwrap();
            assert!(
                m >= r / (2.0 * alpha * alpha),
                "r={r} alpha={alpha}: {m} < bound"
            );
        }
    }

    #[test]
    fn two_disk_measure_matches_rejection_sampling() {
        // Monte-Carlo oracle: sample lines uniformly from the hitting set of
        // ball((0.5, 0), 0.6) and count the fraction hitting both small disks.
        let c1 = ORIGIN;
        let c2 = Point::new(1.0, 0.0);
        let rho = 0.1;
        let exact = measure_lines_meeting_two_disks(c1, c2, rho).unwrap();
        assert!(exact >= 0.005);

        let cover_center = Point::new(0.5, 0.0);
        let cover_rho = 0.6;
        let total_mass = PI * cover_rho;
        let n = 200_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut hits = 0usize;
        for _ in 0..n {
            let phi: f64 = rng.random_range(0.0..PI);
            let normal = Point::new(phi.cos(), phi.sin());
            let r = cover_center.dot(normal) + rng.random_range(-cover_rho..cover_rho);
            if (c1.dot(normal) - r).abs() <= rho && (c2.dot(normal) - r).abs() <= rho {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let estimate = p * total_mass;
        let se = (p * (1.0 - p) / n as f64).sqrt() * total_mass;
        assert!(
            (estimate - exact).abs() <= 3.0 * se,
            "estimate {estimate} +- {se} vs exact {exact}"
        );
    }

    #[test]
    fn cost_index_values() {
        assert!((cost_index(2.0, PI / 2.0, 5.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((cost_index(1.0, PI / 4.0, 1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        // Equal speeds: the index vanishes as theta -> 0.
        let mut prev = f64::INFINITY;
        for theta in [1e-2, 1e-4, 1e-6] {
            let c = cost_index(1.0, theta, 1.0).unwrap();
            assert!(c.abs() < prev);
            prev = c.abs();
        }
        assert!(cost_index(1.0, 1e-6, 1.0).unwrap().abs() < 1e-5);
        assert!(cost_index(1.0, 0.0, 1.0).is_err());
        assert!(cost_index(1.0, PI, 1.0).is_err());
    }

    #[test]
    fn cost_density_values() {
        let v = cost_intensity_density(1.0, PI / 2.0, 3.0, 3.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        // Support boundary.
        let theta: f64 = 1.2;
        let w = 2.0;
        let c0 = -theta.cos() / (w * theta.sin());
        assert_eq!(cost_intensity_density(c0, theta, w, 3.0).unwrap(), 0.0);
        assert!(cost_intensity_density(1.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn cost_density_change_of_variables() {
        // Transporting the speed density through v = 1/(c sin t + cos t / w)
        // with Jacobian |dc/dv| = csc(t)/v^2 must reproduce the density in c.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..100 {
            let gamma = rng.random_range(2.2..6.0);
            let w = rng.random_range(0.5..4.0);
            let theta = rng.random_range(0.05..(PI - 0.05));
            let v = rng.random_range(0.05..w);
            let c = cost_index(v, theta, w).unwrap();
            let lhs = cost_intensity_density(c, theta, w, gamma).unwrap();
            let jacobian = 1.0 / (theta.sin() * v * v);
            let rhs = 0.5 * (gamma - 1.0) * v.powf(-gamma) / jacobian;
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0),
                "gamma={gamma} w={w} theta={theta} v={v}: {lhs} vs {rhs}"
            );
            // The implied speed round-trips.
            assert!((speed_from_cost(c, theta, w) - v).abs() < 1e-9 * v);
        }
    }

    #[test]
    fn cost_density_mass_matches_speed_density_mass() {
        // Integrate the (c, theta) density over c for the slice of speeds in
        // [v_lo, w) and compare with the direct v-integral, per unit r.
        let gamma = 3.5;
        let w = 2.0;
        let v_lo = 0.4;
        let direct = |a: f64, b: f64| {
            // integral of (gamma-1)/2 v^-gamma over [a, b)
            0.5 * (a.powf(1.0 - gamma) - b.powf(1.0 - gamma))
        };
        let per_theta = |theta: f64| {
            let c_lo = cost_index(w - 1e-13, theta, w).unwrap();
            let c_hi = cost_index(v_lo, theta, w).unwrap();
            adaptive_simpson(
                &|c| cost_intensity_density(c, theta, w, gamma).unwrap(),
                c_lo,
                c_hi,
                1e-10,
            )
        };
        let mass = adaptive_simpson(&per_theta, 1e-6, PI - 1e-6, 1e-8);
        // The theta integral contributes a factor pi (uniform in theta).
        let expected = PI * direct(v_lo, w);
        assert!(
            ((mass - expected) / expected).abs() < 1e-6,
            "mass {mass} vs expected {expected}"
        );
    }
}
