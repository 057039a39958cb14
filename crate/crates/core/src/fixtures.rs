//! Hand-built line configurations with known routing behaviour.

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Disk, Line, Point, ORIGIN};
use crate::line_process::{sample_capped, LineSample, MarkedLine, ProcessParams};
use crate::rng::labeled_rng;
use rand::Rng;
use std::f64::consts::FRAC_PI_2;

/// Equilateral triangle of unit side with fast sides and slow interior
/// clutter. Routes from a vertex to the midpoint of the opposite side can
/// run either way around the perimeter in the same time (half the
/// perimeter at unit speed). `side_speed_bump` is added to one side to
/// break the tie on demand.
///
/// Returns (sample, vertex endpoint, opposite-midpoint endpoint).
pub fn triangle_fixture(side_speed_bump: f64) -> (LineSample, Point, Point) {
    let circum = 1.0 / 3f64.sqrt();
    let apex = Point::new(0.0, circum);
    let base_y = -0.5 * circum;
    let left = Point::new(-0.5, base_y);
    let right = Point::new(0.5, base_y);
    let mid = Point::new(0.0, base_y);

    let mut lines = vec![
        MarkedLine {
            id: 0,
            line: Line::through(apex, left).expect("distinct"),
            v: 1.0 + side_speed_bump,
        },
        MarkedLine {
            id: 1,
            line: Line::through(apex, right).expect("distinct"),
            v: 1.0,
        },
        MarkedLine {
            id: 2,
            line: Line::through(left, right).expect("distinct"),
            v: 1.0,
        },
    ];
    // Slow clutter through the interior; too slow to shortcut.
    for (i, (phi, r)) in [(0.4, 0.05), (2.1, -0.08)].into_iter().enumerate() {
        lines.push(MarkedLine {
            id: 3 + i as u64,
            line: Line::new(phi, r).expect("finite"),
            v: 0.1,
        });
    }
    let sample = LineSample {
        params: ProcessParams::new(3.0, 0).expect("valid"),
        window: Disk::new(ORIGIN, 2.0).expect("valid"),
        v_floor: 0.1,
        lines,
    };
    (sample, apex, mid)
}

/// The square-and-axis forcing structure: a slow 2x2 square around the
/// origin (speed `a`), the y-axis at speed `b`, a fast 10x10 square
/// centered at (0, 2) at speed `c`, plus slow background lines. With
/// `c > 10 b > 59 a / 3 > 354 / 3` every minimum-time route from inside
/// the small square to outside the big square is forced through
/// `A = (0, -1)` and `B = (0, -3)`.
#[derive(Clone, Copy, Debug)]
pub struct ForcingFixture {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
    pub background_floor: f64,
    pub seed: u64,
}

pub const FORCING_PASS_POINT_A: Point = Point::new(0.0, -1.0);
pub const FORCING_PASS_POINT_B: Point = Point::new(0.0, -3.0);

impl Default for ForcingFixture {
    fn default() -> Self {
        ForcingFixture {
            a: 7.0,
            b: 14.0,
            c: 141.0,
            gamma: 3.0,
            background_floor: 0.5,
            seed: 0x5EED,
        }
    }
}

impl ForcingFixture {
    /// Whether the speed chain c > 10b > 59a/3 > 354/3 holds.
    pub fn constants_valid(&self) -> bool {
        self.c > 10.0 * self.b
            && 10.0 * self.b > 59.0 * self.a / 3.0
            && 59.0 * self.a / 3.0 > 354.0 / 3.0
    }

    pub fn window(&self) -> Disk {
        // Covers the 10x10 square centered at (0, 2).
        Disk::new(Point::new(0.0, 2.0), 7.5).expect("valid")
    }

    pub fn big_square(&self) -> ConvexBody {
        ConvexBody::polygon(vec![
            Point::new(-5.0, -3.0),
            Point::new(5.0, -3.0),
            Point::new(5.0, 7.0),
            Point::new(-5.0, 7.0),
        ])
        .expect("convex")
    }

    /// Nine structural lines plus background clutter. Background lines
    /// faster than 1 that hit the big square are redrawn, realizing the
    /// conditioning "no other fast line meets the big square".
    pub fn build(&self) -> Result<LineSample> {
        if !(self.background_floor > 0.0 && self.background_floor <= 1.0) {
            return Err(Error::invalid_parameter(
                "background floor must lie in (0, 1]",
            ));
        }
        let window = self.window();
        let params = ProcessParams::new(self.gamma, self.seed)?;
        let mut sample = sample_capped(params, window, self.background_floor, 1e5)?;

        let big = self.big_square();
        let mut redraw = labeled_rng(self.seed, 0xF0BC);
        let exponent = -1.0 / (self.gamma - 1.0);
        for ml in sample.lines.iter_mut() {
            let mut guard = 0;
            while ml.v > 1.0 && big.hit_by(&ml.line) {
                let phi: f64 = redraw.random_range(0.0..std::f64::consts::PI);
                let normal = Point::new(phi.cos(), phi.sin());
                let r = window.center.dot(normal)
                    + redraw.random_range(-window.radius..window.radius);
                let u: f64 = redraw.random_range(0.0..1.0);
                ml.line = Line { phi, r };
                ml.v = self.background_floor * u.powf(exponent);
                guard += 1;
                if guard > 10_000 {
                    return Err(Error::resource_cap(
                        "background rejection failed to terminate",
                    ));
                }
            }
        }

        let first = sample.lines.iter().map(|l| l.id + 1).max().unwrap_or(0);
        let structural = [
            // Small 2x2 square centered at the origin, speed a.
            (0.0, 1.0, self.a),
            (0.0, -1.0, self.a),
            (FRAC_PI_2, 1.0, self.a),
            (FRAC_PI_2, -1.0, self.a),
            // The y-axis, speed b.
            (0.0, 0.0, self.b),
            // Big 10x10 square centered at (0, 2), speed c.
            (0.0, 5.0, self.c),
            (0.0, -5.0, self.c),
            (FRAC_PI_2, 7.0, self.c),
            (FRAC_PI_2, -3.0, self.c),
        ];
        for (k, (phi, r, v)) in structural.into_iter().enumerate() {
            sample.lines.push(MarkedLine {
                id: first + k as u64,
                line: Line::new(phi, r)?,
                v,
            });
        }
        Ok(sample)
    }
}
