//! Sampling of the speed-marked Poisson line process restricted to a disk
//! window and to speeds above a floor.
//!
//! The process on (line, speed) space has intensity
//! `(gamma - 1) v^-gamma dv x (1/2) dr dphi`, so the sub-process with
//! speeds in `[a, b)` hitting a disk of radius `R` is a Poisson pattern
//! with mean `pi R (a^-(gamma-1) - b^-(gamma-1))`, uniform in the normal
//! angle, uniform in the offset across the disk, with a truncated Pareto
//! speed mark. Refinement to a lower floor adds an independent band, which
//! couples the whole family of floors monotonically.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Line, Point};
use crate::json::to_string_17;
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Hard default on the expected number of lines per sample.
pub const DEFAULT_MAX_EXPECTED_LINES: f64 = 1e6;

/// Tolerance for "line hits the window" checks.
pub const WINDOW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub gamma: f64,
    pub seed: u64,
}

impl ProcessParams {
    pub fn new(gamma: f64, seed: u64) -> Result<ProcessParams> {
        if !(gamma > 2.0) {
            return Err(Error::invalid_parameter(format!(
                "gamma must exceed 2 (got {gamma})"
            )));
        }
        Ok(ProcessParams { gamma, seed })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedLine {
    pub id: u64,
    pub line: Line,
    /// Speed limit of the line.
    pub v: f64,
}

/// A realized sub-process: all lines with speed at least `v_floor` hitting
/// the window, plus the parameters and seed needed to reproduce or refine
/// it.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSample {
    pub params: ProcessParams,
    pub window: Disk,
    pub v_floor: f64,
    pub lines: Vec<MarkedLine>,
}

/// Mean number of process lines hitting a disk of radius `radius` with
/// speeds in `[lo, hi)`.
pub fn expected_count(gamma: f64, radius: f64, lo: f64, hi: f64) -> f64 {
    let tail = |v: f64| {
        if v.is_infinite() {
            0.0
        } else {
            v.powf(-(gamma - 1.0))
        }
    };
    PI * radius * (tail(lo) - tail(hi))
}

/// Inverse-CDF draw from the speed density `v^-gamma` truncated to
/// `[lo, hi)`; `hi` may be infinite.
fn draw_speed<R: Rng>(rng: &mut R, gamma: f64, lo: f64, hi: f64) -> f64 {
    let e = gamma - 1.0;
    let u: f64 = rng.random_range(0.0..1.0);
    let tl = lo.powf(-e);
    let th = if hi.is_infinite() { 0.0 } else { hi.powf(-e) };
    (tl - u * (tl - th)).powf(-1.0 / e)
}

/// Draw the band of lines with speeds in `[lo, hi)` hitting `window`.
fn draw_band(
    params: &ProcessParams,
    window: &Disk,
    lo: f64,
    hi: f64,
    first_id: u64,
    cap: f64,
) -> Result<Vec<MarkedLine>> {
    let mean = expected_count(params.gamma, window.radius, lo, hi);
    if mean > cap {
        return Err(Error::resource_cap(format!(
            "expected line count {mean:.3e} exceeds cap {cap:.1e}; raise the speed floor"
        )));
    }
    let mut rng = rng::band_rng(params.seed, lo, hi);
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::invalid_parameter(format!("poisson mean: {e}")))?
            .sample(&mut rng) as u64
    } else {
        0
    };
    let mut lines = Vec::with_capacity(n as usize);
    for k in 0..n {
        let phi: f64 = rng.random_range(0.0..PI);
        let normal = Point::new(phi.cos(), phi.sin());
        let r = window.center.dot(normal)
            + rng.random_range(-window.radius..window.radius);
        let v = draw_speed(&mut rng, params.gamma, lo, hi);
        lines.push(MarkedLine {
            id: first_id + k,
            line: Line { phi, r },
            v,
        });
    }
    Ok(lines)
}

/// Sample the sub-process with speeds at least `v_floor` in a disk window.
pub fn sample(params: ProcessParams, window: Disk, v_floor: f64) -> Result<LineSample> {
    sample_capped(params, window, v_floor, DEFAULT_MAX_EXPECTED_LINES)
}

pub fn sample_capped(
    params: ProcessParams,
    window: Disk,
    v_floor: f64,
    cap: f64,
) -> Result<LineSample> {
    if !(v_floor > 0.0) {
        return Err(Error::invalid_parameter("speed floor must be positive"));
    }
    let lines = draw_band(&params, &window, v_floor, f64::INFINITY, 0, cap)?;
    Ok(LineSample {
        params,
        window,
        v_floor,
        lines,
    })
}

impl LineSample {
    /// Refine to a lower floor: the existing lines are kept verbatim and an
    /// independent band of slower lines is appended.
    pub fn refine(&self, new_v_floor: f64) -> Result<LineSample> {
        self.refine_capped(new_v_floor, DEFAULT_MAX_EXPECTED_LINES)
    }

    pub fn refine_capped(&self, new_v_floor: f64, cap: f64) -> Result<LineSample> {
        if !(new_v_floor > 0.0 && new_v_floor < self.v_floor) {
            return Err(Error::invalid_parameter(format!(
                "new floor {new_v_floor} must lie in (0, {})",
                self.v_floor
            )));
        }
        let first_id = self.lines.iter().map(|l| l.id + 1).max().unwrap_or(0);
        let band = draw_band(
            &self.params,
            &self.window,
            new_v_floor,
            self.v_floor,
            first_id,
            cap,
        )?;
        let mut lines = self.lines.clone();
        lines.extend(band);
        Ok(LineSample {
            params: self.params,
            window: self.window,
            v_floor: new_v_floor,
            lines,
        })
    }

    /// Scale-equivariance map: offsets scale by `s`, speeds by
    /// `s^(1/(gamma-1))`; line identities are preserved.
    pub fn scale(&self, s: f64) -> Result<LineSample> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid_parameter("scale factor must be positive"));
        }
        let beta = 1.0 / (self.params.gamma - 1.0);
        let speed_factor = s.powf(beta);
        let lines = self
            .lines
            .iter()
            .map(|ml| MarkedLine {
                id: ml.id,
                line: Line {
                    phi: ml.line.phi,
                    r: ml.line.r * s,
                },
                v: ml.v * speed_factor,
            })
            .collect();
        Ok(LineSample {
            params: self.params,
            window: Disk {
                center: self.window.center * s,
                radius: self.window.radius * s,
            },
            v_floor: self.v_floor * speed_factor,
            lines,
        })
    }

    /// Maximum speed among lines within distance `tol` of `x`; 0 when no
    /// line is that close (speeds below the floor are unresolved).
    pub fn speed_limit_at(&self, x: Point, tol: f64) -> f64 {
        self.lines
            .iter()
            .filter(|ml| ml.line.distance(x) <= tol)
            .map(|ml| ml.v)
            .fold(0.0, f64::max)
    }

    /// The fastest line of the sample, if any.
    pub fn fastest(&self) -> Option<&MarkedLine> {
        self.lines
            .iter()
            .max_by(|a, b| a.v.partial_cmp(&b.v).unwrap())
    }

    /// Check the structural invariants; used by tests and deserialization.
    pub fn validate(&self) -> Result<()> {
        if !(self.v_floor > 0.0) {
            return Err(Error::invalid_geometry("speed floor must be positive"));
        }
        let mut ids = std::collections::HashSet::with_capacity(self.lines.len());
        for ml in &self.lines {
            if !(ml.v >= self.v_floor) {
                return Err(Error::invalid_geometry(format!(
                    "line {} has speed {} below the floor {}",
                    ml.id, ml.v, self.v_floor
                )));
            }
            if ml.line.distance(self.window.center) > self.window.radius + WINDOW_TOL {
                return Err(Error::invalid_geometry(format!(
                    "line {} misses the window",
                    ml.id
                )));
            }
            if !ids.insert(ml.id) {
                return Err(Error::invalid_geometry(format!("duplicate line id {}", ml.id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = LineSampleDoc {
            version: 1,
            gamma: self.params.gamma,
            seed: self.params.seed,
            window: WindowDoc {
                cx: self.window.center.x,
                cy: self.window.center.y,
                r: self.window.radius,
            },
            v_floor: self.v_floor,
            lines: self
                .lines
                .iter()
                .map(|ml| LineDoc {
                    id: ml.id,
                    phi: ml.line.phi,
                    r: ml.line.r,
                    v: ml.v,
                })
                .collect(),
        };
        to_string_17(&doc)
    }

    pub fn from_json(text: &str) -> Result<LineSample> {
        let doc: LineSampleDoc = serde_json::from_str(text)?;
        if doc.version != 1 {
            return Err(Error::invalid_parameter(format!(
                "unsupported sample document version {}",
                doc.version
            )));
        }
        let sample = LineSample {
            params: ProcessParams::new(doc.gamma, doc.seed)?,
            window: Disk::new(Point::new(doc.window.cx, doc.window.cy), doc.window.r)?,
            v_floor: doc.v_floor,
            lines: doc
                .lines
                .into_iter()
                .map(|l| MarkedLine {
                    id: l.id,
                    line: Line { phi: l.phi, r: l.r },
                    v: l.v,
                })
                .collect(),
        };
        sample.validate()?;
        Ok(sample)
    }
}

/// Fastest line of the full (improper) process hitting the window: starts
/// at `start_floor` and refines downward until the sample is non-empty.
/// The refinement coupling makes the result exact in law.
pub fn fastest_line_overall(
    params: ProcessParams,
    window: Disk,
    start_floor: f64,
) -> Result<MarkedLine> {
    let mut s = sample(params, window, start_floor)?;
    let mut halvings = 0;
    while s.lines.is_empty() {
        halvings += 1;
        if halvings > 64 {
            return Err(Error::resource_cap(
                "no line found after 64 floor halvings".to_string(),
            ));
        }
        s = s.refine(s.v_floor * 0.5)?;
    }
    Ok(*s.fastest().expect("non-empty"))
}

#[derive(Serialize, Deserialize)]
struct LineSampleDoc {
    version: u32,
    gamma: f64,
    seed: u64,
    window: WindowDoc,
    v_floor: f64,
    lines: Vec<LineDoc>,
}

#[derive(Serialize, Deserialize)]
struct WindowDoc {
    cx: f64,
    cy: f64,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct LineDoc {
    id: u64,
    phi: f64,
    r: f64,
    v: f64,
}
