//! Benchmark helpers shared by the criterion targets.

use sirsn_core::geometry::{Disk, ORIGIN};
use sirsn_core::line_process::{sample, LineSample, ProcessParams};

/// A reproducible sample with roughly `target` expected lines.
pub fn sized_sample(target: f64, seed: u64) -> LineSample {
    let radius = 2.0;
    let gamma = 3.0;
    let floor = (std::f64::consts::PI * radius / target).sqrt();
    let params = ProcessParams::new(gamma, seed).expect("valid params");
    sample(params, Disk::new(ORIGIN, radius).expect("valid"), floor).expect("sample")
}
