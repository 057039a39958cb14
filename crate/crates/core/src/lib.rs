//! Speed-marked Poisson line networks in the plane.
//!
//! The crate samples the marked line process, builds the intersection
//! skeleton as a weighted graph, computes minimum-time routes with
//! slow-walk terminal access, runs the one-dimensional comparison chain,
//! and packages the statistical experiments used to check the model's
//! distributional laws.
//!
//! Validation guards are written as `!(x > 0.0)` so NaN inputs fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrangement;
pub mod comparison;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod geodesics;
pub mod geometry;
pub mod json;
pub mod line_process;
pub mod measure;
pub mod rng;
pub mod stats;
pub mod svg;

pub use arrangement::{ArrangementGraph, Terminal};
pub use error::{Error, Result};
pub use experiments::ExperimentReport;
pub use geodesics::{ConvergenceReport, Route, RouteOutcome};
pub use geometry::{ConvexBody, Disk, Line, Point, Segment};
pub use line_process::{LineSample, MarkedLine, ProcessParams};
