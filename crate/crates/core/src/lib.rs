//! Coarse-to-fine multi-view stereo.
//!
//! Depth is estimated on an image pyramid, coarsest level first. Every stage
//! builds a plane-sweep cost volume by group-wise correlation of hand-crafted
//! features, aggregates it spatially, turns it into per-pixel probabilities
//! and regresses depth as the soft-argmax. What changes between stages is how
//! the depth hypotheses are chosen:
//!
//! * stage 1 samples the whole scene range uniformly,
//! * stage 2 places an interval around the previous estimate whose width
//!   follows the per-pixel variance of the previous distribution,
//! * later stages upsample the depth map and derive the interval from the
//!   depth change that moves a pixel by a fixed step along its epipolar line.
//!
//! Before the variance is measured, stage-1 distributions can be pushed
//! towards a single peak with an adaptive unimodal filter. The crate also
//! carries the loss functions that supervise such a pipeline, cross-view
//! fusion into point clouds, and a synthetic scene generator with analytic
//! ground truth used as the oracle for end-to-end checks.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod ingest;
pub mod matching;
pub mod pipeline;
pub mod sampling;
pub mod synth;
pub mod unimodal;

mod par;

pub use error::{Error, Result};
pub use ingest::{CameraParams, DepthRange, Image, ImagePyramid, PipelineConfig, ScalarMap};
pub use ingest::{ConfidenceMap, DepthMap, VarianceMap};
