//! Learned ordering of image distortion severity.
//!
//! The crate trains a small convolutional scorer that maps 32x32 RGB patches
//! to a scalar that grows with distortion strength, using only ordered pairs
//! of differently-distorted views of the same content as supervision. Around
//! that sit the pieces needed to do this end to end without any labeled data:
//!
//! - [`imaging`]: image containers, PNG/PPM codecs, error maps, and rank
//!   statistics (average ranks, Spearman correlation).
//! - [`distortion`]: parametric simulators for lateral chromatic aberration
//!   and resampling moire, plus synthetic test-chart generation.
//! - [`dataset`]: ordered-pair corpus construction — distort, locate regions
//!   where the two views actually differ, cut patches, write a manifest.
//! - [`model`]: the scorer network (forward, analytic gradients, SGD
//!   training loop, checkpoint serialization).
//! - [`ranking`]: turning patch scores into decisions — pair ordering by
//!   majority vote, full image-set ranking, and Monte Carlo evaluation.
//!
//! Everything downstream of a seed is deterministic: corpus builds, training
//! runs, and evaluations with the same inputs and seeds produce identical
//! bytes, independent of thread count.

pub mod dataset;
pub mod distortion;
pub mod imaging;
pub mod model;
pub mod ranking;
pub mod seeding;
