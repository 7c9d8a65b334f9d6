//! Parametric distortion simulators and synthetic chart generation.
//!
//! Two distortions are simulated. Lateral chromatic aberration displaces the
//! red and blue channels in opposite directions along an image diagonal,
//! leaving green fixed — the rainbow fringing of a lens whose focal length
//! varies with wavelength. Moire runs an unfiltered bicubic downscale/upscale
//! round trip, so content above the reduced Nyquist rate folds into false
//! low-frequency patterns.
//!
//! Both simulators share one convention: the level parameter (shift in
//! pixels, resize factor) is the ground-truth severity, and a lower level
//! always means less distorted. Level 0 (LCA) and factor 1 (moire) are exact
//! identities.
//!
//! [`generate_pattern`] produces the high-frequency test charts (bars, nets,
//! stars, wedges, rings) that make moire visible at all.

mod lca;
mod moire;
mod patterns;

pub use lca::simulate_lca;
pub use moire::simulate_moire;
pub use patterns::{generate_pattern, sample_pattern_spec, PatternKind, PatternSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::ImageRgb;

/// Errors from the distortion simulators and chart generators.
#[derive(Debug, Error)]
pub enum DistortionError {
    #[error("shift {shift} outside [0, {limit}] for a {width}x{height} image")]
    ShiftTooLarge {
        shift: f64,
        limit: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid pattern spec: {0}")]
    InvalidSpec(String),
    #[error("resize factor {0} out of range (must be finite and >= 1)")]
    FactorOutOfRange(f64),
    #[error("{width}x{height} image too small for factor {factor} (downscaled side would drop below {min} px)")]
    ImageTooSmall {
        width: usize,
        height: usize,
        factor: f64,
        min: usize,
    },
}

/// The two simulated distortion families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    Lca,
    Moire,
}

impl std::fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistortionKind::Lca => write!(f, "lca"),
            DistortionKind::Moire => write!(f, "moire"),
        }
    }
}

/// Diagonal along which LCA displaces the red and blue channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LcaDirection {
    /// Red toward (+s, +s), blue toward (−s, −s).
    #[serde(rename = "main-diagonal")]
    MainDiagonal,
    /// Red toward (+s, −s), blue toward (−s, +s).
    #[serde(rename = "anti-diagonal")]
    AntiDiagonal,
}

/// A concrete distortion instance: which family, and how strong.
///
/// The level (shift magnitude or resize factor) defines the ground-truth
/// severity order: lower level means less distorted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionSpec {
    Lca { shift: f64, direction: LcaDirection },
    Moire { factor: f64 },
}

impl DistortionSpec {
    pub fn kind(&self) -> DistortionKind {
        match self {
            DistortionSpec::Lca { .. } => DistortionKind::Lca,
            DistortionSpec::Moire { .. } => DistortionKind::Moire,
        }
    }

    /// The scalar severity: LCA shift in pixels, or moire resize factor.
    pub fn level(&self) -> f64 {
        match self {
            DistortionSpec::Lca { shift, .. } => *shift,
            DistortionSpec::Moire { factor } => *factor,
        }
    }

    /// The displacement diagonal, for LCA specs.
    pub fn direction(&self) -> Option<LcaDirection> {
        match self {
            DistortionSpec::Lca { direction, .. } => Some(*direction),
            DistortionSpec::Moire { .. } => None,
        }
    }
}

/// Applies `spec` to `img` by dispatching to the matching simulator.
pub fn apply(spec: &DistortionSpec, img: &ImageRgb) -> Result<ImageRgb, DistortionError> {
    match *spec {
        DistortionSpec::Lca { shift, direction } => simulate_lca(img, shift, direction),
        DistortionSpec::Moire { factor } => simulate_moire(img, factor),
    }
}
