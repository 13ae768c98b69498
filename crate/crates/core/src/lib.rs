//! Extended-pose preintegration on the matrix Lie group SE₂(3).
//!
//! The navigation state (attitude, velocity, position) is treated as a single
//! group element and its discrete flow is split into three factors: a global
//! increment driven by earth rotation and gravity, a splicing automorphism, and
//! a local increment built purely from IMU measurements. The crate provides
//!
//! * [`lie`] — SO(3)/SE₂(3) machinery: hat/vee, the Γ integral series,
//!   exp/log, adjoints, and the time-indexed splicing automorphism;
//! * [`earth`] — reference-frame kinematics: earth rate, transport rate,
//!   gravity/gravitation conversions, and per-frame kinematic contexts;
//! * [`increment`] — closed-form global increments and the three local
//!   increment (preintegration) schemes, with recursive composition;
//! * [`propagation`] — full-state discrete propagation and right/left
//!   perturbation covariance propagation;
//! * [`bias`] — analytic first-order bias updates with recursive and
//!   closed-form Jacobians;
//! * [`factor`] — preintegrated measurement residuals and their Jacobians;
//! * [`metrics`] — scalar uncertainty criteria and monotonicity checks.
//!
//! All operations are pure functions on immutable values and are safe to call
//! concurrently.

pub mod bias;
pub mod earth;
pub mod factor;
pub mod increment;
pub mod lie;
pub mod metrics;
pub mod propagation;

use crate::earth::FrameVariant;
use crate::propagation::PerturbationSide;

/// Errors raised by the numerics layer.
///
/// Every operation that can reject its input does so through this type;
/// functions documented as total never return it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A 5×5 matrix fed to `vee` is not in the image of the hat map.
    #[error("matrix is not a valid algebra element (pattern defect {defect:.3e})")]
    MalformedAlgebra { defect: f64 },
    /// Rotation logarithm requested within the tolerance band of the π cut.
    #[error("rotation angle {angle:.9} rad is inside the log branch cut band at pi")]
    BranchSingularity { angle: f64 },
    /// Transport rate is undefined at the poles (tan latitude blows up).
    #[error("latitude {lat:.9} rad is too close to a pole for the transport rate")]
    PolarSingularity { lat: f64 },
    /// Two values that must share a frame variant do not.
    #[error("frame variant mismatch: expected {expected:?}, found {found:?}")]
    VariantMismatch {
        expected: FrameVariant,
        found: FrameVariant,
    },
    /// Two values that must cover the same time interval do not.
    #[error("interval mismatch: {left} s vs {right} s")]
    IntervalMismatch { left: f64, right: f64 },
    /// Perturbation sides of two covariances (or a covariance and a routine) differ.
    #[error("perturbation side mismatch: expected {expected:?}, found {found:?}")]
    SideMismatch {
        expected: PerturbationSide,
        found: PerturbationSide,
    },
    /// The two-sample scheme was asked to run without half-interval data.
    #[error("two-sample scheme requires half-interval sub-increments")]
    MissingSubIncrements,
    /// Sampling intervals must be strictly positive.
    #[error("sample duration must be positive (got {0} s)")]
    NonPositiveDt(f64),
    /// Sub-increments do not add up to the full-interval increments.
    #[error("sub-increments disagree with full increments by {0:.3e}")]
    InconsistentSubIncrements(f64),
    /// A matrix required to be symmetric positive semidefinite is not.
    #[error("matrix has eigenvalue {0:.3e} below the PSD tolerance")]
    NotPositiveSemidefinite(f64),
    /// A geodetic position fails its bounds.
    #[error("invalid geodetic position: {0}")]
    InvalidPosition(String),
    /// A malformed specification value (trajectory, sensor, config).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
