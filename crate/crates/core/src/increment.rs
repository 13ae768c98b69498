//! Global and local increments of the exact discrete state decomposition.
//!
//! Over an interval the flow of the frame kinematics factors into a global
//! increment (earth rotation and gravitation only), the splicing automorphism,
//! and a local increment built purely from IMU measurements:
//!
//! ```text
//! X_j = Γ_ij · Φ_ij(X_i) · Υ_ij
//! ```
//!
//! The global increment has an exact closed form when the frame rate and
//! gravitation are constant over the step: in the earth-fixed frame they are,
//! so the form is exact; in the local-level frame they drift slowly and are
//! frozen at the interval start (a switched linear system).
//!
//! Three local-increment schemes are provided, ordered by fidelity:
//! constant-global-acceleration, zero-order hold on body-frame measurements,
//! and the two-sample rotation/sculling compensated form for coning motion.
//! A local increment never touches gravity or earth rate; it consumes only
//! the IMU sample.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bias::ImuBias;
use crate::earth::{FrameVariant, KinematicContext};
use crate::lie::{gamma, so3_exp, ExtendedPose, GammaOrder};
use crate::{Error, Result};

/// Local-increment integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Rotated acceleration held constant over the step.
    ConstantGlobalAccel,
    /// Body-frame rate and specific force held constant over the step
    /// (exact for truly constant inputs).
    ZeroOrderHoldBody,
    /// Two-sample coning and sculling compensation from half-interval
    /// sub-increments.
    TwoSampleCompensated,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::ConstantGlobalAccel,
        SchemeKind::ZeroOrderHoldBody,
        SchemeKind::TwoSampleCompensated,
    ];

    fn fidelity_rank(self) -> u8 {
        match self {
            SchemeKind::ConstantGlobalAccel => 0,
            SchemeKind::ZeroOrderHoldBody => 1,
            SchemeKind::TwoSampleCompensated => 2,
        }
    }

    /// The coarser of two schemes; composed windows are tagged with it.
    pub fn coarsest(a: SchemeKind, b: SchemeKind) -> SchemeKind {
        if a.fidelity_rank() <= b.fidelity_rank() {
            a
        } else {
            b
        }
    }
}

/// Whether a sample stores rates or integrated increments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementForm {
    /// `gyro` in rad/s, `accel` in m/s².
    Rates,
    /// `gyro` in rad, `accel` in m/s (already integrated over `dt`).
    Increments,
}

/// Half-interval sub-increments for the two-sample scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubIncrements {
    pub angle_first: Vector3<f64>,
    pub angle_second: Vector3<f64>,
    pub velocity_first: Vector3<f64>,
    pub velocity_second: Vector3<f64>,
}

/// One IMU sampling interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    /// Interval length (s), strictly positive.
    pub dt: f64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
    pub form: MeasurementForm,
    /// Present when the producer exposes half-interval data.
    pub sub: Option<SubIncrements>,
}

impl ImuSample {
    pub fn from_rates(dt: f64, gyro: Vector3<f64>, accel: Vector3<f64>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::NonPositiveDt(dt));
        }
        Ok(Self {
            dt,
            gyro,
            accel,
            form: MeasurementForm::Rates,
            sub: None,
        })
    }

    pub fn from_increments(dt: f64, angle: Vector3<f64>, velocity: Vector3<f64>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::NonPositiveDt(dt));
        }
        Ok(Self {
            dt,
            gyro: angle,
            accel: velocity,
            form: MeasurementForm::Increments,
            sub: None,
        })
    }

    /// Attaches half-interval sub-increments, checking that they add up to
    /// the full-interval increments.
    pub fn with_sub_increments(mut self, sub: SubIncrements) -> Result<Self> {
        let angle_gap = (sub.angle_first + sub.angle_second - self.angle_increment()).norm();
        let vel_gap = (sub.velocity_first + sub.velocity_second - self.velocity_increment()).norm();
        let gap = angle_gap.max(vel_gap);
        if gap > 1e-12 {
            return Err(Error::InconsistentSubIncrements(gap));
        }
        self.sub = Some(sub);
        Ok(self)
    }

    /// Integrated angle over the interval (rad).
    pub fn angle_increment(&self) -> Vector3<f64> {
        match self.form {
            MeasurementForm::Rates => self.gyro * self.dt,
            MeasurementForm::Increments => self.gyro,
        }
    }

    /// Integrated specific force over the interval (m/s).
    pub fn velocity_increment(&self) -> Vector3<f64> {
        match self.form {
            MeasurementForm::Rates => self.accel * self.dt,
            MeasurementForm::Increments => self.accel,
        }
    }

    /// Average rates over the interval.
    pub fn rates(&self) -> (Vector3<f64>, Vector3<f64>) {
        (
            self.angle_increment() / self.dt,
            self.velocity_increment() / self.dt,
        )
    }

    /// The same sample with a constant bias removed (rates lose the bias,
    /// increments lose bias·dt, sub-increments bias·dt/2 each).
    pub fn corrected(&self, bias: &ImuBias) -> ImuSample {
        let mut out = *self;
        match self.form {
            MeasurementForm::Rates => {
                out.gyro -= bias.gyro;
                out.accel -= bias.accel;
            }
            MeasurementForm::Increments => {
                out.gyro -= bias.gyro * self.dt;
                out.accel -= bias.accel * self.dt;
            }
        }
        if let Some(sub) = &self.sub {
            out.sub = Some(SubIncrements {
                angle_first: sub.angle_first - bias.gyro * (self.dt * 0.5),
                angle_second: sub.angle_second - bias.gyro * (self.dt * 0.5),
                velocity_first: sub.velocity_first - bias.accel * (self.dt * 0.5),
                velocity_second: sub.velocity_second - bias.accel * (self.dt * 0.5),
            });
        }
        out
    }
}

/// IMU-only portion of the discrete flow over one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalIncrement {
    pub rot: Matrix3<f64>,
    pub vel: Vector3<f64>,
    pub pos: Vector3<f64>,
    pub dt: f64,
    pub scheme: SchemeKind,
}

impl LocalIncrement {
    pub fn identity(scheme: SchemeKind) -> Self {
        Self {
            rot: Matrix3::identity(),
            vel: Vector3::zeros(),
            pos: Vector3::zeros(),
            dt: 0.0,
            scheme,
        }
    }

    pub fn as_pose(&self) -> ExtendedPose {
        ExtendedPose::new(self.rot, self.vel, self.pos)
    }

    pub fn from_pose(pose: &ExtendedPose, dt: f64, scheme: SchemeKind) -> Self {
        Self {
            rot: pose.rot,
            vel: pose.vel,
            pos: pose.pos,
            dt,
            scheme,
        }
    }
}

/// Earth-rotation/gravitation portion of the discrete flow over one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalIncrement {
    pub rot: Matrix3<f64>,
    pub vel: Vector3<f64>,
    pub pos: Vector3<f64>,
    pub dt: f64,
    pub variant: FrameVariant,
}

impl GlobalIncrement {
    pub fn identity(variant: FrameVariant) -> Self {
        Self {
            rot: Matrix3::identity(),
            vel: Vector3::zeros(),
            pos: Vector3::zeros(),
            dt: 0.0,
            variant,
        }
    }

    pub fn as_pose(&self) -> ExtendedPose {
        ExtendedPose::new(self.rot, self.vel, self.pos)
    }
}

/// Closed-form global increment over `dt` with the context's frame rate and
/// gravitation held constant:
///
/// ```text
/// Γᶜ = Exp(−ω dt)
/// Γᵛ = ∫₀^dt Exp(−ωu) G du        = Γ₁(−ω dt)·dt·G
/// Γʳ = ∫₀^dt u·Exp(−ωu) G du      = (Γ₁ − Γ₂)(−ω dt)·dt²·G
/// ```
///
/// The position kernel `u·Exp(−ωu)` expands with coefficients
/// `1/(n!(n+2)) = 1/(n+1)! − 1/(n+2)!`, hence the Γ₁−Γ₂ combination (the ω=0
/// limit is the familiar ½·G·dt², and the first-order term reproduces the
/// ⅓·ω×G·dt³ free-fall deflection).
///
/// Exact for the earth-fixed variants (constant coefficients); first-order
/// switched-linear step for the local-level variants.
pub fn global_step(ctx: &KinematicContext, dt: f64) -> GlobalIncrement {
    let minus_w = -(ctx.omega_frame * dt);
    GlobalIncrement {
        rot: so3_exp(&minus_w),
        vel: gamma(GammaOrder::One, &minus_w) * ctx.gravitation * dt,
        pos: (gamma(GammaOrder::One, &minus_w) - gamma(GammaOrder::Two, &minus_w))
            * ctx.gravitation
            * (dt * dt),
        dt,
        variant: ctx.variant,
    }
}

/// [`global_step`] for the earth-fixed family.
pub fn global_step_ecef(ctx: &KinematicContext, dt: f64) -> GlobalIncrement {
    debug_assert!(!ctx.variant.is_local_level());
    global_step(ctx, dt)
}

/// [`global_step`] for the local-level family.
pub fn global_step_ned(ctx: &KinematicContext, dt: f64) -> GlobalIncrement {
    debug_assert!(ctx.variant.is_local_level());
    global_step(ctx, dt)
}

/// Composes two contiguous global increments: the later step wraps the
/// earlier accumulation through the splicing automorphism,
/// `Γ_ij = Γ_step · Φ_step(Γ_acc)`.
pub fn compose_global(
    later: &GlobalIncrement,
    earlier: &GlobalIncrement,
) -> Result<GlobalIncrement> {
    if later.variant != earlier.variant {
        return Err(Error::VariantMismatch {
            expected: earlier.variant,
            found: later.variant,
        });
    }
    Ok(GlobalIncrement {
        rot: later.rot * earlier.rot,
        vel: later.rot * earlier.vel + later.vel,
        pos: later.rot * (earlier.pos + earlier.vel * later.dt) + later.pos,
        dt: earlier.dt + later.dt,
        variant: later.variant,
    })
}

/// Velocity-corrected global increment for the untransformed variants: the
/// velocity slot loses the earth-rotation coupling `ω_ie×r` evaluated at the
/// supplied position. Only meaningful together with the vector-form discrete
/// solution (the full propagation also shifts the incoming velocity).
pub fn gamma_prime(
    gamma: &GlobalIncrement,
    ctx: &KinematicContext,
    position: &Vector3<f64>,
) -> Result<GlobalIncrement> {
    if gamma.variant != ctx.variant {
        return Err(Error::VariantMismatch {
            expected: ctx.variant,
            found: gamma.variant,
        });
    }
    if gamma.variant.is_transformed() {
        return Err(Error::VariantMismatch {
            expected: gamma.variant.toggled(),
            found: gamma.variant,
        });
    }
    let mut out = *gamma;
    out.vel -= ctx.omega_ie.cross(position);
    Ok(out)
}

/// One-step local increment under the requested scheme.
pub fn local_step(scheme: SchemeKind, sample: &ImuSample) -> Result<LocalIncrement> {
    if sample.dt <= 0.0 {
        return Err(Error::NonPositiveDt(sample.dt));
    }
    let dt = sample.dt;
    let dtheta = sample.angle_increment();
    let dvel = sample.velocity_increment();
    let inc = match scheme {
        SchemeKind::ConstantGlobalAccel => LocalIncrement {
            rot: so3_exp(&dtheta),
            vel: dvel,
            pos: dvel * (0.5 * dt),
            dt,
            scheme,
        },
        SchemeKind::ZeroOrderHoldBody => LocalIncrement {
            rot: so3_exp(&dtheta),
            vel: gamma(GammaOrder::One, &dtheta) * dvel,
            pos: gamma(GammaOrder::Two, &dtheta) * dvel * dt,
            dt,
            scheme,
        },
        SchemeKind::TwoSampleCompensated => {
            let sub = sample.sub.as_ref().ok_or(Error::MissingSubIncrements)?;
            // coning-corrected rotation vector
            let phi = (sub.angle_first + sub.angle_second)
                + sub.angle_first.cross(&sub.angle_second) * (2.0 / 3.0);
            // sculling-corrected velocity increment
            let dv = dvel
                + dtheta.cross(&dvel) * 0.5
                + (sub.angle_first.cross(&sub.velocity_second)
                    + sub.velocity_first.cross(&sub.angle_second))
                    * (2.0 / 3.0);
            LocalIncrement {
                rot: so3_exp(&phi),
                vel: dv,
                pos: dv * (0.5 * dt),
                dt,
                scheme,
            }
        }
    };
    Ok(inc)
}

/// Composes two contiguous local increments: the earlier accumulation passes
/// through the splicing automorphism of the later step and multiplies from
/// the left, `Υ_ij = Φ_step(Υ_acc) · Υ_step`.
///
/// Mixing schemes is allowed; the result is tagged with the coarser one.
pub fn compose_local(earlier: &LocalIncrement, later: &LocalIncrement) -> LocalIncrement {
    LocalIncrement {
        rot: earlier.rot * later.rot,
        vel: earlier.rot * later.vel + earlier.vel,
        pos: earlier.rot * later.pos + earlier.pos + earlier.vel * later.dt,
        dt: earlier.dt + later.dt,
        scheme: SchemeKind::coarsest(earlier.scheme, later.scheme),
    }
}
