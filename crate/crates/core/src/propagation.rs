//! Discrete full-state propagation and covariance propagation.
//!
//! State propagation applies `T_j = Γ_ij · Φ_ij(T_i) · Υ_ij` blockwise. The
//! transformed variants use the recursion directly; the untransformed ones are
//! handled by the exact velocity-shift conjugation: shift into the auxiliary
//! velocity, propagate, shift back with the earth rate at the new position.
//!
//! Covariance propagates in exponential coordinates on either side of the
//! estimate. The right (body-local) transition matrix couples through the
//! measured specific force; the left (common-frame) one is assembled from the
//! global increment alone and is therefore independent of the IMU inputs —
//! the noise injection picks up the state adjoint instead.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bias::ImuBias;
use crate::earth::{
    kinematic_context, EarthParams, FrameVariant, GeodeticPosition, KinematicContext,
};
use crate::increment::{GlobalIncrement, ImuSample, LocalIncrement, SchemeKind};
use crate::lie::{
    gamma_any, skew, so3_exp, AutomorphismF, ExtendedPose, Matrix6, Matrix9, Matrix9x6,
};
use crate::{Error, Result};

/// Which side of the estimate the exponential error lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationSide {
    /// `T = T̂ · Exp(ξ)` — error resolved in the body-local frame.
    RightLocal,
    /// `T = Exp(ξ) · T̂` — error resolved in the common (resolving) frame.
    LeftCommonFrame,
}

/// Full navigation state: an extended pose in one frame variant, its epoch,
/// the bias reference used for preintegration, and the geodetic anchor that
/// local-level variants use to evaluate rates and gravity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub pose: ExtendedPose,
    pub variant: FrameVariant,
    /// Time of validity (s).
    pub epoch: f64,
    /// Reference bias held constant over preintegration windows.
    pub bias: ImuBias,
    /// Geodetic anchor consistent with the pose's position slot.
    pub anchor: GeodeticPosition,
}

impl NavState {
    /// The pose with its velocity slot in the auxiliary (transformed)
    /// convention. Identity for transformed variants.
    pub fn auxiliary_pose(&self, params: &EarthParams) -> ExtendedPose {
        if self.variant.is_transformed() {
            self.pose
        } else {
            let omega_ie = omega_ie_in_frame(params, self.variant, &self.anchor);
            ExtendedPose::new(
                self.pose.rot,
                self.pose.vel + omega_ie.cross(&self.pose.pos),
                self.pose.pos,
            )
        }
    }

    /// Kinematic context evaluated at this state.
    pub fn context(&self, params: &EarthParams) -> Result<KinematicContext> {
        kinematic_context(
            params,
            self.variant,
            &self.anchor,
            &self.pose.vel,
            &self.pose.pos,
        )
    }
}

fn omega_ie_in_frame(
    params: &EarthParams,
    variant: FrameVariant,
    anchor: &GeodeticPosition,
) -> Vector3<f64> {
    if variant.is_local_level() {
        params.earth_rate_n(anchor)
    } else {
        params.omega_ie_ecef()
    }
}

fn ground_velocity(params: &EarthParams, state: &NavState) -> Vector3<f64> {
    if state.variant.is_transformed() {
        let omega_ie = omega_ie_in_frame(params, state.variant, &state.anchor);
        state.pose.vel - omega_ie.cross(&state.pose.pos)
    } else {
        state.pose.vel
    }
}

/// Earth-to-local rotation of the ODE-propagated frame of one local-level
/// step: the local axes at the step start, rotated by the frozen transport
/// rate over the interval.
///
/// The step's components come out expressed in this frame. It agrees with the
/// exactly north-aligned frame at the new anchor up to the freezing error of
/// the transport rate; the small re-alignment rotation between the two (the
/// "snap") is applied by [`propagate_state`] and undone by
/// [`extract_local_increment`], so the anchor alone always determines the
/// axes and the group recursion stays exactly invertible.
///
/// Deriving the anchor from this frame is well posed. Solving the anchor
/// directly from "a position expressed in its own local axes" is not: that
/// fixed point has unit derivative (a near-vertical geocentric vector barely
/// constrains its frame) and lets per-step errors accumulate secularly.
fn propagated_local_frame(
    params: &EarthParams,
    anchor: &GeodeticPosition,
    v_ground: &Vector3<f64>,
    dt: f64,
) -> Result<Matrix3<f64>> {
    let omega_en = params.transport_rate_n(anchor, v_ground)?;
    Ok(so3_exp(&(-omega_en * dt)) * params.ecef_to_ned_rotation(anchor))
}

/// Propagates the state through one window:
/// `C_j = Γᶜ C_i Υᶜ`, `v_j = Γᶜ(C_i Υᵛ + v_i) + Γᵛ`,
/// `r_j = Γᶜ(C_i Υʳ + r_i + Δt v_i) + Γʳ`.
///
/// The global and local increments must share the state's variant and cover
/// the same interval (within 1e-9 s). For untransformed variants the velocity
/// is shifted into the auxiliary convention on entry and back on exit.
pub fn propagate_state(
    params: &EarthParams,
    state: &NavState,
    gamma: &GlobalIncrement,
    upsilon: &LocalIncrement,
) -> Result<NavState> {
    if gamma.variant != state.variant {
        return Err(Error::VariantMismatch {
            expected: state.variant,
            found: gamma.variant,
        });
    }
    if (gamma.dt - upsilon.dt).abs() > 1e-9 {
        return Err(Error::IntervalMismatch {
            left: gamma.dt,
            right: upsilon.dt,
        });
    }
    let dt = gamma.dt;
    let entry = state.auxiliary_pose(params);

    let mut rot_j = gamma.rot * entry.rot * upsilon.rot;
    let mut vel_j = gamma.rot * (entry.rot * upsilon.vel + entry.vel) + gamma.vel;
    let mut pos_j = gamma.rot * (entry.rot * upsilon.pos + entry.pos + entry.vel * dt) + gamma.pos;

    let anchor_j = if state.variant.is_local_level() {
        let v_ground = ground_velocity(params, state);
        let frame = propagated_local_frame(params, &state.anchor, &v_ground, dt)?;
        let anchor_j = params.ecef_to_geodetic(&(frame.transpose() * pos_j));
        let snap = params.ecef_to_ned_rotation(&anchor_j) * frame.transpose();
        rot_j = snap * rot_j;
        vel_j = snap * vel_j;
        pos_j = snap * pos_j;
        anchor_j
    } else {
        params.ecef_to_geodetic(&pos_j)
    };

    let vel_out = if state.variant.is_transformed() {
        vel_j
    } else {
        let omega_ie_j = omega_ie_in_frame(params, state.variant, &anchor_j);
        vel_j - omega_ie_j.cross(&pos_j)
    };

    Ok(NavState {
        pose: ExtendedPose::new(rot_j, vel_out, pos_j),
        variant: state.variant,
        epoch: state.epoch + dt,
        bias: state.bias,
        anchor: anchor_j,
    })
}

/// Recovers the local increment that maps `T_i` to `T_j` under `Γ_ij`,
/// inverting the propagation blockwise:
/// `Υᶜ = (Γᶜ C_i)ᵀ C_j`, `Υᵛ = C_iᵀ((Γᶜ)ᵀ(v_j − Γᵛ) − v_i)`,
/// `Υʳ = C_iᵀ((Γᶜ)ᵀ(r_j − Γʳ) − (r_i + Δt v_i))`.
///
/// The returned increment carries a nominal zero-order-hold tag; extraction
/// does not know which scheme produced the motion.
pub fn extract_local_increment(
    params: &EarthParams,
    start: &NavState,
    end: &NavState,
    gamma: &GlobalIncrement,
) -> Result<LocalIncrement> {
    if start.variant != end.variant {
        return Err(Error::VariantMismatch {
            expected: start.variant,
            found: end.variant,
        });
    }
    if gamma.variant != start.variant {
        return Err(Error::VariantMismatch {
            expected: start.variant,
            found: gamma.variant,
        });
    }
    let span = end.epoch - start.epoch;
    if (span - gamma.dt).abs() > 1e-9 {
        return Err(Error::IntervalMismatch {
            left: span,
            right: gamma.dt,
        });
    }
    let dt = gamma.dt;
    let a = start.auxiliary_pose(params);
    let mut b = end.auxiliary_pose(params);
    if start.variant.is_local_level() {
        // undo the north-alignment snap of the window so the inversion sees
        // the components in the frame the group recursion produced them in
        let v_ground = ground_velocity(params, start);
        let frame = propagated_local_frame(params, &start.anchor, &v_ground, dt)?;
        let snap_back = frame * params.ecef_to_ned_rotation(&end.anchor).transpose();
        b = ExtendedPose::new(snap_back * b.rot, snap_back * b.vel, snap_back * b.pos);
    }
    let gct = gamma.rot.transpose();
    let cit = a.rot.transpose();
    Ok(LocalIncrement {
        rot: cit * gct * b.rot,
        vel: cit * (gct * (b.vel - gamma.vel) - a.vel),
        pos: cit * (gct * (b.pos - gamma.pos) - (a.pos + a.vel * dt)),
        dt,
        scheme: SchemeKind::ZeroOrderHoldBody,
    })
}

/// White-noise densities of the IMU channels plus the bias instability
/// models used by measurement synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Gyro white-noise PSD (rad²/s).
    pub gyro_psd: f64,
    /// Accelerometer white-noise PSD (m²/s³).
    pub accel_psd: f64,
    /// Gyro bias instability model.
    pub gyro_bias: BiasModel,
    /// Accelerometer bias instability model.
    pub accel_bias: BiasModel,
}

/// Bias instability model of one sensor triad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum BiasModel {
    /// Bias frozen at its initial value.
    None,
    /// First-order Gauss-Markov process with correlation time `tau` (s) and
    /// stationary standard deviation `sigma`.
    GaussMarkov { tau: f64, sigma: f64 },
    /// Random walk with per-root-second growth `sigma`.
    RandomWalk { sigma: f64 },
}

impl NoiseParams {
    pub fn new(gyro_psd: f64, accel_psd: f64) -> Self {
        Self {
            gyro_psd,
            accel_psd,
            gyro_bias: BiasModel::None,
            accel_bias: BiasModel::None,
        }
    }

    /// Discrete per-step input noise covariance,
    /// `Q = diag(σ_g²/dt · I, σ_a²/dt · I)` for rate noise over `dt`.
    pub fn q_matrix(&self, dt: f64) -> Matrix6 {
        let mut q = Matrix6::zeros();
        q.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Matrix3::identity() * (self.gyro_psd / dt)));
        q.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Matrix3::identity() * (self.accel_psd / dt)));
        q
    }
}

/// Side-tagged 9×9 covariance in exponential coordinates, ordered
/// (attitude, velocity, position).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariance9 {
    matrix: Matrix9,
    side: PerturbationSide,
}

impl Covariance9 {
    /// Half-width of the accepted asymmetry band.
    pub const SYMMETRY_TOL: f64 = 1e-10;
    /// Eigenvalues above this (negative) floor are clipped to zero.
    pub const EIGEN_FLOOR: f64 = -1e-12;

    /// Validates symmetry and positive semidefiniteness, symmetrizes, and
    /// clips round-off-negative eigenvalues to zero.
    pub fn new(matrix: Matrix9, side: PerturbationSide) -> Result<Self> {
        let asym = (matrix - matrix.transpose()).amax();
        if asym > Self::SYMMETRY_TOL * matrix.amax().max(1.0) {
            return Err(Error::NotPositiveSemidefinite(asym));
        }
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < Self::EIGEN_FLOOR * eig.eigenvalues.max().max(1.0) {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        let out = if min_eig < 0.0 {
            let mut vals = eig.eigenvalues;
            for v in vals.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let rebuilt =
                eig.eigenvectors * Matrix9::from_diagonal(&vals) * eig.eigenvectors.transpose();
            (rebuilt + rebuilt.transpose()) * 0.5
        } else {
            sym
        };
        Ok(Self { matrix: out, side })
    }

    pub fn zero(side: PerturbationSide) -> Self {
        Self {
            matrix: Matrix9::zeros(),
            side,
        }
    }

    pub fn matrix(&self) -> &Matrix9 {
        &self.matrix
    }

    pub fn side(&self) -> PerturbationSide {
        self.side
    }

    /// Re-expresses the covariance on the other side through the state
    /// adjoint: `Σ_left = Ad_T Σ_right Ad_Tᵀ` and conversely.
    pub fn convert_side(&self, to: PerturbationSide, pose: &ExtendedPose) -> Result<Covariance9> {
        if to == self.side {
            return Ok(*self);
        }
        let ad = match to {
            PerturbationSide::LeftCommonFrame => pose.adjoint(),
            PerturbationSide::RightLocal => pose.inverse().adjoint(),
        };
        Covariance9::new(ad * self.matrix * ad.transpose(), to)
    }
}

/// Noise Jacobian of a single zero-order-hold step: maps the stacked
/// rate-noise vector `[η_ω; η_a]` to the 9-dimensional increment perturbation.
/// Built from the Γ series at the bias-corrected measurements; its top-right
/// block is exactly zero (gyro noise alone perturbs attitude).
pub fn noise_jacobian_g(
    upsilon_step: &LocalIncrement,
    sample: &ImuSample,
    bias: &ImuBias,
) -> Matrix9x6 {
    debug_assert!((upsilon_step.dt - sample.dt).abs() <= 1e-9);
    let dt = sample.dt;
    let corrected = sample.corrected(bias);
    let dtheta = corrected.angle_increment();
    let force = corrected.velocity_increment() / dt;

    let g0_inv = so3_exp(&dtheta).transpose();
    let g1 = gamma_any(1, &dtheta);
    let g2 = gamma_any(2, &dtheta);
    let g2_neg = gamma_any(2, &(-dtheta));
    let g3_neg = gamma_any(3, &(-dtheta));
    let fx = skew(&force);

    let mut g = Matrix9x6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(-(g0_inv * g1) * dt));
    g.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(g0_inv * g1 * fx * g2_neg * (dt * dt)));
    g.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(-(g0_inv * g1) * dt));
    g.fixed_view_mut::<3, 3>(6, 0)
        .copy_from(&(g0_inv * g2 * fx * g3_neg * (dt * dt * dt)));
    g.fixed_view_mut::<3, 3>(6, 3)
        .copy_from(&(-(g0_inv * g2) * (dt * dt)));
    g
}

/// Right-perturbation transition matrix of one step,
/// `A = Ad(Υ̂⁻¹) · F(dt)`. Lower block-triangular with unit determinant.
pub fn transition_a_right(upsilon_step: &LocalIncrement) -> Matrix9 {
    upsilon_step.as_pose().inverse().adjoint() * AutomorphismF::new(upsilon_step.dt).matrix()
}

/// Left-perturbation transition matrix of one step,
/// `A = Ad(Γ) · F(dt)`. Depends only on earth rate and gravitation — no
/// accelerometer or gyroscope term enters.
pub fn transition_a_left(gamma_step: &GlobalIncrement) -> Matrix9 {
    gamma_step.as_pose().adjoint() * AutomorphismF::new(gamma_step.dt).matrix()
}

/// One covariance step. Right side: `Σ' = AΣAᵀ + GQGᵀ`. Left side:
/// `Σ' = AΣAᵀ + Ad_T̂' G Q Gᵀ Ad_T̂'ᵀ`, which needs the predicted next pose.
pub fn propagate_cov(
    side: PerturbationSide,
    sigma: &Covariance9,
    a: &Matrix9,
    g: &Matrix9x6,
    q: &Matrix6,
    next_pose: Option<&ExtendedPose>,
) -> Result<Covariance9> {
    if sigma.side() != side {
        return Err(Error::SideMismatch {
            expected: side,
            found: sigma.side(),
        });
    }
    let q_sym = (q - q.transpose()).amax();
    if q_sym > 1e-12 * q.amax().max(1.0) {
        return Err(Error::NotPositiveSemidefinite(q_sym));
    }
    let q_eig_min = q.symmetric_eigen().eigenvalues.min();
    if q_eig_min < -1e-12 * q.amax().max(1.0) {
        return Err(Error::NotPositiveSemidefinite(q_eig_min));
    }
    let noise = match side {
        PerturbationSide::RightLocal => g * q * g.transpose(),
        PerturbationSide::LeftCommonFrame => {
            let pose = next_pose.ok_or_else(|| {
                Error::InvalidSpec("left-side propagation requires the next pose".into())
            })?;
            let wrapped = pose.adjoint() * g;
            wrapped * q * wrapped.transpose()
        }
    };
    Covariance9::new(a * sigma.matrix() * a.transpose() + noise, side)
}

/// Per-step inputs of a batch covariance recursion. For left-side chains the
/// noise Jacobian must already carry the state-adjoint wrapping.
#[derive(Clone, Copy, Debug)]
pub struct CovStep {
    pub a: Matrix9,
    pub g: Matrix9x6,
}

/// Batch covariance over an ordered step list, evaluated in its explicit
/// product form
/// `Σ_j = A_i^{j-1} Σ_i (A_i^{j-1})ᵀ + Σ_k A_{k+1}^{j-1} G_k Q G_kᵀ (A_{k+1}^{j-1})ᵀ`
/// with `A_i^j = A_j···A_i` for `j ≥ i` and the empty product the identity.
/// An empty step list returns the initial covariance unchanged.
pub fn batch_covariance(
    initial: &Covariance9,
    steps: &[CovStep],
    q: &Matrix6,
) -> Result<Covariance9> {
    if steps.is_empty() {
        return Ok(*initial);
    }
    let n = steps.len();
    // suffix[k] = A_{n-1}···A_k, suffix[n] = I
    let mut suffix = vec![Matrix9::identity(); n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] * steps[k].a;
    }
    let mut total = suffix[0] * initial.matrix() * suffix[0].transpose();
    for (k, step) in steps.iter().enumerate() {
        let wrapped = suffix[k + 1] * step.g;
        total += wrapped * q * wrapped.transpose();
    }
    Covariance9::new(total, initial.side())
}
