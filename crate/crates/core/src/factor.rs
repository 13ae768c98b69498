//! Preintegrated measurement factors: residuals on the extended-pose group
//! and their analytic Jacobians with respect to the two endpoint states and
//! the bias increment.
//!
//! The residual compares the increment implied by the two states (recovered
//! through [`extract_local_increment`]) with the bias-corrected preintegrated
//! measurement:
//!
//! ```text
//! r = Log( Υ̂(b̄+δb)⁻¹ · Υ_ij )
//! ```
//!
//! Two Jacobian flavors are exposed. The simplified forms drop the
//! group-level left-Jacobian weighting (exact at `r = 0`, the usual operating
//! point of an optimizer); the exact forms retain it through the 9×9 series
//! left Jacobian. The default is the simplified set.

use serde::{Deserialize, Serialize};

use crate::bias::{apply_bias_correction, BiasJacobian, ImuBias};
use crate::earth::{EarthParams, FrameVariant};
use crate::increment::{GlobalIncrement, LocalIncrement};
use crate::lie::{
    log_se23, se23_left_jacobian_inv, AutomorphismF, Matrix9, Matrix9x6, Tangent9, Vector6, Vector9,
};
use crate::propagation::{extract_local_increment, Covariance9, NavState};
use crate::{Error, Result};

/// Which Jacobian approximation to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianForm {
    /// Final simplified forms (left-Jacobian weighting dropped).
    #[default]
    Simplified,
    /// Forms retaining the 9×9 left-Jacobian inverse of the residual.
    Exact,
}

/// Stacked residual `[r_C; r_v; r_r]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual9(pub Vector9);

impl Residual9 {
    pub fn as_vector(&self) -> Vector9 {
        self.0
    }

    pub fn rotation(&self) -> nalgebra::Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> nalgebra::Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn position(&self) -> nalgebra::Vector3<f64> {
        self.0.fixed_rows::<3>(6).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A preintegrated IMU factor between two epochs, ready for a smoothing
/// backend: the bias-linearized increment, its covariance, the bias Jacobian,
/// and the global increment of the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreintegrationFactor {
    pub variant: FrameVariant,
    pub t_start: f64,
    pub t_end: f64,
    /// Preintegrated increment at the linearization bias.
    pub upsilon: LocalIncrement,
    /// Global increment over the window.
    pub gamma: GlobalIncrement,
    /// Covariance of the increment error (side-tagged).
    pub sigma: Covariance9,
    /// Jacobian of the increment with respect to the biases.
    pub bias_jacobian: BiasJacobian,
    /// Linearization bias.
    pub bias_ref: ImuBias,
}

impl PreintegrationFactor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        variant: FrameVariant,
        t_start: f64,
        t_end: f64,
        upsilon: LocalIncrement,
        gamma: GlobalIncrement,
        sigma: Covariance9,
        bias_jacobian: BiasJacobian,
        bias_ref: ImuBias,
    ) -> Result<Self> {
        if gamma.variant != variant {
            return Err(Error::VariantMismatch {
                expected: variant,
                found: gamma.variant,
            });
        }
        let span = t_end - t_start;
        if (span - upsilon.dt).abs() > 1e-9 {
            return Err(Error::IntervalMismatch {
                left: span,
                right: upsilon.dt,
            });
        }
        if (gamma.dt - upsilon.dt).abs() > 1e-9 {
            return Err(Error::IntervalMismatch {
                left: gamma.dt,
                right: upsilon.dt,
            });
        }
        Ok(Self {
            variant,
            t_start,
            t_end,
            upsilon,
            gamma,
            sigma,
            bias_jacobian,
            bias_ref,
        })
    }

    /// The preintegrated increment corrected to `b̄ + δb` first order.
    pub fn corrected_upsilon(&self, delta_b: &Vector6) -> LocalIncrement {
        apply_bias_correction(&self.upsilon, &self.bias_jacobian, delta_b)
    }

    /// The increment implied by the two endpoint states.
    pub fn measured_upsilon(
        &self,
        params: &EarthParams,
        start: &NavState,
        end: &NavState,
    ) -> Result<LocalIncrement> {
        if start.variant != self.variant {
            return Err(Error::VariantMismatch {
                expected: self.variant,
                found: start.variant,
            });
        }
        extract_local_increment(params, start, end, &self.gamma)
    }

    /// Residual `Log(Υ̂(b̂)⁻¹ · Υ_ij)`.
    pub fn residual(
        &self,
        params: &EarthParams,
        start: &NavState,
        end: &NavState,
        delta_b: &Vector6,
    ) -> Result<Residual9> {
        let implied = self.measured_upsilon(params, start, end)?;
        let corrected = self.corrected_upsilon(delta_b);
        let err = corrected.as_pose().inverse().compose(&implied.as_pose());
        Ok(Residual9(log_se23(&err)?.as_vector()))
    }

    /// Jacobian of the residual with respect to a right perturbation of the
    /// start state: `−J_{−r}⁻¹ · Ad(Υ_ij⁻¹) · F_Δt`, with the left-Jacobian
    /// factor dropped in the simplified form.
    pub fn jacobian_wrt_start(
        &self,
        params: &EarthParams,
        start: &NavState,
        end: &NavState,
        delta_b: &Vector6,
        form: JacobianForm,
    ) -> Result<Matrix9> {
        let implied = self.measured_upsilon(params, start, end)?;
        let core =
            implied.as_pose().inverse().adjoint() * AutomorphismF::new(self.gamma.dt).matrix();
        match form {
            JacobianForm::Simplified => Ok(-core),
            JacobianForm::Exact => {
                let r = self.residual(params, start, end, delta_b)?;
                let neg_r = Tangent9::from_vector(&(-r.as_vector()));
                Ok(-(se23_left_jacobian_inv(&neg_r) * core))
            }
        }
    }

    /// Jacobian of the residual with respect to a right perturbation of the
    /// end state: identity in the simplified form, `J_{−r}⁻¹` exactly.
    pub fn jacobian_wrt_end(
        &self,
        params: &EarthParams,
        start: &NavState,
        end: &NavState,
        delta_b: &Vector6,
        form: JacobianForm,
    ) -> Result<Matrix9> {
        match form {
            JacobianForm::Simplified => Ok(Matrix9::identity()),
            JacobianForm::Exact => {
                let r = self.residual(params, start, end, delta_b)?;
                let neg_r = Tangent9::from_vector(&(-r.as_vector()));
                Ok(se23_left_jacobian_inv(&neg_r))
            }
        }
    }

    /// Jacobian of the residual with respect to the bias increment:
    /// `−J_r⁻¹ · J_bias`, simplified to `−J_bias`.
    pub fn jacobian_wrt_bias(
        &self,
        params: &EarthParams,
        start: &NavState,
        end: &NavState,
        delta_b: &Vector6,
        form: JacobianForm,
    ) -> Result<Matrix9x6> {
        match form {
            JacobianForm::Simplified => Ok(-self.bias_jacobian.matrix),
            JacobianForm::Exact => {
                let r = self.residual(params, start, end, delta_b)?;
                let r_tangent = Tangent9::from_vector(&r.as_vector());
                Ok(-(se23_left_jacobian_inv(&r_tangent) * self.bias_jacobian.matrix))
            }
        }
    }

    /// Serializes the factor as a JSON record. Floats are written in
    /// shortest-roundtrip decimal form, so a parse gives back the exact bits.
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
