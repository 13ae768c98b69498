//! First-order analytic bias updates for preintegrated local increments.
//!
//! Biases are held constant over a preintegration window. When the estimate
//! of that constant moves by `δb`, the window does not need to be
//! re-integrated: the increment updates as `Υ̂(b̂) = Ῡ(b̄)·Exp(J·δb)` with a
//! 9×6 Jacobian `J` that is available either recursively (fold `J ← A·J + G`
//! over the per-step transition and noise matrices) or in closed form as
//! explicit sums over the window. The two agree to round-off; both are kept
//! because they make an effective cross-check of each other and of the
//! per-step matrices they are built from.
//!
//! `J` is computed under the zero-order-hold scheme, the one with closed-form
//! per-step increments; reusing it for the other schemes is a documented
//! approximation of the same order as the schemes' own differences.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::increment::{ImuSample, LocalIncrement};
use crate::lie::{exp_se23, gamma_any, skew, so3_exp, Matrix9, Matrix9x6, Tangent9, Vector6};

/// Constant gyro/accelerometer bias over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuBias {
    /// Gyro bias (rad/s).
    pub gyro: Vector3<f64>,
    /// Accelerometer bias (m/s²).
    pub accel: Vector3<f64>,
}

impl ImuBias {
    pub fn new(gyro: Vector3<f64>, accel: Vector3<f64>) -> Self {
        Self { gyro, accel }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// Stacked `[gyro; accel]` vector.
    pub fn as_vector(&self) -> Vector6 {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.gyro);
        v.fixed_rows_mut::<3>(3).copy_from(&self.accel);
        v
    }

    pub fn from_vector(v: &Vector6) -> Self {
        Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        )
    }

    pub fn shifted(&self, delta: &Vector6) -> Self {
        Self::from_vector(&(self.as_vector() + delta))
    }
}

/// 9×6 Jacobian of a preintegrated increment with respect to the biases,
/// rows ordered (attitude, velocity, position), columns (gyro, accel).
/// The attitude/accel block is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasJacobian {
    pub matrix: Matrix9x6,
    /// Bias the window was linearized at.
    pub reference: ImuBias,
}

impl BiasJacobian {
    /// Window-start value: the zero matrix.
    pub fn zero(reference: ImuBias) -> Self {
        Self {
            matrix: Matrix9x6::zeros(),
            reference,
        }
    }
}

/// One step of the recursive Jacobian: `J ← A·J + G` with the step's
/// right-perturbation transition matrix and noise Jacobian.
pub fn bias_jacobian_recursive(
    prev: &BiasJacobian,
    a_step: &Matrix9,
    g_step: &Matrix9x6,
) -> BiasJacobian {
    BiasJacobian {
        matrix: a_step * prev.matrix + g_step,
        reference: prev.reference,
    }
}

/// Closed-form Jacobian over a full sample window, evaluated as the explicit
/// sums over bias-corrected measurements. An empty window yields the zero
/// Jacobian.
///
/// Writing `P_k` for the accumulated rotation over the first `k` steps, every
/// suffix rotation in the sums factors as `P_jᵀ P_k`, so the whole evaluation
/// runs in one pass with running prefix sums.
pub fn bias_jacobian_closed_form(samples: &[ImuSample], b_bar: &ImuBias) -> BiasJacobian {
    let mut p = Matrix3::<f64>::identity(); // P_k
    let mut sum_att = Matrix3::<f64>::zeros(); // Σ P_{l+1} Γ₁(−θ_l) Δt
    let mut sum_vel_w = Matrix3::<f64>::zeros(); // Σ P_l · (velocity gyro term)
    let mut sum_vel_a = Matrix3::<f64>::zeros();
    let mut sum_pos_w = Matrix3::<f64>::zeros();
    let mut sum_pos_a = Matrix3::<f64>::zeros();

    for sample in samples {
        let corrected = sample.corrected(b_bar);
        let dt = corrected.dt;
        let dtheta = corrected.angle_increment();
        let force = corrected.velocity_increment() / dt;

        let g1 = gamma_any(1, &dtheta);
        let g1_neg = gamma_any(1, &(-dtheta));
        let g2 = gamma_any(2, &dtheta);
        let g2_neg = gamma_any(2, &(-dtheta));
        let g3_neg = gamma_any(3, &(-dtheta));
        let fx = skew(&force);

        // attitude prefix Jacobian up to (excluding) this step; the velocity
        // prefixes cancel their P_k wrappers against F(k,j)⁻¹ and enter the
        // position sums as the bare running sums below
        let att_prefix = -p.transpose() * sum_att;

        let vel_w_term = -skew(&(g1 * force)) * att_prefix * dt + g1 * fx * g2_neg * (dt * dt);
        let vel_a_term = -g1 * dt;
        let pos_w_term =
            -skew(&(g2 * force)) * att_prefix * (dt * dt) + g2 * fx * g3_neg * (dt * dt * dt);
        let pos_a_term = -g2 * (dt * dt);

        sum_pos_w += p * pos_w_term + sum_vel_w * dt;
        sum_pos_a += p * pos_a_term + sum_vel_a * dt;
        sum_vel_w += p * vel_w_term;
        sum_vel_a += p * vel_a_term;

        let step_rot = so3_exp(&dtheta);
        sum_att += (p * step_rot) * g1_neg * dt;
        p *= step_rot;
    }

    let pt = p.transpose();
    let mut j = Matrix9x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-pt * sum_att));
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&(pt * sum_vel_w));
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&(pt * sum_vel_a));
    j.fixed_view_mut::<3, 3>(6, 0).copy_from(&(pt * sum_pos_w));
    j.fixed_view_mut::<3, 3>(6, 3).copy_from(&(pt * sum_pos_a));
    BiasJacobian {
        matrix: j,
        reference: *b_bar,
    }
}

/// First-order update of a preintegrated increment under a bias change:
/// `Υ̂(b̄+δb) = Ῡ(b̄)·Exp(J·δb)`. Accuracy degrades quadratically in `‖δb‖`;
/// the first-order regime holds comfortably up to about 1e-2 rad/s and
/// 0.1 m/s².
pub fn apply_bias_correction(
    upsilon_bar: &LocalIncrement,
    jacobian: &BiasJacobian,
    delta_b: &Vector6,
) -> LocalIncrement {
    let correction = exp_se23(&Tangent9::from_vector(&(jacobian.matrix * delta_b)));
    LocalIncrement::from_pose(
        &upsilon_bar.as_pose().compose(&correction),
        upsilon_bar.dt,
        upsilon_bar.scheme,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increment::{compose_local, local_step, SchemeKind};
    use crate::lie::log_se23;
    use crate::propagation::{noise_jacobian_g, transition_a_right};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_window(n: usize, seed: u64) -> Vec<ImuSample> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                ImuSample::from_rates(
                    0.01,
                    Vector3::new(
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ),
                    Vector3::new(
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-11.0..-7.0),
                    ),
                )
                .unwrap()
            })
            .collect()
    }

    fn recursive_over(samples: &[ImuSample], b_bar: &ImuBias) -> BiasJacobian {
        let mut j = BiasJacobian::zero(*b_bar);
        for s in samples {
            let corrected = s.corrected(b_bar);
            let step = local_step(SchemeKind::ZeroOrderHoldBody, &corrected).unwrap();
            j = bias_jacobian_recursive(
                &j,
                &transition_a_right(&step),
                &noise_jacobian_g(&step, s, b_bar),
            );
        }
        j
    }

    fn preintegrate(samples: &[ImuSample], bias: &ImuBias) -> LocalIncrement {
        let mut acc = LocalIncrement::identity(SchemeKind::ZeroOrderHoldBody);
        for s in samples {
            let step = local_step(SchemeKind::ZeroOrderHoldBody, &s.corrected(bias)).unwrap();
            acc = compose_local(&acc, &step);
        }
        acc
    }

    #[test]
    fn first_step_from_zero_equals_g() {
        let samples = random_window(1, 1);
        let b = ImuBias::zero();
        let step = local_step(SchemeKind::ZeroOrderHoldBody, &samples[0]).unwrap();
        let g = noise_jacobian_g(&step, &samples[0], &b);
        let j = bias_jacobian_recursive(&BiasJacobian::zero(b), &transition_a_right(&step), &g);
        assert_eq!(j.matrix, g);
    }

    #[test]
    fn single_sample_zero_rate_blocks() {
        let dt = 0.02;
        let samples = vec![ImuSample::from_rates(dt, Vector3::zeros(), Vector3::zeros()).unwrap()];
        let j = bias_jacobian_closed_form(&samples, &ImuBias::zero());
        let eye = Matrix3::identity();
        assert_relative_eq!(
            j.matrix.fixed_view::<3, 3>(0, 0).into_owned(),
            -eye * dt,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            j.matrix.fixed_view::<3, 3>(3, 3).into_owned(),
            -eye * dt,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            j.matrix.fixed_view::<3, 3>(6, 3).into_owned(),
            -eye * (0.5 * dt * dt),
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_form_matches_recursive() {
        for (n, seed) in [(50usize, 2u64), (1000, 3)] {
            let samples = random_window(n, seed);
            let b_bar = ImuBias::new(
                Vector3::new(2e-3, -1e-3, 3e-3),
                Vector3::new(0.02, -0.01, 0.015),
            );
            let closed = bias_jacobian_closed_form(&samples, &b_bar);
            let recursive = recursive_over(&samples, &b_bar);
            let scale = recursive.matrix.amax().max(1.0);
            assert!(
                (closed.matrix - recursive.matrix).amax() <= 1e-10 * scale,
                "window {n}: gap {}",
                (closed.matrix - recursive.matrix).amax() / scale
            );
        }
    }

    #[test]
    fn attitude_accel_block_is_exactly_zero() {
        let samples = random_window(120, 4);
        let j = bias_jacobian_closed_form(&samples, &ImuBias::zero());
        assert_eq!(
            j.matrix.fixed_view::<3, 3>(0, 3).into_owned(),
            Matrix3::zeros()
        );
        let jr = recursive_over(&samples, &ImuBias::zero());
        assert_eq!(
            jr.matrix.fixed_view::<3, 3>(0, 3).into_owned(),
            Matrix3::zeros()
        );
    }

    #[test]
    fn empty_window_yields_zero_jacobian() {
        let j = bias_jacobian_closed_form(&[], &ImuBias::zero());
        assert_eq!(j.matrix, Matrix9x6::zeros());
    }

    #[test]
    fn jacobian_matches_re_preintegration() {
        let samples = random_window(100, 5);
        let b_bar = ImuBias::zero();
        let j = bias_jacobian_closed_form(&samples, &b_bar);
        let upsilon_bar = preintegrate(&samples, &b_bar);
        let eps = 1e-5;
        for axis in 0..6 {
            let mut delta = Vector6::zeros();
            delta[axis] = eps;
            let re = preintegrate(&samples, &b_bar.shifted(&delta));
            let fd = log_se23(&upsilon_bar.as_pose().inverse().compose(&re.as_pose()))
                .unwrap()
                .as_vector()
                / eps;
            let col = j.matrix.column(axis).into_owned();
            assert!(
                (fd - col).norm() <= 1e-3 * col.norm().max(1e-9),
                "axis {axis}: rel gap {}",
                (fd - col).norm() / col.norm().max(1e-9)
            );
        }
    }

    #[test]
    fn correction_with_zero_delta_is_identity() {
        let samples = random_window(30, 6);
        let b_bar = ImuBias::zero();
        let j = bias_jacobian_closed_form(&samples, &b_bar);
        let upsilon = preintegrate(&samples, &b_bar);
        let same = apply_bias_correction(&upsilon, &j, &Vector6::zeros());
        assert_eq!(same.rot, upsilon.rot);
        assert_eq!(same.vel, upsilon.vel);
        assert_eq!(same.pos, upsilon.pos);
    }

    #[test]
    fn correction_tracks_re_preintegration() {
        let samples = random_window(100, 7);
        let b_bar = ImuBias::zero();
        let j = bias_jacobian_closed_form(&samples, &b_bar);
        let upsilon_bar = preintegrate(&samples, &b_bar);
        let mut delta = Vector6::zeros();
        delta[0] = 1e-4;
        delta[4] = 5e-4;
        let corrected = apply_bias_correction(&upsilon_bar, &j, &delta);
        let re = preintegrate(&samples, &b_bar.shifted(&delta));
        assert!((corrected.rot - re.rot).norm() < 1e-7);
        assert!((corrected.vel - re.vel).norm() < 1e-7);
        assert!((corrected.pos - re.pos).norm() < 1e-7);
    }

    #[test]
    fn correction_error_is_second_order() {
        let samples = random_window(100, 8);
        let b_bar = ImuBias::zero();
        let j = bias_jacobian_closed_form(&samples, &b_bar);
        let upsilon_bar = preintegrate(&samples, &b_bar);
        let err = |scale: f64| {
            let mut delta = Vector6::zeros();
            delta[1] = scale;
            delta[5] = scale * 10.0;
            let corrected = apply_bias_correction(&upsilon_bar, &j, &delta);
            let re = preintegrate(&samples, &b_bar.shifted(&delta));
            ((corrected.rot - re.rot).norm().powi(2)
                + (corrected.vel - re.vel).norm().powi(2)
                + (corrected.pos - re.pos).norm().powi(2))
            .sqrt()
        };
        let ratio = err(2e-3) / err(1e-3);
        assert!(
            (ratio - 4.0).abs() < 0.3,
            "expected quadratic error decay, ratio {ratio}"
        );
    }
}
