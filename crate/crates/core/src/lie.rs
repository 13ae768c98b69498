//! Lie-group machinery for extended poses.
//!
//! An extended pose couples a rotation with two translational slots (velocity
//! and position) in one 5×5 matrix group element. Tangent vectors are ordered
//! `[φ; ϑ; ζ]` — attitude, then the velocity slot, then the position slot —
//! and the same ordering is used for every 9×9 Jacobian in the crate.
//!
//! The Γ series
//!
//! ```text
//! Γ_m(φ) = Σ_{n≥0} (φ×)ⁿ / (n+m)!
//! ```
//!
//! collects the integrals that show up throughout: Γ₀ is the SO(3) exponential,
//! Γ₁ the left Jacobian, Γ₂ and Γ₃ the first and second time-weighted integrals
//! of the exponential. Closed forms are used away from zero; near zero the
//! scalar coefficients are summed as truncated series, which is exact to
//! machine precision and free of the cancellation the closed forms suffer
//! (Γ₂ and Γ₃ numerators lose all significant digits below ~1e-4 rad).

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vector6 = SVector<f64, 6>;
pub type Vector9 = SVector<f64, 9>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix9 = SMatrix<f64, 9, 9>;
pub type Matrix9x6 = SMatrix<f64, 9, 6>;

/// Below this angle the Γ coefficients switch to their truncated series.
pub const GAMMA_SERIES_ANGLE: f64 = 0.1;
/// Half-width of the rejected band around the rotation-log branch cut at π.
pub const LOG_BRANCH_MARGIN: f64 = 1e-7;

/// Skew-symmetric (cross-product) matrix of a 3-vector.
#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]; assumes the argument is skew-symmetric.
#[inline]
pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Exponential coordinates ξ = [φ; ϑ; ζ] of an extended pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tangent9 {
    /// Rotation vector (rad).
    pub phi: Vector3<f64>,
    /// First translational coordinate (velocity slot).
    pub theta: Vector3<f64>,
    /// Second translational coordinate (position slot).
    pub zeta: Vector3<f64>,
}

impl Tangent9 {
    pub fn new(phi: Vector3<f64>, theta: Vector3<f64>, zeta: Vector3<f64>) -> Self {
        Self { phi, theta, zeta }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), Vector3::zeros())
    }

    pub fn from_vector(v: &Vector9) -> Self {
        Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
            Vector3::new(v[6], v[7], v[8]),
        )
    }

    pub fn as_vector(&self) -> Vector9 {
        let mut v = Vector9::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.phi);
        v.fixed_rows_mut::<3>(3).copy_from(&self.theta);
        v.fixed_rows_mut::<3>(6).copy_from(&self.zeta);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.as_vector().iter().all(|x| x.is_finite())
    }
}

/// An extended pose: rotation plus two translational slots.
///
/// The first slot carries the velocity-like quantity of whichever frame
/// variant the pose lives in, the second the position-like quantity. The
/// rotation is stored as an orthonormal 3×3 matrix; the 5×5 embedding is never
/// materialized outside test oracles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPose {
    /// Rotation matrix (body to resolving frame).
    pub rot: Matrix3<f64>,
    /// First translational slot (velocity).
    pub vel: Vector3<f64>,
    /// Second translational slot (position).
    pub pos: Vector3<f64>,
}

impl ExtendedPose {
    pub fn new(rot: Matrix3<f64>, vel: Vector3<f64>, pos: Vector3<f64>) -> Self {
        Self { rot, vel, pos }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros(), Vector3::zeros())
    }

    /// Group product, i.e. the 5×5 embedded matrix product done blockwise.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rot * other.rot,
            self.rot * other.vel + self.vel,
            self.rot * other.pos + self.pos,
        )
    }

    /// Group inverse `(Cᵀ, −Cᵀv, −Cᵀr)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rot.transpose();
        Self::new(rt, -rt * self.vel, -rt * self.pos)
    }

    /// Adjoint matrix: block lower-triangular with `C` on the diagonal and
    /// `(v×)C`, `(r×)C` in the translational rows. Satisfies
    /// `T · Exp(ξ) · T⁻¹ = Exp(Ad_T ξ)`.
    pub fn adjoint(&self) -> Matrix9 {
        let mut ad = Matrix9::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rot);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rot);
        ad.fixed_view_mut::<3, 3>(6, 6).copy_from(&self.rot);
        ad.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.vel) * self.rot));
        ad.fixed_view_mut::<3, 3>(6, 0)
            .copy_from(&(skew(&self.pos) * self.rot));
        ad
    }

    /// Frobenius distance of `CᵀC` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.rot.transpose() * self.rot - Matrix3::identity()).norm()
    }

    /// Checks the rotation-block invariants (orthonormal, det +1) at `tol`.
    pub fn is_valid_rotation(&self, tol: f64) -> bool {
        self.orthonormality_defect() <= tol && (self.rot.determinant() - 1.0).abs() <= tol
    }
}

/// Linear isomorphism from ℝ⁹ to the 5×5 Lie algebra: skew(φ) in the top-left
/// block, ϑ and ζ in the fourth and fifth columns, zero bottom rows.
pub fn hat(xi: &Tangent9) -> Matrix5 {
    let mut m = Matrix5::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&xi.phi));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&xi.theta);
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&xi.zeta);
    m
}

/// Inverse of [`hat`]. Rejects matrices that violate the algebra pattern
/// (non-skew top-left block or nonzero bottom rows) beyond 1e-12.
pub fn vee(m: &Matrix5) -> Result<Tangent9> {
    let mut defect: f64 = 0.0;
    for col in 0..5 {
        for row in 3..5 {
            defect = defect.max(m[(row, col)].abs());
        }
    }
    let a = m.fixed_view::<3, 3>(0, 0);
    let sym = a + a.transpose();
    defect = defect.max(sym.amax());
    if defect > 1e-12 {
        return Err(Error::MalformedAlgebra { defect });
    }
    Ok(Tangent9::new(
        Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]),
        m.fixed_view::<3, 1>(0, 3).into_owned(),
        m.fixed_view::<3, 1>(0, 4).into_owned(),
    ))
}

/// Order of a Γ-series evaluation. Only the orders with closed forms are
/// exposed; higher orders are used internally by the perturbation formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaOrder {
    Zero,
    One,
    Two,
    Three,
}

impl GammaOrder {
    pub const ALL: [GammaOrder; 4] = [
        GammaOrder::Zero,
        GammaOrder::One,
        GammaOrder::Two,
        GammaOrder::Three,
    ];

    pub fn index(self) -> usize {
        match self {
            GammaOrder::Zero => 0,
            GammaOrder::One => 1,
            GammaOrder::Two => 2,
            GammaOrder::Three => 3,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Scalar coefficients (a, b, c) with Γ_m(φ) = a·I + b·φ× + c·φ×², summed as
/// truncated series. Valid for any angle (terms decay factorially); used below
/// [`GAMMA_SERIES_ANGLE`] and for orders without closed forms.
fn gamma_coeffs_series(m: usize, theta: f64) -> (f64, f64, f64) {
    let t2 = theta * theta;
    let mut b = 0.0;
    let mut c = 0.0;
    // b collects odd powers (φ×, φ×³ = −θ²φ×, ...), c the even ones.
    let mut term_b = 1.0 / factorial(m + 1);
    let mut term_c = 1.0 / factorial(m + 2);
    for k in 0..30 {
        b += term_b;
        c += term_c;
        let n = 2 * k;
        term_b *= -t2 / (((n + m + 2) * (n + m + 3)) as f64);
        term_c *= -t2 / (((n + m + 3) * (n + m + 4)) as f64);
        if term_b.abs() < 1e-300 && term_c.abs() < 1e-300 {
            break;
        }
    }
    (1.0 / factorial(m), b, c)
}

fn gamma_coeffs_closed(m: usize, theta: f64) -> (f64, f64, f64) {
    let (s, cth) = theta.sin_cos();
    let t2 = theta * theta;
    match m {
        0 => {
            let half = theta * 0.5;
            // 1 − cos θ = 2 sin²(θ/2), safe form
            (1.0, s / theta, 2.0 * half.sin().powi(2) / t2)
        }
        1 => {
            let half = theta * 0.5;
            (
                1.0,
                2.0 * half.sin().powi(2) / t2,
                (theta - s) / (t2 * theta),
            )
        }
        2 => (
            0.5,
            (theta - s) / (t2 * theta),
            (t2 + 2.0 * cth - 2.0) / (2.0 * t2 * t2),
        ),
        3 => (
            1.0 / 6.0,
            (t2 + 2.0 * cth - 2.0) / (2.0 * t2 * t2),
            (t2 * theta - 6.0 * theta + 6.0 * s) / (6.0 * t2 * t2 * theta),
        ),
        _ => unreachable!("closed forms exist only for orders 0..=3"),
    }
}

pub(crate) fn gamma_any(m: usize, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let (a, b, c) = if m <= 3 && theta >= GAMMA_SERIES_ANGLE {
        gamma_coeffs_closed(m, theta)
    } else {
        gamma_coeffs_series(m, theta)
    };
    let px = skew(phi);
    Matrix3::identity() * a + px * b + px * px * c
}

/// Γ-series evaluation. Γ₀ is the SO(3) exponential, Γ₁ the left Jacobian,
/// Γ₂ and Γ₃ the time-weighted exponential integrals.
pub fn gamma(order: GammaOrder, phi: &Vector3<f64>) -> Matrix3<f64> {
    gamma_any(order.index(), phi)
}

/// SO(3) exponential map (rotation vector to rotation matrix).
pub fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    gamma_any(0, phi)
}

/// Left Jacobian of SO(3).
pub fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    gamma_any(1, phi)
}

/// Closed-form inverse of the SO(3) left Jacobian.
pub fn left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let px = skew(phi);
    let c = if theta < GAMMA_SERIES_ANGLE {
        // 1/θ² − (1+cos θ)/(2θ sin θ) = 1/12 + θ²/720 + θ⁴/30240 + …
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let t2 = theta * theta;
        1.0 / t2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    Matrix3::identity() - px * 0.5 + px * px * c
}

/// SO(3) logarithm on the principal branch.
///
/// The angle comes from `atan2` of the skew norm and the trace, which is well
/// conditioned everywhere; near the π cut the axis is re-extracted from the
/// symmetric part. Angles inside [`LOG_BRANCH_MARGIN`] of π are rejected.
pub fn so3_log(c: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let u = unskew(&(c - c.transpose())) * 0.5; // sin θ · axis
    let s = u.norm();
    let cos_theta = ((c.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = s.atan2(cos_theta);
    if theta >= std::f64::consts::PI - LOG_BRANCH_MARGIN {
        return Err(Error::BranchSingularity { angle: theta });
    }
    if theta < 1e-6 {
        // θ/sin θ ≈ 1 + θ²/6 + 7θ⁴/360
        let t2 = theta * theta;
        return Ok(u * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta < std::f64::consts::PI - 1e-3 {
        return Ok(u * (theta / s));
    }
    // Close to π the skew part is tiny; take the axis from the symmetric part
    // n nᵀ = (B − cos θ I)/(1 − cos θ) and fix its sign with the skew part.
    let b = (c + c.transpose()) * 0.5;
    let nnt = (b - Matrix3::identity() * cos_theta) / (1.0 - cos_theta);
    let k = (0..3)
        .max_by(|&i, &j| nnt[(i, i)].partial_cmp(&nnt[(j, j)]).unwrap())
        .unwrap();
    let col = nnt.column(k).into_owned();
    let mut axis = col / col.norm();
    if axis.dot(&u) < 0.0 {
        axis = -axis;
    }
    Ok(axis * theta)
}

/// Exponential map of the extended-pose group: `(Γ₀(φ), Γ₁(φ)ϑ, Γ₁(φ)ζ)`.
pub fn exp_se23(xi: &Tangent9) -> ExtendedPose {
    let rot = gamma_any(0, &xi.phi);
    let j = gamma_any(1, &xi.phi);
    ExtendedPose::new(rot, j * xi.theta, j * xi.zeta)
}

/// Logarithm of the extended-pose group, inverse of [`exp_se23`] on the
/// principal branch.
pub fn log_se23(t: &ExtendedPose) -> Result<Tangent9> {
    let phi = so3_log(&t.rot)?;
    let j_inv = left_jacobian_inv(&phi);
    Ok(Tangent9::new(phi, j_inv * t.vel, j_inv * t.pos))
}

/// The time-indexed splicing automorphism `(C, v, r) ↦ (C, v, r + dt·v)`.
///
/// It is a group automorphism for every `dt`, and log-linear: applying it
/// under the exponential equals multiplying the tangent by [`Self::matrix`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismF {
    pub dt: f64,
}

impl AutomorphismF {
    pub fn new(dt: f64) -> Self {
        Self { dt }
    }

    /// The 9×9 matrix F with `F(0) = I` and `F(a)·F(b) = F(a+b)`.
    pub fn matrix(&self) -> Matrix9 {
        let mut f = Matrix9::identity();
        f.fixed_view_mut::<3, 3>(6, 3)
            .copy_from(&(Matrix3::identity() * self.dt));
        f
    }

    pub fn apply(&self, t: &ExtendedPose) -> ExtendedPose {
        ExtendedPose::new(t.rot, t.vel, t.pos + t.vel * self.dt)
    }

    pub fn apply_tangent(&self, xi: &Tangent9) -> Tangent9 {
        Tangent9::new(xi.phi, xi.theta, xi.zeta + xi.theta * self.dt)
    }
}

/// Convenience form of [`AutomorphismF::apply`].
pub fn phi_auto(dt: f64, t: &ExtendedPose) -> ExtendedPose {
    AutomorphismF::new(dt).apply(t)
}

/// First-order approximation of `Γ_m(φ+ψ)` for small `φ`:
/// `Γ₀(Γ_{m+1}(ψ)·φ) · Γ_m(ψ)`. Error is second order in `‖φ‖`.
pub fn bch_gamma_small_phi(
    order: GammaOrder,
    phi: &Vector3<f64>,
    psi: &Vector3<f64>,
) -> Matrix3<f64> {
    let m = order.index();
    so3_exp(&(gamma_any(m + 1, psi) * phi)) * gamma_any(m, psi)
}

/// First-order approximation of `Γ_m(φ+ψ)` for small `ψ`:
/// `Γ_m(φ) · Γ₀(Γ_{m+1}(−φ)·ψ)`. Error is second order in `‖ψ‖`.
pub fn bch_gamma_small_psi(
    order: GammaOrder,
    phi: &Vector3<f64>,
    psi: &Vector3<f64>,
) -> Matrix3<f64> {
    let m = order.index();
    gamma_any(m, phi) * so3_exp(&(gamma_any(m + 1, &(-phi)) * psi))
}

/// Adjoint representation of a tangent vector (9×9 `ad` matrix).
pub fn se23_ad(xi: &Tangent9) -> Matrix9 {
    let px = skew(&xi.phi);
    let mut ad = Matrix9::zeros();
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&px);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&px);
    ad.fixed_view_mut::<3, 3>(6, 6).copy_from(&px);
    ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&xi.theta));
    ad.fixed_view_mut::<3, 3>(6, 0).copy_from(&skew(&xi.zeta));
    ad
}

/// Left Jacobian of the extended-pose group, `Σ_n ad_ξⁿ/(n+1)!`, summed until
/// the terms vanish at machine precision.
pub fn se23_left_jacobian(xi: &Tangent9) -> Matrix9 {
    let ad = se23_ad(xi);
    let mut sum = Matrix9::identity();
    let mut term = Matrix9::identity();
    for n in 1..60 {
        term = term * ad / ((n + 1) as f64);
        sum += term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    sum
}

/// Numerical inverse of [`se23_left_jacobian`].
pub fn se23_left_jacobian_inv(xi: &Tangent9) -> Matrix9 {
    se23_left_jacobian(xi)
        .try_inverse()
        .expect("left Jacobian is invertible below the branch cut")
}

/// Projects a near-rotation onto the closest rotation matrix (polar
/// factor via SVD). Provided for explicit re-orthonormalization; nothing in
/// the crate calls it implicitly.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u_fix = u;
        u_fix.column_mut(2).neg_mut();
        r = u_fix * vt;
    }
    r
}
