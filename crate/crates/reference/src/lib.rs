//! Brute-force reference routines for verifying closed forms.
//!
//! Everything here is deliberately naive: truncated matrix power series, dense
//! 5×5 embeddings, and fixed-step Runge–Kutta integration of the raw
//! differential equations. None of it reuses the closed-form code paths it is
//! meant to check, so agreement between the two is meaningful evidence.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Vector9 = SVector<f64, 9>;

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Partial sum of the Γ series `Σ (φ×)ⁿ/(n+m)!` with `terms` terms.
pub fn gamma_series(m: usize, phi: &Vector3<f64>, terms: usize) -> Matrix3<f64> {
    let px = skew(phi);
    let mut sum = Matrix3::zeros();
    let mut power = Matrix3::identity();
    let mut fact = (1..=m).fold(1.0, |a, k| a * k as f64);
    for n in 0..terms {
        sum += power / fact;
        power *= px;
        fact *= (n + m + 1) as f64;
    }
    sum
}

/// Embeds an extended pose into its dense 5×5 matrix form.
pub fn embed_pose(rot: &Matrix3<f64>, vel: &Vector3<f64>, pos: &Vector3<f64>) -> Matrix5 {
    let mut m = Matrix5::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(vel);
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(pos);
    m
}

/// Splits a dense 5×5 group element back into its blocks.
pub fn split_pose(m: &Matrix5) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    (
        m.fixed_view::<3, 3>(0, 0).into_owned(),
        m.fixed_view::<3, 1>(0, 3).into_owned(),
        m.fixed_view::<3, 1>(0, 4).into_owned(),
    )
}

/// Truncated matrix exponential `Σ Λ(ξ)ⁿ/n!` of a 9-vector tangent, as a
/// dense 5×5 matrix.
pub fn exp_series(xi: &Vector9, terms: usize) -> Matrix5 {
    let mut lam = Matrix5::zeros();
    lam.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&skew(&Vector3::new(xi[0], xi[1], xi[2])));
    lam.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&Vector3::new(xi[3], xi[4], xi[5]));
    lam.fixed_view_mut::<3, 1>(0, 4)
        .copy_from(&Vector3::new(xi[6], xi[7], xi[8]));
    let mut sum = Matrix5::zeros();
    let mut power = Matrix5::identity();
    let mut fact = 1.0;
    for n in 0..terms {
        sum += power / fact;
        power *= lam;
        fact *= (n + 1) as f64;
    }
    sum
}

/// Generic fixed-step classical Runge–Kutta integrator.
pub fn rk4<const N: usize, F>(
    f: F,
    y0: SVector<f64, N>,
    t0: f64,
    t1: f64,
    steps: usize,
) -> SVector<f64, N>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)));
        let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)));
        let k4 = f(t + h, &(y + k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
    }
    y
}

fn pack_state(c: &Matrix3<f64>, v: &Vector3<f64>, r: &Vector3<f64>) -> SVector<f64, 15> {
    let mut y = SVector::<f64, 15>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            y[3 * i + j] = c[(i, j)];
        }
    }
    for i in 0..3 {
        y[9 + i] = v[i];
        y[12 + i] = r[i];
    }
    y
}

fn unpack_state(y: &SVector<f64, 15>) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    let mut c = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = y[3 * i + j];
        }
    }
    (
        c,
        Vector3::new(y[9], y[10], y[11]),
        Vector3::new(y[12], y[13], y[14]),
    )
}

/// Integrates the global-increment differential equations
/// `Γ̇ᶜ = −ω×Γᶜ, Γ̇ᵛ = G − ω×Γᵛ, Γ̇ʳ = Γᵛ − ω×Γʳ`
/// with constant `ω`, `G`, starting from the identity increment.
pub fn rk4_global_increment(
    omega: &Vector3<f64>,
    gravitation: &Vector3<f64>,
    dt: f64,
    steps: usize,
) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    let wx = skew(omega);
    let g = *gravitation;
    let f = move |_t: f64, y: &SVector<f64, 15>| {
        let (c, v, r) = unpack_state(y);
        pack_state(&(-wx * c), &(g - wx * v), &(v - wx * r))
    };
    let y = rk4(
        f,
        pack_state(&Matrix3::identity(), &Vector3::zeros(), &Vector3::zeros()),
        0.0,
        dt,
        steps,
    );
    unpack_state(&y)
}

/// Integrates the local-increment differential equations
/// `ΔĊ = ΔC(ω×), Δv̇ = ΔC f, Δṙ = Δv` for time-varying body inputs.
pub fn rk4_local_increment<W, A>(
    omega: W,
    specific_force: A,
    dt: f64,
    steps: usize,
) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>)
where
    W: Fn(f64) -> Vector3<f64>,
    A: Fn(f64) -> Vector3<f64>,
{
    let f = move |t: f64, y: &SVector<f64, 15>| {
        let (c, v, _r) = unpack_state(y);
        pack_state(&(c * skew(&omega(t))), &(c * specific_force(t)), &v)
    };
    let y = rk4(
        f,
        pack_state(&Matrix3::identity(), &Vector3::zeros(), &Vector3::zeros()),
        0.0,
        dt,
        steps,
    );
    unpack_state(&y)
}

/// Integrates the attitude equation `Ṙ = R(ω×)` from the identity.
pub fn rk4_attitude<W>(omega: W, t0: f64, t1: f64, steps: usize) -> Matrix3<f64>
where
    W: Fn(f64) -> Vector3<f64>,
{
    let f = move |t: f64, y: &SVector<f64, 15>| {
        let (c, _, _) = unpack_state(y);
        pack_state(&(c * skew(&omega(t))), &Vector3::zeros(), &Vector3::zeros())
    };
    let y = rk4(
        f,
        pack_state(&Matrix3::identity(), &Vector3::zeros(), &Vector3::zeros()),
        t0,
        t1,
        steps,
    );
    unpack_state(&y).0
}

/// Integrates the raw earth-fixed kinematics
/// `Ċ = C(ω_b×) − (ω_ie×)C, v̇ = C f − 2ω_ie×v + g(r), ṙ = v`
/// given the earth rate, a gravity field, and body-rate and specific-force
/// functions of time. Gravity is evaluated continuously at the current
/// position. Returns `(C, v, r)` at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn rk4_ecef_kinematics<W, A, G>(
    omega_ie: f64,
    gravity: G,
    c0: &Matrix3<f64>,
    v0: &Vector3<f64>,
    r0: &Vector3<f64>,
    omega_b: W,
    specific_force: A,
    t0: f64,
    t1: f64,
    steps: usize,
) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>)
where
    W: Fn(f64) -> Vector3<f64>,
    A: Fn(f64) -> Vector3<f64>,
    G: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    let wie_x = skew(&Vector3::new(0.0, 0.0, omega_ie));
    let f = move |t: f64, y: &SVector<f64, 15>| {
        let (c, v, r) = unpack_state(y);
        pack_state(
            &(c * skew(&omega_b(t)) - wie_x * c),
            &(c * specific_force(t) - 2.0 * (wie_x * v) + gravity(&r)),
            &v,
        )
    };
    let y = rk4(f, pack_state(c0, v0, r0), t0, t1, steps);
    unpack_state(&y)
}
