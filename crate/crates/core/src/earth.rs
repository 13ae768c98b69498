//! Reference-frame kinematics: earth rotation, transport rate, curvature
//! radii, gravity and gravitation, and assembly of the per-frame kinematic
//! contexts that drive the global-increment closed forms.
//!
//! Four state parameterizations are supported. The two "transformed" variants
//! carry the auxiliary velocity `v + ω_ie×r`, which makes the frame dynamics
//! group-affine with constant group-level inputs; the untransformed variants
//! carry the ordinary ground velocity and are handled through an exact
//! velocity-shift conjugation.
//!
//! Positions for the local-level variants are the geocentric vector expressed
//! in the local axes, together with a geodetic anchor used to evaluate rates
//! and gravity. Ellipsoid and normal-gravity constants default to WGS-84 and
//! are configurable.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::lie::{skew, ExtendedPose};
use crate::{Error, Result};

/// Latitude/longitude (rad) and ellipsoidal height (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPosition {
    pub lat: f64,
    pub lon: f64,
    pub height: f64,
}

impl GeodeticPosition {
    pub fn new(lat: f64, lon: f64, height: f64) -> Result<Self> {
        let pos = Self { lat, lon, height };
        pos.validate()?;
        Ok(pos)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || self.lat.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidPosition(format!(
                "latitude {} rad out of range",
                self.lat
            )));
        }
        if !self.lon.is_finite() {
            return Err(Error::InvalidPosition("longitude not finite".into()));
        }
        if !self.height.is_finite() || self.height <= -1.0e4 {
            return Err(Error::InvalidPosition(format!(
                "height {} m out of range",
                self.height
            )));
        }
        Ok(())
    }
}

/// Which group-level state parameterization a value lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameVariant {
    /// Local-level frame, ground velocity.
    Ned,
    /// Local-level frame, auxiliary velocity `v + ω_ie×r`.
    TransformedNed,
    /// Earth-fixed frame, ground velocity.
    Ecef,
    /// Earth-fixed frame, auxiliary velocity `v + ω_ie×r`.
    TransformedEcef,
}

impl FrameVariant {
    pub const ALL: [FrameVariant; 4] = [
        FrameVariant::Ned,
        FrameVariant::TransformedNed,
        FrameVariant::Ecef,
        FrameVariant::TransformedEcef,
    ];

    /// True for the auxiliary-velocity parameterizations.
    pub fn is_transformed(self) -> bool {
        matches!(
            self,
            FrameVariant::TransformedNed | FrameVariant::TransformedEcef
        )
    }

    /// True for the local-level (NED) family.
    pub fn is_local_level(self) -> bool {
        matches!(self, FrameVariant::Ned | FrameVariant::TransformedNed)
    }

    /// The variant with the same resolving frame and the other velocity
    /// convention.
    pub fn toggled(self) -> FrameVariant {
        match self {
            FrameVariant::Ned => FrameVariant::TransformedNed,
            FrameVariant::TransformedNed => FrameVariant::Ned,
            FrameVariant::Ecef => FrameVariant::TransformedEcef,
            FrameVariant::TransformedEcef => FrameVariant::Ecef,
        }
    }
}

/// Ellipsoid and normal-gravity constants. Defaults are the WGS-84 values;
/// every field can be overridden from configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarthParams {
    /// Earth rotation rate (rad/s).
    pub omega_ie: f64,
    /// Semi-major axis (m).
    pub semi_major_axis: f64,
    /// Flattening (dimensionless).
    pub flattening: f64,
    /// Gravitational constant times earth mass (m³/s²).
    pub gm: f64,
    /// Normal gravity at the equator (m/s²).
    pub equatorial_gravity: f64,
    /// Somigliana constant of the normal-gravity formula.
    pub somigliana_k: f64,
}

impl Default for EarthParams {
    fn default() -> Self {
        Self {
            omega_ie: 7.2921151467e-5,
            semi_major_axis: 6_378_137.0,
            flattening: 1.0 / 298.257_223_563,
            gm: 3.986_004_418e14,
            equatorial_gravity: 9.780_325_335_9,
            somigliana_k: 1.931_852_652_41e-3,
        }
    }
}

impl EarthParams {
    pub fn wgs84() -> Self {
        Self::default()
    }

    /// Squared first eccentricity of the ellipsoid.
    pub fn e_squared(&self) -> f64 {
        self.flattening * (2.0 - self.flattening)
    }

    /// Earth rotation vector in earth-fixed axes, `[0, 0, ω]`.
    pub fn omega_ie_ecef(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.omega_ie)
    }

    /// Meridian and prime-vertical curvature radii `(R_M, R_N)` at `lat`.
    pub fn curvature_radii(&self, lat: f64) -> (f64, f64) {
        let e2 = self.e_squared();
        let s2 = lat.sin() * lat.sin();
        let w = (1.0 - e2 * s2).sqrt();
        let rn = self.semi_major_axis / w;
        let rm = self.semi_major_axis * (1.0 - e2) / (w * w * w);
        (rm, rn)
    }

    /// Earth rotation vector in local-level axes:
    /// `[ω cos φ, 0, −ω sin φ]`.
    pub fn earth_rate_n(&self, pos: &GeodeticPosition) -> Vector3<f64> {
        Vector3::new(
            self.omega_ie * pos.lat.cos(),
            0.0,
            -self.omega_ie * pos.lat.sin(),
        )
    }

    /// Transport rate of the local-level frame for ground velocity `v_ned`:
    /// `[v_E/(R_N+h), −v_N/(R_M+h), −v_E tan φ/(R_N+h)]`.
    ///
    /// Rejects latitudes within 1e-6 rad of the poles, where the tangent
    /// blows up.
    pub fn transport_rate_n(
        &self,
        pos: &GeodeticPosition,
        v_ned: &Vector3<f64>,
    ) -> Result<Vector3<f64>> {
        if (pos.lat.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-6 {
            return Err(Error::PolarSingularity { lat: pos.lat });
        }
        let (rm, rn) = self.curvature_radii(pos.lat);
        Ok(Vector3::new(
            v_ned.y / (rn + pos.height),
            -v_ned.x / (rm + pos.height),
            -v_ned.y * pos.lat.tan() / (rn + pos.height),
        ))
    }

    /// Somigliana normal gravity with a second-order height correction.
    pub fn normal_gravity(&self, pos: &GeodeticPosition) -> f64 {
        let s2 = pos.lat.sin() * pos.lat.sin();
        let e2 = self.e_squared();
        let g0 = self.equatorial_gravity * (1.0 + self.somigliana_k * s2) / (1.0 - e2 * s2).sqrt();
        let a = self.semi_major_axis;
        let b = a * (1.0 - self.flattening);
        let m = self.omega_ie * self.omega_ie * a * a * b / self.gm;
        let h = pos.height;
        g0 * (1.0 - 2.0 / a * (1.0 + self.flattening + m - 2.0 * self.flattening * s2) * h
            + 3.0 * h * h / (a * a))
    }

    /// Gravity vector in local-level axes, `[0, 0, γ]` (down positive).
    pub fn gravity_n(&self, pos: &GeodeticPosition) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.normal_gravity(pos))
    }

    /// Geodetic to earth-fixed cartesian position.
    pub fn geodetic_to_ecef(&self, pos: &GeodeticPosition) -> Vector3<f64> {
        let e2 = self.e_squared();
        let (sl, cl) = pos.lat.sin_cos();
        let (so, co) = pos.lon.sin_cos();
        let rn = self.semi_major_axis / (1.0 - e2 * sl * sl).sqrt();
        Vector3::new(
            (rn + pos.height) * cl * co,
            (rn + pos.height) * cl * so,
            (rn * (1.0 - e2) + pos.height) * sl,
        )
    }

    /// Earth-fixed cartesian to geodetic position (fixed-point iteration on
    /// the latitude; converges to machine precision in a handful of rounds).
    pub fn ecef_to_geodetic(&self, r: &Vector3<f64>) -> GeodeticPosition {
        let e2 = self.e_squared();
        let p = (r.x * r.x + r.y * r.y).sqrt();
        let lon = r.y.atan2(r.x);
        let mut lat = r.z.atan2(p * (1.0 - e2));
        let mut height = 0.0;
        for _ in 0..6 {
            let sl = lat.sin();
            let rn = self.semi_major_axis / (1.0 - e2 * sl * sl).sqrt();
            height = if lat.abs() < 1.4 {
                p / lat.cos() - rn
            } else {
                r.z / sl - rn * (1.0 - e2)
            };
            lat = r.z.atan2(p * (1.0 - e2 * rn / (rn + height)));
        }
        GeodeticPosition { lat, lon, height }
    }

    /// Rotation from earth-fixed axes to local-level (north-east-down) axes.
    pub fn ecef_to_ned_rotation(&self, pos: &GeodeticPosition) -> Matrix3<f64> {
        let (sl, cl) = pos.lat.sin_cos();
        let (so, co) = pos.lon.sin_cos();
        Matrix3::new(
            -sl * co,
            -sl * so,
            cl, //
            -so,
            co,
            0.0, //
            -cl * co,
            -cl * so,
            -sl,
        )
    }

    /// Gravity vector in earth-fixed axes at an earth-fixed position: the
    /// normal-gravity magnitude along the local down direction.
    pub fn gravity_ecef(&self, r: &Vector3<f64>) -> Vector3<f64> {
        let pos = self.ecef_to_geodetic(r);
        let c_en = self.ecef_to_ned_rotation(&pos);
        c_en.transpose() * self.gravity_n(&pos)
    }

    /// Gravitation (mass attraction) in earth-fixed axes, recovered from the
    /// normal gravity by adding back the centrifugal term:
    /// `G = g + (ω_ie×)² r`.
    pub fn gravitation_ecef(&self, r: &Vector3<f64>) -> Vector3<f64> {
        let w = self.omega_ie_ecef();
        self.gravity_ecef(r) + w.cross(&w.cross(r))
    }
}

/// Per-frame rotation rate, gravitation and coupling terms evaluated at one
/// state, frozen over the following integration step.
///
/// `velocity_coupling` and `position_coupling` are the second and third
/// columns of the left-multiplying input matrix of the frame dynamics: for
/// the transformed variants they are the gravitation and the auxiliary
/// velocity; for the untransformed ones the mixed terms `g − ω_ie×v` and
/// `v + ω_ie×r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicContext {
    pub variant: FrameVariant,
    /// Rotation rate of the resolving frame (`ω_in` or `ω_ie`), frame axes.
    pub omega_frame: Vector3<f64>,
    /// Earth rotation in frame axes (used by the velocity shift).
    pub omega_ie: Vector3<f64>,
    /// Gravitation at the evaluation position, frame axes.
    pub gravitation: Vector3<f64>,
    /// Gravity at the evaluation position, frame axes.
    pub gravity: Vector3<f64>,
    /// Second input column (see type-level docs).
    pub velocity_coupling: Vector3<f64>,
    /// Third input column (see type-level docs).
    pub position_coupling: Vector3<f64>,
}

/// Evaluates the kinematic context of a state given the variant, the geodetic
/// anchor (used by the local-level variants), and the state's velocity and
/// position slots in the variant's own convention.
pub fn kinematic_context(
    params: &EarthParams,
    variant: FrameVariant,
    anchor: &GeodeticPosition,
    velocity_slot: &Vector3<f64>,
    position_slot: &Vector3<f64>,
) -> Result<KinematicContext> {
    match variant {
        FrameVariant::Ecef | FrameVariant::TransformedEcef => {
            let omega_ie = params.omega_ie_ecef();
            let r = *position_slot;
            let v_ground = if variant.is_transformed() {
                velocity_slot - omega_ie.cross(&r)
            } else {
                *velocity_slot
            };
            let gravity = params.gravity_ecef(&r);
            let gravitation = gravity + omega_ie.cross(&omega_ie.cross(&r));
            let (vc, pc) = if variant.is_transformed() {
                (gravitation, *velocity_slot)
            } else {
                (
                    gravity - omega_ie.cross(&v_ground),
                    v_ground + omega_ie.cross(&r),
                )
            };
            Ok(KinematicContext {
                variant,
                omega_frame: omega_ie,
                omega_ie,
                gravitation,
                gravity,
                velocity_coupling: vc,
                position_coupling: pc,
            })
        }
        FrameVariant::Ned | FrameVariant::TransformedNed => {
            let omega_ie = params.earth_rate_n(anchor);
            let r = *position_slot;
            let v_ground = if variant.is_transformed() {
                velocity_slot - omega_ie.cross(&r)
            } else {
                *velocity_slot
            };
            let transport = params.transport_rate_n(anchor, &v_ground)?;
            let omega_frame = omega_ie + transport;
            let gravity = params.gravity_n(anchor);
            let gravitation = gravity + omega_ie.cross(&omega_ie.cross(&r));
            let (vc, pc) = if variant.is_transformed() {
                (gravitation, *velocity_slot)
            } else {
                (
                    gravity - omega_ie.cross(&v_ground),
                    v_ground + omega_ie.cross(&r),
                )
            };
            Ok(KinematicContext {
                variant,
                omega_frame,
                omega_ie,
                gravitation,
                gravity,
                velocity_coupling: vc,
                position_coupling: pc,
            })
        }
    }
}

/// Frobenius norm of the group-affinity defect
/// `f(A)·B + A·f(B) − A·f(I)·B − f(A·B)` for the frame dynamics
/// `f(X) = X·W₁ + W₂·X` with inputs frozen at the context's evaluation state.
///
/// Zero (to round-off) for every variant; serves as a property check of the
/// input-matrix assembly.
pub fn group_affine_defect(
    ctx: &KinematicContext,
    x_a: &ExtendedPose,
    x_b: &ExtendedPose,
    omega_body: &Vector3<f64>,
    specific_force: &Vector3<f64>,
) -> f64 {
    type M5 = nalgebra::SMatrix<f64, 5, 5>;

    fn embed(p: &ExtendedPose) -> M5 {
        let mut m = M5::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&p.rot);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p.vel);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&p.pos);
        m
    }

    let mut w1 = M5::zeros();
    w1.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(omega_body));
    w1.fixed_view_mut::<3, 1>(0, 3).copy_from(specific_force);

    let mut w2 = M5::zeros();
    w2.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(-skew(&ctx.omega_frame)));
    w2.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&ctx.velocity_coupling);
    w2.fixed_view_mut::<3, 1>(0, 4)
        .copy_from(&ctx.position_coupling);

    let f = |x: &M5| x * w1 + w2 * x;
    let a = embed(x_a);
    let b = embed(x_b);
    let defect = f(&a) * b + a * f(&b) - a * f(&M5::identity()) * b - f(&(a * b));
    defect.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const OMEGA: f64 = 7.2921151467e-5;

    fn geo(lat: f64, lon: f64, h: f64) -> GeodeticPosition {
        GeodeticPosition::new(lat, lon, h).unwrap()
    }

    #[test]
    fn earth_rate_at_reference_latitudes() {
        let p = EarthParams::default();
        let at_equator = p.earth_rate_n(&geo(0.0, 0.0, 0.0));
        assert_relative_eq!(at_equator.x, OMEGA, epsilon = 1e-18);
        assert_eq!(at_equator.y, 0.0);
        assert_relative_eq!(at_equator.z, 0.0, epsilon = 1e-18);

        let near_pole = p.earth_rate_n(&geo(std::f64::consts::FRAC_PI_2, 0.0, 0.0));
        assert_relative_eq!(near_pole.x, 0.0, epsilon = 1e-18);
        assert_relative_eq!(near_pole.z, -OMEGA, epsilon = 1e-18);

        let mid = p.earth_rate_n(&geo(std::f64::consts::FRAC_PI_4, 0.0, 0.0));
        assert_relative_eq!(mid.x, OMEGA / 2f64.sqrt(), epsilon = 1e-18);
        assert_relative_eq!(mid.z, -OMEGA / 2f64.sqrt(), epsilon = 1e-18);
    }

    #[test]
    fn transport_rate_cases() {
        let p = EarthParams::default();
        let site = geo(0.0, 0.0, 0.0);
        assert_eq!(
            p.transport_rate_n(&site, &Vector3::zeros()).unwrap(),
            Vector3::zeros()
        );

        let (rm, _) = p.curvature_radii(0.0);
        let north = p
            .transport_rate_n(&site, &Vector3::new(100.0, 0.0, 0.0))
            .unwrap();
        assert_relative_eq!(north.y, -100.0 / rm, epsilon = 1e-18);
        assert_eq!(north.x, 0.0);
        assert_eq!(north.z, 0.0);

        let east = p
            .transport_rate_n(&site, &Vector3::new(0.0, 100.0, 0.0))
            .unwrap();
        assert_eq!(east.z, 0.0); // tan(0) = 0

        let polar = geo(std::f64::consts::FRAC_PI_2 - 1e-8, 0.0, 0.0);
        assert!(matches!(
            p.transport_rate_n(&polar, &Vector3::new(1.0, 1.0, 0.0)),
            Err(Error::PolarSingularity { .. })
        ));
    }

    #[test]
    fn earth_plus_transport_is_frame_rate() {
        let p = EarthParams::default();
        let site = geo(0.7, -1.2, 250.0);
        let v = Vector3::new(30.0, -12.0, 2.0);
        let ctx = kinematic_context(
            &p,
            FrameVariant::Ned,
            &site,
            &v,
            &(p.ecef_to_ned_rotation(&site) * p.geodetic_to_ecef(&site)),
        )
        .unwrap();
        let expected = p.earth_rate_n(&site) + p.transport_rate_n(&site, &v).unwrap();
        assert_relative_eq!(ctx.omega_frame, expected, epsilon = 1e-18);
    }

    #[test]
    fn geodetic_ecef_roundtrip() {
        let p = EarthParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for _ in 0..200 {
            let site = geo(
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.1..3.1),
                rng.random_range(-100.0..10_000.0),
            );
            let r = p.geodetic_to_ecef(&site);
            let back = p.ecef_to_geodetic(&r);
            assert_relative_eq!(back.lat, site.lat, epsilon = 1e-12);
            assert_relative_eq!(back.lon, site.lon, epsilon = 1e-12);
            assert!((back.height - site.height).abs() < 1e-6);
        }
    }

    #[test]
    fn ned_rotation_is_orthonormal() {
        let p = EarthParams::default();
        let c = p.ecef_to_ned_rotation(&geo(0.68, 2.1, 0.0));
        assert_relative_eq!(c * c.transpose(), Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(c.determinant(), 1.0, epsilon = 1e-14);
        // position vector expressed in its own local axes points mostly down
        let site = geo(0.0, 0.0, 0.0);
        let r_n = p.ecef_to_ned_rotation(&site) * p.geodetic_to_ecef(&site);
        assert_relative_eq!(r_n.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(r_n.y, 0.0, epsilon = 1e-9);
        assert!(r_n.z < -6.3e6);
    }

    #[test]
    fn normal_gravity_reference_values() {
        // Somigliana values at the equator and pole, standard constants
        let p = EarthParams::default();
        assert_relative_eq!(
            p.normal_gravity(&geo(0.0, 0.0, 0.0)),
            9.7803253359,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            p.normal_gravity(&geo(std::f64::consts::FRAC_PI_2, 0.0, 0.0)),
            9.8321849379,
            epsilon = 1e-6
        );
        // gravity decreases with height
        assert!(p.normal_gravity(&geo(0.8, 0.0, 1000.0)) < p.normal_gravity(&geo(0.8, 0.0, 0.0)));
    }

    #[test]
    fn gravity_gravitation_relation_holds_by_construction() {
        let p = EarthParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(78);
        for variant in FrameVariant::ALL {
            for _ in 0..20 {
                let site = geo(
                    rng.random_range(-1.4..1.4),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.0..5000.0),
                );
                let r_e = p.geodetic_to_ecef(&site);
                let (r, v) = if variant.is_local_level() {
                    let c_en = p.ecef_to_ned_rotation(&site);
                    (c_en * r_e, Vector3::new(5.0, -3.0, 1.0))
                } else {
                    (r_e, Vector3::new(5.0, -3.0, 1.0))
                };
                let ctx = kinematic_context(&p, variant, &site, &v, &r).unwrap();
                let recon = ctx.gravitation - skew(&ctx.omega_ie) * (skew(&ctx.omega_ie) * r);
                assert_relative_eq!(recon, ctx.gravity, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn transformed_ecef_context_is_position_independent_in_rate() {
        let p = EarthParams::default();
        let site = geo(0.5, 0.5, 0.0);
        let r1 = p.geodetic_to_ecef(&site);
        let r2 = r1 + Vector3::new(1.0e5, -2.0e5, 3.0e4);
        let ctx1 = kinematic_context(
            &p,
            FrameVariant::TransformedEcef,
            &site,
            &Vector3::zeros(),
            &r1,
        )
        .unwrap();
        let ctx2 = kinematic_context(
            &p,
            FrameVariant::TransformedEcef,
            &site,
            &Vector3::zeros(),
            &r2,
        )
        .unwrap();
        assert_eq!(ctx1.omega_frame, ctx2.omega_frame);
        assert_eq!(ctx1.omega_frame, Vector3::new(0.0, 0.0, OMEGA));
    }

    #[test]
    fn transformed_ned_rate_at_rest_is_earth_rate() {
        let p = EarthParams::default();
        let site = geo(std::f64::consts::FRAC_PI_4, 0.3, 10.0);
        let c_en = p.ecef_to_ned_rotation(&site);
        let r_n = c_en * p.geodetic_to_ecef(&site);
        // at rest: auxiliary velocity equals ω_ie×r
        let v_bar = p.earth_rate_n(&site).cross(&r_n);
        let ctx = kinematic_context(&p, FrameVariant::TransformedNed, &site, &v_bar, &r_n).unwrap();
        assert_relative_eq!(ctx.omega_frame, p.earth_rate_n(&site), epsilon = 1e-15);
    }

    #[test]
    fn group_affine_defect_vanishes() {
        use crate::lie::{exp_se23, Tangent9};
        let p = EarthParams::default();
        let site = geo(0.6, 1.0, 100.0);
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        let rand_pose = |rng: &mut ChaCha12Rng| {
            exp_se23(&Tangent9::new(
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
                Vector3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                ),
                Vector3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                ),
            ))
        };
        for variant in FrameVariant::ALL {
            let r_e = p.geodetic_to_ecef(&site);
            let (r, v) = if variant.is_local_level() {
                (
                    p.ecef_to_ned_rotation(&site) * r_e,
                    Vector3::new(12.0, 4.0, -1.0),
                )
            } else {
                (r_e, Vector3::new(12.0, 4.0, -1.0))
            };
            let ctx = kinematic_context(&p, variant, &site, &v, &r).unwrap();
            // identity case is exactly zero
            let id = ExtendedPose::identity();
            assert_eq!(
                group_affine_defect(&ctx, &id, &id, &Vector3::zeros(), &Vector3::zeros()),
                0.0
            );
            for _ in 0..25 {
                let a = rand_pose(&mut rng);
                let b = rand_pose(&mut rng);
                let w = Vector3::new(0.1, -0.2, 0.3);
                let f = Vector3::new(0.5, 9.0, -2.0);
                assert!(group_affine_defect(&ctx, &a, &b, &w, &f) <= 1e-9);
            }
        }
    }
}
