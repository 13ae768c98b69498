//! Stream propagation drivers, truth conversion, and comparison reports.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use se23_preint::bias::ImuBias;
use se23_preint::earth::{EarthParams, FrameVariant};
use se23_preint::increment::{
    compose_global, compose_local, global_step, local_step, GlobalIncrement, ImuSample,
    LocalIncrement, SchemeKind,
};
use se23_preint::lie::{so3_log, ExtendedPose};
use se23_preint::metrics::{verify_monotonicity, UncertaintyCriterion};
use se23_preint::propagation::{
    noise_jacobian_g, propagate_cov, propagate_state, transition_a_left, transition_a_right,
    Covariance9, NavState, NoiseParams, PerturbationSide,
};
use se23_preint::Result;

use crate::trajectory::{SensorErrorSpec, SyntheticImu, TrajectorySpec, TruthPoint};

/// Converts a truth point into a navigation state of the requested variant.
pub fn nav_state_from_truth(
    params: &EarthParams,
    truth: &TruthPoint,
    variant: FrameVariant,
    bias: ImuBias,
) -> NavState {
    let anchor = params.ecef_to_geodetic(&truth.pos);
    let (rot, vel, pos) = match variant {
        FrameVariant::Ecef => (truth.rot, truth.vel, truth.pos),
        FrameVariant::TransformedEcef => (
            truth.rot,
            truth.vel + params.omega_ie_ecef().cross(&truth.pos),
            truth.pos,
        ),
        FrameVariant::Ned | FrameVariant::TransformedNed => {
            let c_en = params.ecef_to_ned_rotation(&anchor);
            let r_n = c_en * truth.pos;
            let v_n = c_en * truth.vel;
            if variant == FrameVariant::TransformedNed {
                (
                    c_en * truth.rot,
                    v_n + params.earth_rate_n(&anchor).cross(&r_n),
                    r_n,
                )
            } else {
                (c_en * truth.rot, v_n, r_n)
            }
        }
    };
    NavState {
        pose: ExtendedPose::new(rot, vel, pos),
        variant,
        epoch: truth.t,
        bias,
        anchor,
    }
}

/// Recovers the frame-free triple `(C_be, v_eb^e, r_eb^e)` from any variant.
pub fn ecef_triple(
    params: &EarthParams,
    state: &NavState,
) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    match state.variant {
        FrameVariant::Ecef => (state.pose.rot, state.pose.vel, state.pose.pos),
        FrameVariant::TransformedEcef => (
            state.pose.rot,
            state.pose.vel - params.omega_ie_ecef().cross(&state.pose.pos),
            state.pose.pos,
        ),
        FrameVariant::Ned | FrameVariant::TransformedNed => {
            let c_ne = params.ecef_to_ned_rotation(&state.anchor).transpose();
            let v_n = if state.variant.is_transformed() {
                state.pose.vel - params.earth_rate_n(&state.anchor).cross(&state.pose.pos)
            } else {
                state.pose.vel
            };
            (c_ne * state.pose.rot, c_ne * v_n, c_ne * state.pose.pos)
        }
    }
}

/// Attitude/velocity/position gaps between a state and a truth point,
/// compared in the earth-fixed frame.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StateErrors {
    pub attitude_rad: f64,
    pub velocity: f64,
    pub position: f64,
}

pub fn state_errors(params: &EarthParams, state: &NavState, truth: &TruthPoint) -> StateErrors {
    let (c, v, r) = ecef_triple(params, state);
    let att = so3_log(&(c.transpose() * truth.rot))
        .map(|phi| phi.norm())
        .unwrap_or(std::f64::consts::PI);
    StateErrors {
        attitude_rad: att,
        velocity: (v - truth.vel).norm(),
        position: (r - truth.pos).norm(),
    }
}

/// Outcome of one stream propagation.
pub struct StreamRun {
    pub final_state: NavState,
    /// Covariance chain including the initial entry (empty when covariance
    /// propagation was not requested).
    pub covariances: Vec<Covariance9>,
}

/// Folds per-sample propagation over an IMU stream, optionally propagating a
/// covariance alongside on the requested perturbation side.
pub fn run_stream(
    params: &EarthParams,
    initial: &NavState,
    samples: &[ImuSample],
    scheme: SchemeKind,
    covariance: Option<(&NoiseParams, PerturbationSide)>,
) -> Result<StreamRun> {
    let mut state = *initial;
    let mut covariances = Vec::new();
    if let Some((_, side)) = covariance {
        covariances.push(Covariance9::zero(side));
    }
    for sample in samples {
        let corrected = sample.corrected(&state.bias);
        let upsilon = local_step(scheme, &corrected)?;
        let ctx = state.context(params)?;
        let gamma = global_step(&ctx, sample.dt);
        let next = propagate_state(params, &state, &gamma, &upsilon)?;
        if let Some((noise, side)) = covariance {
            let q = noise.q_matrix(sample.dt);
            let g = noise_jacobian_g(&upsilon, sample, &state.bias);
            let sigma = covariances.last().unwrap();
            let propagated = match side {
                PerturbationSide::RightLocal => {
                    propagate_cov(side, sigma, &transition_a_right(&upsilon), &g, &q, None)?
                }
                PerturbationSide::LeftCommonFrame => propagate_cov(
                    side,
                    sigma,
                    &transition_a_left(&gamma),
                    &g,
                    &q,
                    Some(&next.pose),
                )?,
            };
            covariances.push(propagated);
        }
        state = next;
    }
    Ok(StreamRun {
        final_state: state,
        covariances,
    })
}

/// Accumulates the composed window increments of a stream (the preintegrated
/// measurement and the matching global increment), without touching a state.
pub fn preintegrate_window(
    params: &EarthParams,
    initial: &NavState,
    samples: &[ImuSample],
    scheme: SchemeKind,
) -> Result<(LocalIncrement, GlobalIncrement)> {
    let mut upsilon = LocalIncrement::identity(scheme);
    let mut gamma = GlobalIncrement::identity(initial.variant);
    let mut state = *initial;
    for sample in samples {
        let corrected = sample.corrected(&state.bias);
        let step = local_step(scheme, &corrected)?;
        let ctx = state.context(params)?;
        let g = global_step(&ctx, sample.dt);
        state = propagate_state(params, &state, &g, &step)?;
        upsilon = compose_local(&upsilon, &step);
        gamma = compose_global(&g, &gamma)?;
    }
    Ok((upsilon, gamma))
}

/// Per-scheme summary of a comparison run.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeReport {
    pub scheme: SchemeKind,
    pub attitude_error_deg: f64,
    pub velocity_error: f64,
    pub position_error: f64,
    pub covariance_trace: f64,
    pub covariance_d_opt: f64,
    pub monotonicity_pass: bool,
}

/// Machine-readable outcome of `compare`. Timing is reported on stderr, not
/// serialized: outputs must stay byte-identical across runs of one config.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub variant: FrameVariant,
    pub seed: u64,
    pub duration: f64,
    pub rate_hz: f64,
    pub schemes: Vec<SchemeReport>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

/// Synthesizes a stream and propagates it under each scheme, reporting
/// terminal errors against the analytic truth plus covariance summaries.
pub fn run_compare(
    params: &EarthParams,
    spec: &TrajectorySpec,
    err: &SensorErrorSpec,
    schemes: &[SchemeKind],
    variant: FrameVariant,
    seed: u64,
) -> Result<RunReport> {
    let started = Instant::now();
    let log: SyntheticImu = crate::trajectory::synthesize_imu(params, spec, err, seed)?;
    let initial = nav_state_from_truth(params, &log.truth[0], variant, log.initial_bias);
    let truth_end = log.truth.last().expect("non-empty truth");

    let mut reports = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let run = run_stream(
            params,
            &initial,
            &log.samples,
            scheme,
            Some((&err.noise, PerturbationSide::RightLocal)),
        )?;
        let errors = state_errors(params, &run.final_state, truth_end);
        let monotonicity = verify_monotonicity(&run.covariances);
        let last = run.covariances.last().expect("covariance chain");
        reports.push(SchemeReport {
            scheme,
            attitude_error_deg: errors.attitude_rad.to_degrees(),
            velocity_error: errors.velocity,
            position_error: errors.position,
            covariance_trace: criterion(UncertaintyCriterion::AOpt, last),
            covariance_d_opt: criterion(UncertaintyCriterion::DOpt, last),
            monotonicity_pass: monotonicity.pass,
        });
    }
    Ok(RunReport {
        schema_version: 1,
        variant,
        seed,
        duration: spec.duration,
        rate_hz: spec.rate_hz,
        schemes: reports,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

fn criterion(c: UncertaintyCriterion, sigma: &Covariance9) -> f64 {
    se23_preint::metrics::criterion_value(c, sigma)
}
