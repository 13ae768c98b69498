//! Simulation and verification harness for the extended-pose preintegration
//! library: analytic ground-truth trajectories, IMU measurement synthesis
//! with configurable error models, scheme-comparison runs, and CLI-facing
//! property suites with machine-readable reports.

pub mod config;
pub mod io;
pub mod rng;
pub mod runner;
pub mod trajectory;
pub mod verify;

pub use config::Config;
pub use runner::{
    ecef_triple, nav_state_from_truth, preintegrate_window, run_compare, run_stream, state_errors,
    RunReport, SchemeReport, StateErrors, StreamRun,
};
pub use trajectory::{
    synthesize_imu, Motion, SensorErrorSpec, SyntheticImu, TrajectorySpec, TruthPoint,
};
pub use verify::{run_suite, FaultInjection, VerifyReport, VerifySuite};
