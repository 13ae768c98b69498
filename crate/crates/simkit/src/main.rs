//! `simkit` — simulation and verification CLI.
//!
//! Subcommands:
//! * `simulate`     — synthesize an IMU log and truth states from a config
//! * `preintegrate` — build a preintegration factor from an IMU log
//! * `compare`      — propagate each configured scheme and report errors
//! * `verify`       — run a property suite; nonzero exit on any failure
//! * `monotonicity` — propagate a noisy covariance chain and check det growth
//!
//! All outputs are deterministic in the config and seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use se23_preint::bias::bias_jacobian_closed_form;
use se23_preint::bias::ImuBias;
use se23_preint::factor::PreintegrationFactor;
use se23_preint::metrics::verify_monotonicity;
use se23_preint::propagation::PerturbationSide;

use se23_simkit::config::Config;
use se23_simkit::io;
use se23_simkit::runner;
use se23_simkit::trajectory::synthesize_imu;
use se23_simkit::verify::{run_suite, FaultInjection, VerifySuite};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "simkit",
    about = "IMU preintegration simulation and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an IMU log and truth trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Preintegrate an IMU log into a factor record.
    Preintegrate {
        #[arg(long)]
        config: PathBuf,
        /// IMU CSV to ingest; defaults to `<out>/imu.csv` from `simulate`.
        #[arg(long)]
        imu: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Propagate every configured scheme and compare against truth.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Run a property suite.
    Verify {
        #[arg(value_enum)]
        what: VerifySuite,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Deliberately break the checked quantity (test mode).
        #[arg(long, value_enum)]
        inject_fault: Option<FaultInjection>,
    },
    /// Propagate a noisy covariance chain and verify determinant growth.
    Monotonicity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn ensure_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {path:?}"))
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out } => {
            let config = Config::from_path(&config)?;
            let spec = config.trajectory.to_spec()?;
            let sensors = config.sensors.to_spec()?;
            let log = synthesize_imu(&config.earth, &spec, &sensors, config.seed)?;
            ensure_dir(&out)?;
            io::write_imu_csv(&out.join("imu.csv"), &log.samples, spec.rate_hz)?;
            io::write_truth_csv(&out.join("truth.csv"), &log.truth)?;
            eprintln!(
                "simulate: {} samples at {} Hz -> {}",
                log.samples.len(),
                spec.rate_hz,
                out.display()
            );
        }
        Command::Preintegrate { config, imu, out } => {
            let config = Config::from_path(&config)?;
            let spec = config.trajectory.to_spec()?;
            let sensors = config.sensors.to_spec()?;
            let imu_path = imu.unwrap_or_else(|| out.join("imu.csv"));
            let samples = io::read_imu_csv(&imu_path)?;
            if samples.is_empty() {
                bail!("IMU log {imu_path:?} is empty");
            }
            let scheme = config.schemes[0];
            let bias = ImuBias::new(sensors.initial_gyro_bias, sensors.initial_accel_bias);
            let initial = runner::nav_state_from_truth(
                &config.earth,
                &spec.truth(&config.earth, 0.0),
                config.variant,
                bias,
            );
            let (upsilon, gamma) =
                runner::preintegrate_window(&config.earth, &initial, &samples, scheme)?;
            let run = runner::run_stream(
                &config.earth,
                &initial,
                &samples,
                scheme,
                Some((&sensors.noise, PerturbationSide::RightLocal)),
            )?;
            let sigma = *run.covariances.last().expect("covariance chain");
            let jacobian = bias_jacobian_closed_form(&samples, &bias);
            let t_end = initial.epoch + upsilon.dt;
            let factor = PreintegrationFactor::new(
                config.variant,
                initial.epoch,
                t_end,
                upsilon,
                gamma,
                sigma,
                jacobian,
                bias,
            )?;
            ensure_dir(&out)?;
            let path = out.join("factor.json");
            std::fs::write(&path, factor.to_json()? + "\n")
                .with_context(|| format!("writing {path:?}"))?;
            eprintln!(
                "preintegrate: {} samples over {:.3} s -> {}",
                samples.len(),
                upsilon.dt,
                path.display()
            );
        }
        Command::Compare {
            config,
            out,
            format,
        } => {
            let started = Instant::now();
            let config = Config::from_path(&config)?;
            let spec = config.trajectory.to_spec()?;
            let sensors = config.sensors.to_spec()?;
            let report = runner::run_compare(
                &config.earth,
                &spec,
                &sensors,
                &config.schemes,
                config.variant,
                config.seed,
            )?;
            ensure_dir(&out)?;
            match format {
                OutputFormat::Json => io::write_json(&out.join("compare.json"), &report)?,
                OutputFormat::Csv => {
                    let mut text = String::from(
                        "scheme,attitude_error_deg,velocity_error,position_error,covariance_trace,covariance_d_opt,monotonicity_pass\n",
                    );
                    for s in &report.schemes {
                        text.push_str(&format!(
                            "{:?},{},{},{},{},{},{}\n",
                            s.scheme,
                            s.attitude_error_deg,
                            s.velocity_error,
                            s.position_error,
                            s.covariance_trace,
                            s.covariance_d_opt,
                            s.monotonicity_pass
                        ));
                    }
                    std::fs::write(out.join("compare.csv"), text)?;
                }
            }
            for s in &report.schemes {
                eprintln!(
                    "compare[{:?}]: att {:.3e} deg, vel {:.3e} m/s, pos {:.3e} m, monotone {}",
                    s.scheme,
                    s.attitude_error_deg,
                    s.velocity_error,
                    s.position_error,
                    s.monotonicity_pass
                );
            }
            eprintln!(
                "compare: finished in {:.2} s",
                started.elapsed().as_secs_f64()
            );
        }
        Command::Verify {
            what,
            seed,
            out,
            inject_fault,
        } => {
            let report = run_suite(what, seed, inject_fault);
            for c in &report.checks {
                eprintln!(
                    "verify[{}]: {} (observed {:.3e}, tolerance {:.3e})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.observed,
                    c.tolerance
                );
            }
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                io::write_json(&dir.join("verify.json"), &report)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            if !report.passed {
                std::process::exit(1);
            }
        }
        Command::Monotonicity { config, out } => {
            let config = Config::from_path(&config)?;
            let spec = config.trajectory.to_spec()?;
            let sensors = config.sensors.to_spec()?;
            let log = synthesize_imu(&config.earth, &spec, &sensors, config.seed)?;
            let bias = ImuBias::new(sensors.initial_gyro_bias, sensors.initial_accel_bias);
            let initial =
                runner::nav_state_from_truth(&config.earth, &log.truth[0], config.variant, bias);
            let run = runner::run_stream(
                &config.earth,
                &initial,
                &log.samples,
                config.schemes[0],
                Some((&sensors.noise, PerturbationSide::RightLocal)),
            )?;
            let report = verify_monotonicity(&run.covariances);
            ensure_dir(&out)?;
            io::write_json(&out.join("monotonicity.json"), &report)?;
            eprintln!(
                "monotonicity: {} steps, {} violations -> {}",
                report.log_dets.len() - 1,
                report.violations.len(),
                if report.pass { "pass" } else { "FAIL" }
            );
            if !report.pass {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
