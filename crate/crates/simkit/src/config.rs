//! TOML run configuration: earth constants, trajectory, sensors, schemes,
//! variant and seed.
//!
//! ```toml
//! seed = 42
//! variant = "transformed-ecef"
//! schemes = ["zero-order-hold-body", "two-sample-compensated"]
//!
//! [earth]                      # optional, defaults are WGS-84
//! omega_ie = 7.2921151467e-5
//!
//! [trajectory]
//! kind = "coning"              # static | constant-twist | coning | great-circle
//! lat_deg = 45.0
//! lon_deg = 0.0
//! height = 100.0
//! duration = 10.0
//! rate_hz = 400.0
//! amplitude_deg = 1.0
//! frequency_hz = 50.0
//!
//! [sensors]
//! gyro_psd = 1.0e-10
//! accel_psd = 1.0e-7
//! gyro_bias = { model = "gauss-markov", tau = 3600.0, sigma = 1.0e-5 }
//! accel_bias = { model = "none" }
//! ```

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use se23_preint::earth::{EarthParams, FrameVariant, GeodeticPosition};
use se23_preint::increment::SchemeKind;
use se23_preint::propagation::{BiasModel, NoiseParams};
use se23_preint::{Error, Result};

use crate::trajectory::{Motion, SensorErrorSpec, TrajectorySpec};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub height: f64,
    pub duration: f64,
    pub rate_hz: f64,
    #[serde(flatten)]
    pub motion: Motion,
}

impl TrajectoryConfig {
    pub fn to_spec(&self) -> Result<TrajectorySpec> {
        let spec = TrajectorySpec {
            anchor: GeodeticPosition::new(
                self.lat_deg.to_radians(),
                self.lon_deg.to_radians(),
                self.height,
            )?,
            duration: self.duration,
            rate_hz: self.rate_hz,
            motion: self.motion,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn default_bias_model() -> BiasModel {
    BiasModel::None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensorConfig {
    pub gyro_psd: f64,
    pub accel_psd: f64,
    #[serde(default = "default_bias_model")]
    pub gyro_bias: BiasModel,
    #[serde(default = "default_bias_model")]
    pub accel_bias: BiasModel,
    #[serde(default)]
    pub initial_gyro_bias: [f64; 3],
    #[serde(default)]
    pub initial_accel_bias: [f64; 3],
}

impl SensorConfig {
    pub fn to_spec(&self) -> Result<SensorErrorSpec> {
        let spec = SensorErrorSpec {
            noise: NoiseParams {
                gyro_psd: self.gyro_psd,
                accel_psd: self.accel_psd,
                gyro_bias: self.gyro_bias,
                accel_bias: self.accel_bias,
            },
            initial_gyro_bias: Vector3::from(self.initial_gyro_bias),
            initial_accel_bias: Vector3::from(self.initial_accel_bias),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn default_schema_version() -> u32 {
    1
}

/// A full run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub variant: FrameVariant,
    pub schemes: Vec<SchemeKind>,
    #[serde(default)]
    pub earth: EarthParams,
    pub trajectory: TrajectoryConfig,
    pub sensors: SensorConfig,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSpec(format!("reading {path:?}: {e}")))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::InvalidSpec(format!("parsing config: {e}")))?;
        if config.schemes.is_empty() {
            return Err(Error::InvalidSpec("at least one scheme is required".into()));
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 42
variant = "transformed-ecef"
schemes = ["zero-order-hold-body", "two-sample-compensated"]

[earth]
omega_ie = 7.2921151467e-5

[trajectory]
kind = "coning"
lat_deg = 45.0
lon_deg = 0.0
height = 100.0
duration = 10.0
rate_hz = 400.0
amplitude_deg = 1.0
frequency_hz = 50.0

[sensors]
gyro_psd = 1.0e-10
accel_psd = 1.0e-7
gyro_bias = { model = "gauss-markov", tau = 3600.0, sigma = 1.0e-5 }
accel_bias = { model = "none" }
initial_gyro_bias = [1.0e-5, 0.0, 0.0]
"#;

    #[test]
    fn parses_full_config() {
        let config = Config::from_toml(EXAMPLE).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.variant, FrameVariant::TransformedEcef);
        assert_eq!(config.schemes.len(), 2);
        let spec = config.trajectory.to_spec().unwrap();
        assert!(matches!(spec.motion, Motion::Coning { .. }));
        let sensors = config.sensors.to_spec().unwrap();
        assert!(matches!(
            sensors.noise.gyro_bias,
            BiasModel::GaussMarkov { .. }
        ));
        assert_eq!(sensors.initial_gyro_bias.x, 1.0e-5);
    }

    #[test]
    fn default_earth_is_wgs84() {
        let minimal = r#"
variant = "ned"
schemes = ["zero-order-hold-body"]
[trajectory]
kind = "static"
lat_deg = 0.0
lon_deg = 0.0
duration = 1.0
rate_hz = 100.0
[sensors]
gyro_psd = 0.0
accel_psd = 0.0
"#;
        let config = Config::from_toml(minimal).unwrap();
        assert_eq!(config.earth, EarthParams::default());
        assert_eq!(config.schema_version, 1);
    }

    #[test]
    fn rejects_empty_schemes() {
        let bad = r#"
variant = "ned"
schemes = []
[trajectory]
kind = "static"
lat_deg = 0.0
lon_deg = 0.0
duration = 1.0
rate_hz = 100.0
[sensors]
gyro_psd = 0.0
accel_psd = 0.0
"#;
        assert!(Config::from_toml(bad).is_err());
    }
}
