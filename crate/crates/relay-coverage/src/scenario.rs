//! Bundled scenario parameters: antennas, powers, geometry scalars, target
//! rate, and Monte Carlo / solver settings. This is the unit of input the
//! command-line front end parses and echoes back.

use serde::{Deserialize, Serialize};

use crate::channel::{AntennaConfig, PowerBudget};
use crate::error::{Error, Result};

/// Default Monte Carlo sample count used when a scenario does not specify
/// one. Standard errors are always reported so callers can tighten.
pub const DEFAULT_SAMPLES: usize = 20_000;

/// Default bisection distance tolerance.
pub const DEFAULT_DISTANCE_TOL: f64 = 1e-4;

/// Monte Carlo estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McParams {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            seed: 1,
        }
    }
}

/// Root-finding settings for the relay-placement solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Bisection terminates once the bracket is narrower than this.
    pub distance_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            distance_tol: DEFAULT_DISTANCE_TOL,
        }
    }
}

/// Complete scenario description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub antennas: AntennaConfig,
    pub powers: PowerBudget,
    /// Distance-based power attenuation exponent.
    pub path_loss_exp: f64,
    /// Source-relay distance (relay sits on the positive x-axis).
    pub relay_x: f64,
    /// Desired transmission rate in bps/Hz.
    pub target_rate: f64,
    pub mc: McParams,
    pub solver: SolverParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exp > 0.0) {
            return Err(Error::OutOfRange(format!(
                "path-loss exponent must be positive, got {}",
                self.path_loss_exp
            )));
        }
        if !(self.relay_x > 0.0) {
            return Err(Error::DegenerateGeometry(format!(
                "relay distance must be positive, got {}",
                self.relay_x
            )));
        }
        if !(self.target_rate > 0.0) || !self.target_rate.is_finite() {
            return Err(Error::OutOfRange(format!(
                "target rate must be positive and finite, got {}",
                self.target_rate
            )));
        }
        if self.mc.n_samples < 1 {
            return Err(Error::OutOfRange("sample count must be >= 1".into()));
        }
        if !(self.solver.distance_tol > 0.0) {
            return Err(Error::OutOfRange(format!(
                "solver tolerance must be positive, got {}",
                self.solver.distance_tol
            )));
        }
        Ok(())
    }
}

impl Default for ScenarioConfig {
    /// Symmetric two-antenna nodes, 10 dB powers, path-loss exponent 3.52,
    /// relay at 0.95, target rate 5.5 bps/Hz.
    fn default() -> Self {
        Self {
            antennas: AntennaConfig::symmetric(2).expect("valid default antennas"),
            powers: PowerBudget::from_db(10.0, 10.0),
            path_loss_exp: 3.52,
            relay_x: 0.95,
            target_rate: 5.5,
            mc: McParams::default(),
            solver: SolverParams::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let s = ScenarioConfig::default();
        s.validate().unwrap();
        assert_eq!(s.antennas.src_tx, 2);
        assert!((s.powers.source - 10.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let s = ScenarioConfig {
            target_rate: 0.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());

        let s = ScenarioConfig {
            relay_x: -1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());

        let s = ScenarioConfig {
            mc: McParams {
                n_samples: 0,
                seed: 1,
            },
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
