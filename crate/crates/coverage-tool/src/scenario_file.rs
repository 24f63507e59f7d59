//! Flat key-value scenario files.
//!
//! One `key = value` pair per line, `#` for comments. Keys: `m1`, `m2`,
//! `n2`, `n3`, `p1_db`, `p2_db`, `eta`, `u2`, `rate`, `samples`, `seed`,
//! `grid.x_min`, `grid.x_max`, `grid.y_max`, `grid.resolution`. Unknown
//! keys are rejected. Missing keys fall back to the built-in defaults
//! (and `COVERAGE_TOOL_SAMPLES` for the sample count).
//!
//! Powers live in dB only here, at the tool boundary; they are converted
//! to linear units exactly once when the scenario is handed to the library.

use relay_coverage::{
    AntennaConfig, GridSpec, McParams, PowerBudget, ScenarioConfig, SolverParams,
};

/// Environment variable overriding the default sample count.
pub const SAMPLES_ENV_VAR: &str = "COVERAGE_TOOL_SAMPLES";

/// Scenario as specified at the tool boundary (powers in dB).
#[derive(Debug, Clone, PartialEq)]
pub struct ToolScenario {
    pub m1: usize,
    pub m2: usize,
    pub n2: usize,
    pub n3: usize,
    pub p1_db: f64,
    pub p2_db: f64,
    pub eta: f64,
    pub u2: f64,
    pub rate: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Set when the sample count came from [`SAMPLES_ENV_VAR`].
    pub samples_from_env: bool,
}

impl Default for ToolScenario {
    fn default() -> Self {
        let (samples, samples_from_env) = match std::env::var(SAMPLES_ENV_VAR) {
            Ok(v) => match v.parse::<usize>() {
                Ok(n) if n > 0 => (n, true),
                _ => (relay_coverage::DEFAULT_SAMPLES, false),
            },
            Err(_) => (relay_coverage::DEFAULT_SAMPLES, false),
        };
        Self {
            m1: 2,
            m2: 2,
            n2: 2,
            n3: 2,
            p1_db: 10.0,
            p2_db: 10.0,
            eta: 3.52,
            u2: 0.95,
            rate: 5.5,
            samples,
            seed: 1,
            grid: GridSpec::default(),
            samples_from_env,
        }
    }
}

impl ToolScenario {
    /// Parse a key-value scenario file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut scenario = Self::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    line_no + 1
                ));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| format!("line {}: invalid {what} '{value}'", line_no + 1);
            match key {
                "m1" => scenario.m1 = value.parse().map_err(|_| bad("antenna count"))?,
                "m2" => scenario.m2 = value.parse().map_err(|_| bad("antenna count"))?,
                "n2" => scenario.n2 = value.parse().map_err(|_| bad("antenna count"))?,
                "n3" => scenario.n3 = value.parse().map_err(|_| bad("antenna count"))?,
                "p1_db" => scenario.p1_db = value.parse().map_err(|_| bad("power"))?,
                "p2_db" => scenario.p2_db = value.parse().map_err(|_| bad("power"))?,
                "eta" => scenario.eta = value.parse().map_err(|_| bad("exponent"))?,
                "u2" => scenario.u2 = value.parse().map_err(|_| bad("distance"))?,
                "rate" => scenario.rate = value.parse().map_err(|_| bad("rate"))?,
                "samples" => {
                    scenario.samples = value.parse().map_err(|_| bad("sample count"))?;
                    scenario.samples_from_env = false;
                }
                "seed" => scenario.seed = value.parse().map_err(|_| bad("seed"))?,
                "grid.x_min" => {
                    scenario.grid.x_min = value.parse().map_err(|_| bad("coordinate"))?
                }
                "grid.x_max" => {
                    scenario.grid.x_max = value.parse().map_err(|_| bad("coordinate"))?
                }
                "grid.y_max" => {
                    scenario.grid.y_max = value.parse().map_err(|_| bad("coordinate"))?
                }
                "grid.resolution" => {
                    scenario.grid.resolution = value.parse().map_err(|_| bad("resolution"))?
                }
                other => return Err(format!("line {}: unknown key '{other}'", line_no + 1)),
            }
        }
        Ok(scenario)
    }

    /// Emit the scenario in the same key-value format. Feeding the echo
    /// back through [`ToolScenario::parse`] reproduces the scenario
    /// exactly (floats print in round-trip precision).
    pub fn echo(&self) -> String {
        format!(
            "m1 = {}\nm2 = {}\nn2 = {}\nn3 = {}\np1_db = {}\np2_db = {}\neta = {}\nu2 = {}\n\
             rate = {}\nsamples = {}\nseed = {}\ngrid.x_min = {}\ngrid.x_max = {}\n\
             grid.y_max = {}\ngrid.resolution = {}\n",
            self.m1,
            self.m2,
            self.n2,
            self.n3,
            self.p1_db,
            self.p2_db,
            self.eta,
            self.u2,
            self.rate,
            self.samples,
            self.seed,
            self.grid.x_min,
            self.grid.x_max,
            self.grid.y_max,
            self.grid.resolution,
        )
    }

    /// Convert to the library scenario (dB to linear happens here, once).
    pub fn to_config(&self) -> Result<ScenarioConfig, relay_coverage::Error> {
        let antennas = AntennaConfig::new(self.m1, self.m2, self.n2, self.n3)?;
        let config = ScenarioConfig {
            antennas,
            powers: PowerBudget::from_db(self.p1_db, self.p2_db),
            path_loss_exp: self.eta,
            relay_x: self.u2,
            target_rate: self.rate,
            mc: McParams {
                n_samples: self.samples,
                seed: self.seed,
            },
            solver: SolverParams::default(),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_defaults() {
        let s = ToolScenario::parse("u2 = 1.05\nrate = 4\n\n# comment\nseed = 9\n").unwrap();
        assert_eq!(s.u2, 1.05);
        assert_eq!(s.rate, 4.0);
        assert_eq!(s.seed, 9);
        assert_eq!(s.m1, 2);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ToolScenario::parse("bogus = 1").is_err());
        assert!(ToolScenario::parse("u2 1.0").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let s = ToolScenario {
            u2: 0.123456789012345,
            p1_db: 12.7,
            grid: GridSpec {
                resolution: 0.025,
                ..GridSpec::default()
            },
            ..ToolScenario::default()
        };
        let parsed = ToolScenario::parse(&s.echo()).unwrap();
        assert_eq!(parsed, s);
    }
}
