//! Experiment configuration, `key = value` config files and validation.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::pulse::{operation_region_ok, DEFAULT_TAPS};
use crate::radius_net::{parse_key_values, parse_value, TrainingConfig};
use crate::{Error, Result};

/// Which radius strategies a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    Noise,
    Learned,
    Both,
}

impl StrategyChoice {
    pub fn runs_noise(self) -> bool {
        matches!(self, StrategyChoice::Noise | StrategyChoice::Both)
    }

    pub fn runs_learned(self) -> bool {
        matches!(self, StrategyChoice::Learned | StrategyChoice::Both)
    }
}

impl FromStr for StrategyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noise" => Ok(StrategyChoice::Noise),
            "learned" | "dl" => Ok(StrategyChoice::Learned),
            "both" => Ok(StrategyChoice::Both),
            other => Err(Error::invalid(format!(
                "unknown radius strategy {other:?} (expected noise, learned or both)"
            ))),
        }
    }
}

impl std::fmt::Display for StrategyChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyChoice::Noise => "noise",
            StrategyChoice::Learned => "learned",
            StrategyChoice::Both => "both",
        })
    }
}

/// Everything a batch experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tau: f64,
    pub beta_h: f64,
    pub beta_v: f64,
    pub num_taps: usize,
    /// Symbols per FTN block, `N`.
    pub block_len: usize,
    /// Candidate list size, `N_L`.
    pub list_size: usize,
    pub ebn0_grid_db: Vec<f64>,
    /// Eb/N0 used by `generate-data`.
    pub train_ebn0_db: f64,
    /// FTN blocks per grid point (or training blocks for `generate-data`).
    pub num_blocks: usize,
    pub coded: bool,
    /// Information bits per coded frame. The terminated codeword length
    /// must be a multiple of `block_len`.
    pub info_bits: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub strategy: StrategyChoice,
    /// Miss probability of the noise-variance radius.
    pub epsilon: f64,
    /// Count the lattice points inside each sphere (diagnostic).
    pub sphere_counts: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tau: 0.6,
            beta_h: 0.35,
            beta_v: 0.12,
            num_taps: DEFAULT_TAPS,
            block_len: 25,
            list_size: 32,
            ebn0_grid_db: vec![4.0, 6.0, 8.0, 10.0],
            train_ebn0_db: 8.0,
            num_blocks: 10,
            coded: false,
            info_bits: 94,
            master_seed: 1,
            output_dir: PathBuf::from("out"),
            strategy: StrategyChoice::Both,
            epsilon: 0.01,
            sphere_counts: true,
            epochs: 100,
            learning_rate: 1e-4,
            batch_size: 20,
            patience: 10,
        }
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::invalid(format!("expected a boolean, got {other:?}"))),
    }
}

/// Parses `4,6,8` or `4:2:10` (start:step:stop, inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |e: std::num::ParseFloatError| Error::invalid(format!("bad Eb/N0 grid {s:?}: {e}"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].parse().map_err(bad)?;
        let step: f64 = parts[1].parse().map_err(bad)?;
        let stop: f64 = parts[2].parse().map_err(bad)?;
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid(format!("bad Eb/N0 range {s:?}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(bad))
        .collect()
}

impl ExperimentConfig {
    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = Path::new("<config>");
        let v = value.trim();
        match key {
            "tau" => self.tau = parse_value(p, 0, key, v)?,
            "beta_h" => self.beta_h = parse_value(p, 0, key, v)?,
            "beta_v" => self.beta_v = parse_value(p, 0, key, v)?,
            "num_taps" => self.num_taps = parse_value(p, 0, key, v)?,
            "block_len" | "n" => self.block_len = parse_value(p, 0, key, v)?,
            "list_size" | "n_l" => self.list_size = parse_value(p, 0, key, v)?,
            "ebn0_grid" | "ebn0_grid_db" => self.ebn0_grid_db = parse_grid(v)?,
            "train_ebn0_db" => self.train_ebn0_db = parse_value(p, 0, key, v)?,
            "num_blocks" => self.num_blocks = parse_value(p, 0, key, v)?,
            "coded" => self.coded = parse_bool(v)?,
            "info_bits" => self.info_bits = parse_value(p, 0, key, v)?,
            "master_seed" | "seed" => self.master_seed = parse_value(p, 0, key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "strategy" | "radius_strategy" => self.strategy = v.parse()?,
            "epsilon" => self.epsilon = parse_value(p, 0, key, v)?,
            "sphere_counts" => self.sphere_counts = parse_bool(v)?,
            "epochs" => self.epochs = parse_value(p, 0, key, v)?,
            "learning_rate" => self.learning_rate = parse_value(p, 0, key, v)?,
            "batch_size" => self.batch_size = parse_value(p, 0, key, v)?,
            "patience" => self.patience = parse_value(p, 0, key, v)?,
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (line, key, value) in parse_key_values(&text, path)? {
            self.set(&key, &value).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Checks everything except the operation region.
    pub fn validate_basic(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid(format!("tau {} outside (0, 1]", self.tau)));
        }
        for (name, b) in [("beta_h", self.beta_h), ("beta_v", self.beta_v)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} {b} outside [0, 1]")));
            }
        }
        if self.num_taps == 0 {
            return Err(Error::invalid("num_taps must be positive"));
        }
        Ok(())
    }

    /// Full validation for anything that simulates the link.
    pub fn validate(&self) -> Result<()> {
        self.validate_basic()?;
        if !operation_region_ok(self.tau, self.beta_h)? {
            return Err(Error::OperationRegionViolation {
                tau: self.tau,
                beta_h: self.beta_h,
            });
        }
        if self.block_len == 0 || self.block_len > crate::detector::MAX_BLOCK_LEN {
            return Err(Error::invalid(format!(
                "block length {} outside [1, {}]",
                self.block_len,
                crate::detector::MAX_BLOCK_LEN
            )));
        }
        if self.list_size == 0
            || (self.block_len < 64 && self.list_size as u128 > 1u128 << self.block_len)
        {
            return Err(Error::invalid(format!(
                "list size {} must be in [1, 2^{}]",
                self.list_size, self.block_len
            )));
        }
        if self.ebn0_grid_db.is_empty() || self.ebn0_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Eb/N0 grid must be non-empty and finite"));
        }
        if self.num_blocks == 0 {
            return Err(Error::invalid("num_blocks must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.coded {
            let coded_len = 2 * (self.info_bits + 6);
            if self.info_bits == 0 || !coded_len.is_multiple_of(self.block_len) {
                return Err(Error::invalid(format!(
                    "codeword of {} info bits has {coded_len} coded bits, not a multiple of N = {}",
                    self.info_bits, self.block_len
                )));
            }
        }
        self.training_config().validate()
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.master_seed,
            patience: (self.patience > 0).then_some(self.patience),
            ..TrainingConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.beta_h, c.beta_v, c.block_len, c.list_size),
            (0.35, 0.12, 25, 32)
        );
        assert_eq!(2 * (c.info_bits + 6), 8 * c.block_len);
    }

    #[test]
    fn rejects_out_of_region_tau() {
        let c = ExperimentConfig {
            tau: 0.9,
            ..Default::default()
        };
        assert!(matches!(
            c.validate(),
            Err(Error::OperationRegionViolation { .. })
        ));
        assert!(c.validate_basic().is_ok());
        let edge = ExperimentConfig {
            tau: 1.0 / 1.35,
            ..Default::default()
        };
        assert!(edge.validate().is_err());
    }

    #[test]
    fn rejects_bad_sizes() {
        let c = ExperimentConfig {
            block_len: 4,
            list_size: 17,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            coded: true,
            info_bits: 90,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("4, 6,8").unwrap(), vec![4.0, 6.0, 8.0]);
        assert_eq!(parse_grid("4:2:10").unwrap(), vec![4.0, 6.0, 8.0, 10.0]);
        assert!(parse_grid("4:0:10").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn config_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(
            &p,
            "# test\ntau = 0.74\nebn0_grid = 8\ncoded = true\nstrategy = noise\n",
        )
        .unwrap();
        let mut c = ExperimentConfig::default();
        c.apply_file(&p).unwrap();
        assert_eq!(c.tau, 0.74);
        assert_eq!(c.ebn0_grid_db, vec![8.0]);
        assert!(c.coded);
        assert_eq!(c.strategy, StrategyChoice::Noise);
        std::fs::write(&p, "tau = 0.7\nbogus = 1\n").unwrap();
        assert!(matches!(
            c.apply_file(&p),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
