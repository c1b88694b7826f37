//! Training configuration and the learning-rate schedule.
//!
//! Configs are plain `key = value` text, one field per line, `#` comments.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::networks::{ArchScale, LossWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub iters_per_epoch: usize,
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub lr_step_epochs: usize,
    pub momentum: f64,
    pub seed: u64,
    pub stage: u8,
    pub blocks: usize,
    pub head_blocks: usize,
    pub channels: usize,
    pub omega_detail: f64,
    pub omega_laplacian: f64,
    pub patch_size: usize,
    pub patches_per_image: usize,
}

impl Default for TrainConfig {
    /// Desk scale: 3-block, 16-channel subnets and 2,000 iterations per stage.
    fn default() -> Self {
        Self {
            epochs: 20,
            iters_per_epoch: 100,
            batch_size: 16,
            lr_start: 1e-4,
            lr_end: 1e-5,
            lr_step_epochs: 5,
            momentum: 0.0,
            seed: 0,
            stage: 1,
            blocks: ArchScale::DESK.blocks,
            head_blocks: ArchScale::DESK.head_blocks,
            channels: ArchScale::DESK.channels,
            omega_detail: 1.0,
            omega_laplacian: 1.0,
            patch_size: 32,
            patches_per_image: 16,
        }
    }
}

impl TrainConfig {
    /// 200 epochs × 1,000 iterations, batch 64, learning rate 1e-5 stepping
    /// down to 1e-6 every 50 epochs, plain SGD, 16/6-block 64-channel nets.
    pub fn paper() -> Self {
        Self {
            epochs: 200,
            iters_per_epoch: 1000,
            batch_size: 64,
            lr_start: 1e-5,
            lr_end: 1e-6,
            lr_step_epochs: 50,
            momentum: 0.0,
            blocks: ArchScale::PAPER.blocks,
            head_blocks: ArchScale::PAPER.head_blocks,
            channels: ArchScale::PAPER.channels,
            ..Self::default()
        }
    }

    pub fn arch(&self) -> ArchScale {
        ArchScale {
            blocks: self.blocks,
            head_blocks: self.head_blocks,
            channels: self.channels,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            detail: self.omega_detail,
            laplacian: self.omega_laplacian,
        }
    }

    pub fn total_iters(&self) -> usize {
        self.epochs * self.iters_per_epoch
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("iters_per_epoch", self.iters_per_epoch),
            ("batch_size", self.batch_size),
            ("lr_step_epochs", self.lr_step_epochs),
            ("blocks", self.blocks),
            ("head_blocks", self.head_blocks),
            ("channels", self.channels),
            ("patch_size", self.patch_size),
            ("patches_per_image", self.patches_per_image),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.lr_end > 0.0) || !(self.lr_start >= self.lr_end) || !self.lr_start.is_finite() {
            return Err(Error::Config(format!(
                "need lr_start >= lr_end > 0, got {} and {}",
                self.lr_start, self.lr_end
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} not in [0, 1)", self.momentum)));
        }
        if !(1..=3).contains(&self.stage) {
            return Err(Error::Config(format!("stage {} not in 1..=3", self.stage)));
        }
        if self.omega_detail < 0.0 || self.omega_laplacian < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "iters_per_epoch" => self.iters_per_epoch = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr_start" => self.lr_start = parse(key, value)?,
            "lr_end" => self.lr_end = parse(key, value)?,
            "lr_step_epochs" => self.lr_step_epochs = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "stage" => self.stage = parse(key, value)?,
            "blocks" => self.blocks = parse(key, value)?,
            "head_blocks" => self.head_blocks = parse(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "omega_detail" => self.omega_detail = parse(key, value)?,
            "omega_laplacian" => self.omega_laplacian = parse(key, value)?,
            "patch_size" => self.patch_size = parse(key, value)?,
            "patches_per_image" => self.patches_per_image = parse(key, value)?,
            "scale" => match value {
                "paper" => {
                    let (seed, stage) = (self.seed, self.stage);
                    *self = Self { seed, stage, ..Self::paper() };
                }
                "desk" => {
                    let (seed, stage) = (self.seed, self.stage);
                    *self = Self { seed, stage, ..Self::default() };
                }
                other => return Err(Error::Config(format!("unknown scale {other:?}"))),
            },
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a config file body on top of the desk defaults. A `scale`
    /// line, if present, should come first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("epochs", self.epochs.to_string());
        kv("iters_per_epoch", self.iters_per_epoch.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("lr_start", format!("{:e}", self.lr_start));
        kv("lr_end", format!("{:e}", self.lr_end));
        kv("lr_step_epochs", self.lr_step_epochs.to_string());
        kv("momentum", self.momentum.to_string());
        kv("seed", self.seed.to_string());
        kv("stage", self.stage.to_string());
        kv("blocks", self.blocks.to_string());
        kv("head_blocks", self.head_blocks.to_string());
        kv("channels", self.channels.to_string());
        kv("omega_detail", self.omega_detail.to_string());
        kv("omega_laplacian", self.omega_laplacian.to_string());
        kv("patch_size", self.patch_size.to_string());
        kv("patches_per_image", self.patches_per_image.to_string());
        s
    }
}

/// Staircase decay from `lr_start` to `lr_end`, one step every
/// `lr_step_epochs`, in `epochs / lr_step_epochs` equal levels.
///
/// With the paper settings this gives 1e-5, 7e-6, 4e-6, 1e-6.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    let levels = cfg.epochs / cfg.lr_step_epochs;
    if levels < 2 {
        return cfg.lr_start;
    }
    let step = (epoch / cfg.lr_step_epochs) as f64;
    let lr = cfg.lr_start - (cfg.lr_start - cfg.lr_end) * step / (levels - 1) as f64;
    lr.max(cfg.lr_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_schedule() {
        let cfg = TrainConfig::paper();
        assert_eq!(lr_schedule(0, &cfg), 1e-5);
        assert_eq!(lr_schedule(49, &cfg), 1e-5);
        assert!((lr_schedule(50, &cfg) - 7e-6).abs() < 1e-18);
        assert!((lr_schedule(100, &cfg) - 4e-6).abs() < 1e-18);
        assert!((lr_schedule(150, &cfg) - 1e-6).abs() < 1e-18);
        assert!((lr_schedule(199, &cfg) - 1e-6).abs() < 1e-18);
        assert!((lr_schedule(400, &cfg) - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn single_level_schedule_is_constant() {
        let cfg = TrainConfig {
            epochs: 3,
            lr_step_epochs: 5,
            ..TrainConfig::default()
        };
        assert_eq!(lr_schedule(2, &cfg), cfg.lr_start);
    }

    #[test]
    fn text_round_trip() {
        let cfg = TrainConfig {
            seed: 99,
            stage: 3,
            omega_laplacian: 0.0,
            ..TrainConfig::paper()
        };
        assert_eq!(TrainConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parse_errors() {
        assert!(TrainConfig::parse("epochs = 3\nbogus = 1").is_err());
        assert!(TrainConfig::parse("epochs 3").is_err());
        assert!(TrainConfig::parse("epochs = -3").is_err());
        assert!(TrainConfig::parse("lr_start = 1e-6\nlr_end = 1e-5").is_err());
        assert!(TrainConfig::parse("stage = 4").is_err());
        let cfg = TrainConfig::parse("# comment\nscale = paper\nseed = 5 # trailing\n").unwrap();
        assert_eq!(cfg.epochs, 200);
        assert_eq!(cfg.seed, 5);
    }
}
