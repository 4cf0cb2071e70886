//! Run configuration: built-in presets, optional TOML file, then command
//! line overrides, in that precedence order. The fully resolved config is
//! echoed into the output directory before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use razn_autodiff::{AdamConfig, LrSchedule};
use razn_core::{RewardSign, ZoomConfig};
use razn_nets::{PolicyNetConfig, SegNetConfig};

use crate::exit::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub steps: u64,
    pub batch_size: usize,
    pub baseline: String,
    pub reward_sign: String,
    pub checkpoint_interval: u64,
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            steps: 5000,
            batch_size: 4,
            baseline: "razn".into(),
            reward_sign: "as-written".into(),
            checkpoint_interval: 1000,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoomSection {
    pub max_zoom_steps: usize,
    pub zoom_rate: usize,
    pub alpha: f64,
    pub j0_epsilon: f64,
    pub reward_clamp: f64,
}

impl Default for ZoomSection {
    fn default() -> Self {
        ZoomSection {
            max_zoom_steps: 1,
            zoom_rate: 2,
            alpha: 0.8,
            j0_epsilon: 0.05,
            reward_clamp: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub initial_lr: f64,
    /// Learning rate of the policy head; the segmentation rate when absent.
    pub policy_initial_lr: Option<f64>,
    pub lr_decay_factor: f64,
    pub lr_decay_period: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        // the schedule type itself defaults to 1e-2; the desk-scale run
        // config trains gentler so the small alternating diets stay stable
        OptimizerSection {
            initial_lr: 0.003,
            policy_initial_lr: Some(0.001),
            lr_decay_factor: 0.1,
            lr_decay_period: 50_000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub oversample_abnormal: f64,
    pub eval_modulus: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            oversample_abnormal: 0.5,
            eval_modulus: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub n_patches: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { n_patches: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub zoom: ZoomSection,
    pub optimizer: OptimizerSection,
    pub seg_net: SegNetConfig,
    pub policy_net: PolicyNetConfig,
    pub sampler: SamplerSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn desk() -> Self {
        RunConfig::default()
    }

    /// Full-width configuration at 256x256; valid but far beyond desk-CPU
    /// budgets.
    pub fn paper() -> Self {
        RunConfig {
            run: RunSection {
                steps: 200_000,
                ..RunSection::default()
            },
            optimizer: OptimizerSection {
                initial_lr: 0.01,
                policy_initial_lr: None,
                ..OptimizerSection::default()
            },
            seg_net: SegNetConfig::paper(),
            policy_net: PolicyNetConfig::paper(),
            ..RunConfig::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "desk" => Ok(RunConfig::desk()),
            "paper" => Ok(RunConfig::paper()),
            other => Err(CliError::Config(format!(
                "unknown preset `{other}` (want desk or paper)"
            ))),
        }
    }

    pub fn load_file(path: &Path, base: RunConfig) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        // a throwaway full parse first, for line-anchored syntax and
        // unknown-key errors
        let _: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // then overlay only the keys present in the file onto the base
        let mut merged = base;
        merge_from_toml(&mut merged, &text, path)?;
        Ok(merged)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.reward_sign()?;
        if self.run.batch_size == 0 {
            return Err(CliError::Config("batch_size must be >= 1".into()));
        }
        if self.run.steps == 0 {
            return Err(CliError::Config("steps must be >= 1".into()));
        }
        if razn_core::ModelKind::parse(&self.run.baseline).is_none() {
            return Err(CliError::Config(format!(
                "unknown baseline `{}` (want razn, scale1, scale2 or ms)",
                self.run.baseline
            )));
        }
        if !(0.0..=1.0).contains(&self.sampler.oversample_abnormal) {
            return Err(CliError::Config("oversample_abnormal must be in [0,1]".into()));
        }
        self.zoom_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn reward_sign(&self) -> Result<RewardSign, CliError> {
        self.run
            .reward_sign
            .parse::<RewardSign>()
            .map_err(CliError::Config)
    }

    pub fn model_kind(&self) -> razn_core::ModelKind {
        razn_core::ModelKind::parse(&self.run.baseline).expect("validated baseline")
    }

    pub fn zoom_config(&self) -> ZoomConfig {
        ZoomConfig {
            max_zoom_steps: self.zoom.max_zoom_steps,
            zoom_rate: self.zoom.zoom_rate,
            alpha: self.zoom.alpha,
            reward_sign: self.reward_sign().unwrap_or(RewardSign::AsWritten),
            j0_epsilon: self.zoom.j0_epsilon,
            reward_clamp: self.zoom.reward_clamp,
        }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.optimizer.initial_lr,
            decay_factor: self.optimizer.lr_decay_factor,
            decay_period: self.optimizer.lr_decay_period,
        }
    }

    pub fn policy_schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self
                .optimizer
                .policy_initial_lr
                .unwrap_or(self.optimizer.initial_lr),
            ..self.schedule()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.optimizer.beta1 as f32,
            beta2: self.optimizer.beta2 as f32,
            eps: self.optimizer.eps as f32,
            weight_decay: self.optimizer.weight_decay as f32,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Writes the resolved config into the output directory.
    pub fn echo_into(&self, out_dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Other(format!("create {}: {e}", out_dir.display())))?;
        let path = out_dir.join("config.resolved.toml");
        std::fs::write(&path, self.to_toml())
            .map_err(|e| CliError::Other(format!("write {}: {e}", path.display())))?;
        Ok(())
    }
}

impl PartialEq for RunConfig {
    fn eq(&self, other: &Self) -> bool {
        self.to_toml() == other.to_toml()
    }
}

fn merge_from_toml(base: &mut RunConfig, text: &str, path: &Path) -> Result<(), CliError> {
    let value: toml::Value = toml::from_str(text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut merged =
        toml::Value::try_from(&*base).map_err(|e| CliError::Other(e.to_string()))?;
    overlay(&mut merged, &value);
    *base = merged
        .try_into()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn overlay(dst: &mut toml::Value, src: &toml::Value) {
    match (dst, src) {
        (toml::Value::Table(d), toml::Value::Table(s)) => {
            for (k, v) in s {
                match d.get_mut(k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        d.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (d, s) => *d = s.clone(),
    }
}

/// Resolves a dataset path against RAZN_DATA_ROOT when relative.
pub fn resolve_dataset_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os("RAZN_DATA_ROOT") {
        Some(root) => Path::new(&root).join(path),
        None => path.to_path_buf(),
    }
}
