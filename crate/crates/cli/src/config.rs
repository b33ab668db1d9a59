//! Experiment configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use lamarl::behavior::{BehaviorSpec, SpecKind};
use lamarl::marl::TrainConfig;
use lamarl::swarm::{EnvConfig, RewardFn, ShapeLibrary};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardChoice {
    /// Reward built from the generated reward spec.
    Llm,
    /// Hand-designed baseline reward.
    Mdr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapesConfig {
    /// Shape file or directory of shape files.
    pub path: PathBuf,
}

impl Default for ShapesConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("shapes/letters"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorConfig {
    /// Policy spec file; the built-in reference prior when absent.
    pub policy: Option<PathBuf>,
    /// Reward spec file; the built-in reference reward when absent.
    pub reward: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeConfig {
    pub use_prior: bool,
    pub reward: RewardChoice,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            use_prior: true,
            reward: RewardChoice::Llm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_steps: usize,
    /// Trailing steps that enter the metric averages.
    pub window: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_steps: 500,
            window: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub shapes: ShapesConfig,
    pub behavior: BehaviorConfig,
    pub mode: ModeConfig,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            shapes: ShapesConfig::default(),
            behavior: BehaviorConfig::default(),
            mode: ModeConfig::default(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.shapes.path = resolve(base, &cfg.shapes.path);
        cfg.output_dir = resolve(base, &cfg.output_dir);
        if let Some(p) = &mut cfg.behavior.policy {
            *p = resolve(base, p);
        }
        if let Some(p) = &mut cfg.behavior.reward {
            *p = resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn policy_spec(&self) -> Result<BehaviorSpec, CliError> {
        match &self.behavior.policy {
            Some(p) => load_spec(p, SpecKind::Policy),
            None => Ok(BehaviorSpec::reference_policy(self.env.r_avoid, self.env.r_sense)),
        }
    }

    pub fn reward_spec(&self) -> Result<BehaviorSpec, CliError> {
        match &self.behavior.reward {
            Some(p) => load_spec(p, SpecKind::Reward),
            None => Ok(BehaviorSpec::reference_reward()),
        }
    }

    pub fn reward_fn(&self) -> Result<RewardFn, CliError> {
        Ok(match self.mode.reward {
            RewardChoice::Llm => RewardFn::Spec(self.reward_spec()?),
            RewardChoice::Mdr => RewardFn::Mdr,
        })
    }

    pub fn shape_library(&self) -> Result<ShapeLibrary, CliError> {
        ShapeLibrary::load(&self.shapes.path, self.env.scale).map_err(CliError::from)
    }

    /// Checks every section, the referenced files and the capacity of every
    /// shape.
    pub fn validate(&self) -> Result<ShapeLibrary, CliError> {
        self.env.validate()?;
        self.train.validate()?;
        if self.eval.window == 0 || self.eval.window > self.eval.n_steps {
            return Err(CliError::Config(format!(
                "eval.window must lie in 1..={}, got {}",
                self.eval.n_steps, self.eval.window
            )));
        }
        self.policy_spec()?
            .validate(Some(self.env.r_sense))
            .map_err(|e| CliError::Config(format!("policy spec: {e}")))?;
        self.reward_spec()?
            .validate(None)
            .map_err(|e| CliError::Config(format!("reward spec: {e}")))?;
        let lib = self.shape_library()?;
        lib.check_capacity(&self.env)?;
        Ok(lib)
    }
}

pub fn load_spec(path: &Path, kind: SpecKind) -> Result<BehaviorSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec = BehaviorSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if spec.kind() != kind {
        return Err(CliError::Config(format!(
            "{}: expected a {kind:?} spec, found {:?}",
            path.display(),
            spec.kind()
        )));
    }
    Ok(spec)
}
