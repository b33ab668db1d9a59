//! Training runs: run directory layout, manifest, CSV log and checkpoint.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lamarl::marl::trainer::{rng_stream, streams};
use lamarl::marl::{Checkpoint, EpisodeLog, Trainer};
use lamarl::swarm::SwarmEnv;
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;
/// First line of every training log; bump when columns change.
pub const TRAIN_LOG_SCHEMA: &str = "# lamarl train_log v1";
pub const TRAIN_LOG_COLUMNS: [&str; 7] = [
    "episode",
    "mean_reward",
    "M1",
    "M2",
    "actor_loss",
    "critic_loss",
    "collisions",
];

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Incomplete,
    Complete,
}

/// Everything needed to reproduce a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub status: RunStatus,
    pub episodes_completed: usize,
    pub obs_dim: usize,
    pub error: Option<String>,
    /// Wall-clock training time; absent while the run is in progress.
    #[serde(default)]
    pub elapsed_seconds: Option<f64>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_text(
            &dir.join(MANIFEST_FILE),
            &serde_json::to_string_pretty(self).expect("manifest serializes"),
        )
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Append-only training log, flushed after every row.
pub struct TrainLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TrainLogWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(&format!("{TRAIN_LOG_SCHEMA}\n{}", TRAIN_LOG_COLUMNS.join(",")))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| CliError::io(&self.path, e))
    }

    pub fn append(&mut self, l: &EpisodeLog) -> Result<(), CliError> {
        self.line(&format!(
            "{},{},{},{},{},{},{}",
            l.episode,
            l.mean_reward,
            l.m1,
            l.m2,
            opt(l.actor_loss),
            opt(l.critic_loss),
            l.collisions
        ))
    }
}

/// Reads a training log written by [`TrainLogWriter`].
pub fn read_train_log(path: &Path) -> Result<Vec<EpisodeLog>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRAIN_LOG_SCHEMA) {
        return Err(CliError::Config(format!(
            "{}: missing schema line {TRAIN_LOG_SCHEMA:?}",
            path.display()
        )));
    }
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != TRAIN_LOG_COLUMNS {
        return Err(CliError::Config(format!("{}: unexpected columns {header:?}", path.display())));
    }
    let bad = |what: &str| CliError::Config(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(TRAIN_LOG_COLUMNS[k]));
        let of = |k: usize| -> Result<Option<f64>, CliError> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                f(k).map(Some)
            }
        };
        out.push(EpisodeLog {
            episode: rec[0].parse().map_err(|_| bad("episode"))?,
            mean_reward: f(1)?,
            m1: f(2)?,
            m2: f(3)?,
            actor_loss: of(4)?,
            critic_loss: of(5)?,
            collisions: rec[6].parse().map_err(|_| bad("collisions"))?,
        });
    }
    Ok(out)
}

pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub logs: Vec<EpisodeLog>,
    pub checkpoint: Checkpoint,
}

/// Trains from scratch into `run_dir`. The manifest is written first with
/// status `incomplete` and rewritten when the run ends either way.
pub fn cmd_train(cfg: &ExperimentConfig, run_dir: &Path) -> Result<TrainOutcome, CliError> {
    let mut cfg = cfg.clone();
    if !cfg.mode.use_prior {
        cfg.train.alpha = 0.0;
    }
    let library = cfg.validate()?;
    if cfg.env.episode_length != cfg.train.episode_length {
        return Err(CliError::Config(format!(
            "env.episode_length ({}) and train.episode_length ({}) differ",
            cfg.env.episode_length, cfg.train.episode_length
        )));
    }
    create_dir(run_dir)?;
    let seed = cfg.train.seed;
    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        command: "train".into(),
        seed,
        status: RunStatus::Incomplete,
        episodes_completed: 0,
        obs_dim: cfg.env.obs_dim(),
        error: None,
        elapsed_seconds: None,
        config: cfg.clone(),
    };
    let started = Instant::now();
    manifest.write(run_dir)?;

    let prior = if cfg.mode.use_prior { Some(cfg.policy_spec()?) } else { None };
    let mut env = SwarmEnv::new(cfg.env.clone(), library, cfg.reward_fn()?, rng_stream(seed, streams::ENV))?;
    let mut trainer = Trainer::new(cfg.train.clone(), cfg.env.obs_dim())?;
    let mut writer = TrainLogWriter::create(&run_dir.join(TRAIN_LOG_FILE))?;
    let mut logs = Vec::with_capacity(cfg.train.episodes);
    let result: Result<(), CliError> = (|| {
        while trainer.episode() < cfg.train.episodes {
            let log = trainer.run_episode(&mut env, prior.as_ref())?;
            writer.append(&log)?;
            if log.episode % 50 == 0 {
                info!(
                    "episode {}: reward {:.3} M1 {:.3} M2 {:.3} collisions {}",
                    log.episode, log.mean_reward, log.m1, log.m2, log.collisions
                );
            }
            logs.push(log);
        }
        Ok(())
    })();
    manifest.episodes_completed = logs.len();
    manifest.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    let checkpoint = trainer.checkpoint();
    if let Err(e) = result {
        manifest.error = Some(e.to_string());
        manifest.write(run_dir)?;
        return Err(e);
    }
    write_text(&run_dir.join(CHECKPOINT_FILE), &checkpoint.to_json())?;
    manifest.status = RunStatus::Complete;
    manifest.write(run_dir)?;
    Ok(TrainOutcome {
        run_dir: run_dir.to_path_buf(),
        logs,
        checkpoint,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Checkpoint::from_json(&text).map_err(CliError::from)
}
