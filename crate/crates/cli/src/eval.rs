//! Deterministic evaluation rollouts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lamarl::behavior::BehaviorSpec;
use lamarl::geometry::Vec2;
use lamarl::marl::trainer::{policy_actions, prior_action, rng_stream, streams, Real};
use lamarl::marl::Mlp;
use lamarl::region::capacity_check;
use lamarl::swarm::{EnvConfig, Observation, RewardFn, ShapeLibrary, SwarmEnv};
use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

pub const EVAL_SCHEMA: &str = "# lamarl eval v1";
pub const EVAL_FILE: &str = "eval.csv";
pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";

/// What drives the robots during a rollout.
pub enum Controller<'a> {
    Actor(&'a Mlp<Real>),
    Prior(&'a BehaviorSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub shape: String,
    /// `ok`, or `skipped` when the shape fails the capacity check.
    pub status: String,
    pub m1_mean: f64,
    pub m1_std: f64,
    pub m2_mean: f64,
    pub m2_std: f64,
    /// Collision pairs summed over the metric window.
    pub collisions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub n_steps: usize,
    pub window: usize,
    pub seed: u64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One deterministic rollout on shape `idx` of the environment's library.
/// `on_step` sees every step's positions and metrics.
pub fn rollout<R: rand::RngCore>(
    env: &mut SwarmEnv<R>,
    idx: usize,
    controller: &Controller,
    settings: &EvalSettings,
    mut on_step: impl FnMut(usize, &[Vec2], f64, f64, usize),
) -> Result<EvalRow, CliError> {
    let cfg = env.config().clone();
    let mut views = env.reset_with_shape(idx)?;
    let (mut m1s, mut m2s, mut collisions) = (Vec::new(), Vec::new(), 0);
    for t in 0..settings.n_steps {
        let actions: Vec<[Real; 2]> = match controller {
            Controller::Actor(actor) => {
                let obs: Vec<Observation> = views
                    .iter()
                    .map(|v| Observation::from_view(v, cfg.n_hn, cfg.n_hc))
                    .collect();
                policy_actions(actor, &obs)
            }
            Controller::Prior(spec) => views
                .iter()
                .map(|v| prior_action(v, spec))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("policy spec: {e}")))?,
        };
        let forces: Vec<Vec2> = actions
            .iter()
            .map(|a| Vec2::new(a[0] as f64 * cfg.f_max, a[1] as f64 * cfg.f_max))
            .collect();
        let step = env.step(&forces)?;
        let m1 = env.coverage();
        let m2 = env.uniformity().unwrap_or(f64::NAN);
        on_step(t, &env.swarm().positions(), m1, m2, step.collisions.len());
        if t + settings.window >= settings.n_steps {
            m1s.push(m1);
            m2s.push(m2);
            collisions += step.collisions.len();
        }
        views = step.views;
    }
    let (m1_mean, m1_std) = mean_std(&m1s);
    let (m2_mean, m2_std) = mean_std(&m2s);
    Ok(EvalRow {
        shape: env.shape_name().to_string(),
        status: "ok".into(),
        m1_mean,
        m1_std,
        m2_mean,
        m2_std,
        collisions,
    })
}

/// Rolls out every shape of the library and writes `eval.csv` and
/// `trajectories.jsonl` into `out_dir` when given.
pub fn cmd_eval(
    controller: &Controller,
    env_cfg: &EnvConfig,
    library: &ShapeLibrary,
    reward: RewardFn,
    settings: &EvalSettings,
    out_dir: Option<&Path>,
) -> Result<Vec<EvalRow>, CliError> {
    let mut traj = match out_dir {
        Some(dir) => {
            let path = dir.join(TRAJECTORY_FILE);
            Some((BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?), path))
        }
        None => None,
    };
    let fitting: Vec<(String, lamarl::GridRegion)> = library
        .iter()
        .filter(|(_, region)| capacity_check(env_cfg.n_robot, env_cfg.r_avoid, region))
        .map(|(name, region)| (name.to_string(), region.clone()))
        .collect();
    let mut env = match ShapeLibrary::new(fitting) {
        Ok(fit) => Some(SwarmEnv::new(env_cfg.clone(), fit, reward, rng_stream(settings.seed, streams::EVAL))?),
        Err(_) => None,
    };
    let mut rows = Vec::new();
    let mut next = 0;
    for (name, region) in library.iter() {
        let env = match env.as_mut() {
            Some(env) if capacity_check(env_cfg.n_robot, env_cfg.r_avoid, region) => env,
            _ => {
                warn!("shape {name}: {} robots do not fit, skipped", env_cfg.n_robot);
                rows.push(EvalRow {
                    shape: name.to_string(),
                    status: "skipped".into(),
                    m1_mean: f64::NAN,
                    m1_std: f64::NAN,
                    m2_mean: f64::NAN,
                    m2_std: f64::NAN,
                    collisions: 0,
                });
                continue;
            }
        };
        let idx = next;
        next += 1;
        let mut io_result = Ok(());
        let row = rollout(env, idx, controller, settings, |t, ps, m1, m2, nc| {
            if let (Some((w, _)), Ok(())) = (traj.as_mut(), &io_result) {
                let line = json!({
                    "shape": name,
                    "step": t,
                    "positions": ps.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                    "M1": m1,
                    "M2": m2,
                    "n_collisions": nc,
                });
                io_result = writeln!(w, "{line}");
            }
        })?;
        if let (Err(e), Some((_, path))) = (io_result, traj.as_ref()) {
            return Err(CliError::io(path, e));
        }
        rows.push(row);
    }
    if let Some((mut w, path)) = traj {
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    if let Some(dir) = out_dir {
        write_eval_csv(&dir.join(EVAL_FILE), &rows)?;
    }
    Ok(rows)
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<(), CliError> {
    let mut out = format!("{EVAL_SCHEMA}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Renders rows as an aligned text table.
pub fn render_table(rows: &[EvalRow]) -> String {
    let mut s = format!(
        "{:<10} {:>8} {:>16} {:>16} {:>10}\n",
        "shape", "status", "M1 mean (std)", "M2 mean (std)", "collisions"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<10} {:>8} {:>16} {:>16} {:>10}\n",
            r.shape,
            r.status,
            format!("{:.3} ({:.3})", r.m1_mean, r.m1_std),
            format!("{:.3} ({:.3})", r.m2_mean, r.m2_std),
            r.collisions
        ));
    }
    s
}
