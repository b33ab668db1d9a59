//! Prior ablation: paired runs with and without the prior, compared by the
//! episode at which uniformity first converges.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::{cmd_train, create_dir, write_text};

pub const CONVERGENCE_WINDOW: usize = 50;
pub const CONVERGENCE_BAND: f64 = 0.05;

/// Trailing means of `xs` over `window`; entry `k` covers `xs[k+1-window..=k]`,
/// so the result starts at episode `window - 1`.
pub fn trailing_means(xs: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || xs.len() < window {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(xs.len() + 1 - window);
    let mut sum: f64 = xs[..window].iter().sum();
    out.push(sum / window as f64);
    for k in window..xs.len() {
        sum += xs[k] - xs[k - window];
        out.push(sum / window as f64);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// First episode whose trailing mean lies within the band around the
    /// final trailing mean.
    pub episode: usize,
    pub final_mean: f64,
}

/// First episode at which the trailing-window mean of `m2` lies within
/// `band` (relative) of the final trailing mean. `None` when the curve is
/// shorter than one window, holds non-finite values, or its first window
/// already sits in the band (no progress to measure).
pub fn first_convergence(m2: &[f64], window: usize, band: f64) -> Option<Convergence> {
    if m2.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let means = trailing_means(m2, window);
    let final_mean = *means.last()?;
    let tol = band * final_mean.abs();
    let k = means.iter().position(|m| (m - final_mean).abs() <= tol)?;
    if k == 0 {
        return None;
    }
    Some(Convergence {
        episode: k + window - 1,
        final_mean,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub with_prior: Option<Convergence>,
    pub without_prior: Option<Convergence>,
    /// `without / with`; `None` when either run did not converge.
    pub se: Option<f64>,
    /// When only the run without prior failed to converge, its convergence
    /// lies beyond the last episode, so SE exceeds `episodes / with`.
    pub se_lower_bound: Option<f64>,
}

impl SeedResult {
    pub fn new(seed: u64, with_prior: Option<Convergence>, without_prior: Option<Convergence>, episodes: usize) -> Self {
        let se = match (with_prior, without_prior) {
            (Some(w), Some(wo)) => Some(wo.episode as f64 / w.episode as f64),
            _ => None,
        };
        let se_lower_bound = match (with_prior, without_prior) {
            (Some(w), None) => Some(episodes as f64 / w.episode as f64),
            _ => se,
        };
        Self {
            seed,
            with_prior,
            without_prior,
            se,
            se_lower_bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub window: usize,
    pub band: f64,
    pub episodes: usize,
    pub seeds: Vec<SeedResult>,
    /// Median over seeds with a defined SE.
    pub median_se: Option<f64>,
    /// Median over every seed, using the lower bound where the run without
    /// prior did not converge.
    pub median_se_lower_bound: Option<f64>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl AblationReport {
    pub fn from_seeds(seeds: Vec<SeedResult>, episodes: usize) -> Self {
        let se: Vec<f64> = seeds.iter().filter_map(|s| s.se).collect();
        let lb: Vec<f64> = seeds.iter().filter_map(|s| s.se_lower_bound).collect();
        Self {
            window: CONVERGENCE_WINDOW,
            band: CONVERGENCE_BAND,
            episodes,
            median_se: median(&se),
            median_se_lower_bound: if lb.len() == seeds.len() { median(&lb) } else { None },
            seeds,
        }
    }

    pub fn render(&self) -> String {
        let fmt = |c: Option<Convergence>| c.map_or("none".to_string(), |c| c.episode.to_string());
        let fx = |x: Option<f64>| x.map_or("undefined".to_string(), |x| format!("{x:.3}"));
        let mut s = format!(
            "convergence: first episode whose trailing {}-episode mean of M2 is within {}% of the final trailing mean\n",
            self.window,
            self.band * 100.0
        );
        s.push_str("seed  with  without  SE  SE_lower_bound\n");
        for r in &self.seeds {
            s.push_str(&format!(
                "{} {} {} {} {}\n",
                r.seed,
                fmt(r.with_prior),
                fmt(r.without_prior),
                fx(r.se),
                fx(r.se_lower_bound)
            ));
        }
        s.push_str(&format!(
            "median SE: {}\nmedian SE lower bound: {}\n",
            fx(self.median_se),
            fx(self.median_se_lower_bound)
        ));
        s
    }
}

/// Paired trainings for each seed under `out_dir/{with,without}_prior/seed_<s>`.
pub fn cmd_ablate_prior(cfg: &ExperimentConfig, seeds: &[u64], out_dir: &Path) -> Result<AblationReport, CliError> {
    create_dir(out_dir)?;
    let mut results = Vec::new();
    for &seed in seeds {
        let mut curves = Vec::new();
        for (use_prior, tag) in [(true, "with_prior"), (false, "without_prior")] {
            let mut c = cfg.clone();
            c.train.seed = seed;
            c.mode.use_prior = use_prior;
            let out = cmd_train(&c, &out_dir.join(tag).join(format!("seed_{seed}")))?;
            let m2: Vec<f64> = out.logs.iter().map(|l| l.m2).collect();
            curves.push(first_convergence(&m2, CONVERGENCE_WINDOW, CONVERGENCE_BAND));
        }
        results.push(SeedResult::new(seed, curves[0], curves[1], cfg.train.episodes));
    }
    let report = AblationReport::from_seeds(results, cfg.train.episodes);
    write_text(
        &out_dir.join("ablation_report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(report)
}
