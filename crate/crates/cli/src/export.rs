//! CSV export for external plotting.

use std::fs;
use std::path::{Path, PathBuf};

use crate::ablate::{trailing_means, AblationReport, CONVERGENCE_WINDOW};
use crate::error::CliError;
use crate::eval::{EVAL_FILE, EVAL_SCHEMA};
use crate::run::{create_dir, read_train_log, write_text, TRAIN_LOG_FILE};

/// Files under `dir` named `name`, sorted by path.
fn find_files(dir: &Path, name: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| CliError::io(&d, e))? {
            let path = entry.map_err(|e| CliError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == name) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn run_label(root: &Path, file: &Path) -> String {
    let parent = file.parent().unwrap_or(root);
    let rel = parent.strip_prefix(root).unwrap_or(parent);
    let s = rel.to_string_lossy().replace('\\', "/");
    if s.is_empty() {
        ".".into()
    } else {
        s
    }
}

/// Writes `learning_curves.csv` (every training log under `input`),
/// `sample_efficiency.csv` (ablation reports) and `metrics.csv` (evaluation
/// tables). Returns the files written.
pub fn cmd_export_plots(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    create_dir(out_dir)?;
    let mut written = Vec::new();

    let logs = find_files(input, TRAIN_LOG_FILE)?;
    if !logs.is_empty() {
        let mut csv = String::from("# lamarl learning_curves v1\nrun,episode,mean_reward,M1,M2,M2_trailing,collisions\n");
        for path in &logs {
            let rows = read_train_log(path)?;
            let m2: Vec<f64> = rows.iter().map(|r| r.m2).collect();
            let trailing = trailing_means(&m2, CONVERGENCE_WINDOW);
            let label = run_label(input, path);
            for (k, r) in rows.iter().enumerate() {
                let t = (k + 1)
                    .checked_sub(CONVERGENCE_WINDOW)
                    .and_then(|j| trailing.get(j))
                    .map(|x| x.to_string())
                    .unwrap_or_default();
                csv.push_str(&format!(
                    "{label},{},{},{},{},{t},{}\n",
                    r.episode, r.mean_reward, r.m1, r.m2, r.collisions
                ));
            }
        }
        let path = out_dir.join("learning_curves.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }

    let reports = find_files(input, "ablation_report.json")?;
    if !reports.is_empty() {
        let mut csv = String::from(
            "# lamarl sample_efficiency v1\nablation,seed,converged_with,converged_without,SE,SE_lower_bound\n",
        );
        let cell = |x: Option<String>| x.unwrap_or_default();
        for path in &reports {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let report: AblationReport =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let label = run_label(input, path);
            for s in &report.seeds {
                csv.push_str(&format!(
                    "{label},{},{},{},{},{}\n",
                    s.seed,
                    cell(s.with_prior.map(|c| c.episode.to_string())),
                    cell(s.without_prior.map(|c| c.episode.to_string())),
                    cell(s.se.map(|x| x.to_string())),
                    cell(s.se_lower_bound.map(|x| x.to_string())),
                ));
            }
        }
        let path = out_dir.join("sample_efficiency.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }

    let evals = find_files(input, EVAL_FILE)?;
    if !evals.is_empty() {
        let mut csv = String::from("# lamarl metrics v1\nrun,");
        let mut header_done = false;
        for path in &evals {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let mut lines = text.lines();
            if lines.next() != Some(EVAL_SCHEMA) {
                return Err(CliError::Config(format!("{}: missing schema line", path.display())));
            }
            let label = run_label(input, path);
            if let Some(h) = lines.next() {
                if !header_done {
                    csv.push_str(h);
                    csv.push('\n');
                    header_done = true;
                }
            }
            for l in lines {
                csv.push_str(&format!("{label},{l}\n"));
            }
        }
        let path = out_dir.join("metrics.csv");
        write_text(&path, &csv)?;
        written.push(path);
    }
    Ok(written)
}
