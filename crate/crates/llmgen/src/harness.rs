//! Success-rate study over prompt variants.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use lamarl::behavior::BehaviorSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::client::{CompletionParams, LlmClient};
use crate::pipeline::{run_pipeline, LoggingClient, PipelineOutput, TranscriptLog};
use crate::prompt::PromptBundle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    NoApis,
    NoCot,
    Neither,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoApis, Variant::NoCot, Variant::Neither];

    pub fn flags(self) -> (bool, bool) {
        match self {
            Variant::Full => (true, true),
            Variant::NoApis => (true, false),
            Variant::NoCot => (false, true),
            Variant::Neither => (false, false),
        }
    }

    pub fn bundle(self, base: &PromptBundle) -> PromptBundle {
        let (cot, apis) = self.flags();
        base.clone().with_flags(cot, apis)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoApis => "no-apis",
            Variant::NoCot => "no-cot",
            Variant::Neither => "neither",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub success: bool,
    /// Why the trial failed; `None` on success.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub successes: usize,
    pub trials: usize,
    pub outcomes: Vec<TrialOutcome>,
}

impl VariantResult {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub n_trials: usize,
    /// Maximum number of trials in flight.
    pub concurrency: usize,
    pub params: CompletionParams,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            n_trials: 200,
            concurrency: 4,
            params: CompletionParams::sampling(),
        }
    }
}

fn primitive_set(spec: &BehaviorSpec) -> BTreeSet<&'static str> {
    spec.primitive_names().into_iter().collect()
}

/// Judges one pipeline run against the reference specs.
pub fn judge(
    output: &PipelineOutput,
    reference_policy: &BehaviorSpec,
    reference_reward: &BehaviorSpec,
) -> Result<(), String> {
    if !output.report.passed() {
        return Err(format!("review failed: {}", output.report.render().trim_end().replace('\n', "; ")));
    }
    let (got_p, want_p) = (primitive_set(&output.generation.policy_spec), primitive_set(reference_policy));
    if got_p != want_p {
        return Err(format!("policy primitives {got_p:?} differ from {want_p:?}"));
    }
    let (got_r, want_r) = (primitive_set(&output.generation.reward_spec), primitive_set(reference_reward));
    if got_r != want_r {
        return Err(format!("reward primitives {got_r:?} differ from {want_r:?}"));
    }
    Ok(())
}

/// Runs `n_trials` pipelines per variant. `client_for` supplies the client
/// of each trial; trials share nothing except the transcript log.
pub fn success_rate_harness<F>(
    client_for: F,
    base: &PromptBundle,
    variants: &[Variant],
    cfg: &HarnessConfig,
    log: Option<&TranscriptLog>,
) -> Vec<VariantResult>
where
    F: Fn(Variant, usize) -> Box<dyn LlmClient> + Sync,
{
    assert!(cfg.n_trials >= 1, "n_trials must be at least 1");
    let reference_policy = BehaviorSpec::reference_policy(0.1, 0.4);
    let reference_reward = BehaviorSpec::reference_reward();
    let jobs: Vec<(Variant, usize)> = variants
        .iter()
        .flat_map(|&v| (0..cfg.n_trials).map(move |t| (v, t)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(Variant, TrialOutcome)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let workers = cfg.concurrency.clamp(1, jobs.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(variant, trial)) = jobs.get(k) else {
                    break;
                };
                let client = client_for(variant, trial);
                let bundle = variant.bundle(base);
                let run = match log {
                    Some(log) => {
                        let logged = LoggingClient::new(&*client, log, json!({"variant": variant, "trial": trial}));
                        run_pipeline(&logged, &bundle, cfg.params)
                    }
                    None => run_pipeline(&*client, &bundle, cfg.params),
                };
                let verdict = run
                    .map_err(|e| e.to_string())
                    .and_then(|out| judge(&out, &reference_policy, &reference_reward));
                let outcome = TrialOutcome {
                    trial,
                    success: verdict.is_ok(),
                    failure: verdict.err(),
                };
                results.lock().expect("harness results").push((variant, outcome));
            });
        }
    });
    let mut all = results.into_inner().expect("harness results");
    all.sort_by_key(|(v, o)| (*v, o.trial));
    variants
        .iter()
        .map(|&variant| {
            let outcomes: Vec<TrialOutcome> =
                all.iter().filter(|(v, _)| *v == variant).map(|(_, o)| o.clone()).collect();
            VariantResult {
                variant,
                successes: outcomes.iter().filter(|o| o.success).count(),
                trials: outcomes.len(),
                outcomes,
            }
        })
        .collect()
}
