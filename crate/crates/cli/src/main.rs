use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lamarl::marl::trainer::Real;
use lamarl::marl::Mlp;
use lamarl_cli::ablate::cmd_ablate_prior;
use lamarl_cli::eval::{cmd_eval, render_table, Controller, EvalSettings};
use lamarl_cli::export::cmd_export_plots;
use lamarl_cli::generate::{cmd_ablate_prompt, cmd_generate, HumanReview};
use lamarl_cli::run::{cmd_train, create_dir, load_checkpoint, Manifest};
use lamarl_cli::{CliError, ExperimentConfig};
use llmgen::harness::HarnessConfig;
use llmgen::{CompletionParams, HttpClient, LlmClient, StubClient};

#[derive(Parser)]
#[command(name = "lamarl", version, about = "Shape-assembly swarm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write checkpoint, log and manifest.
    Train(TrainArgs),
    /// Roll out a checkpoint (or the prior alone) on every shape.
    Eval(EvalArgs),
    /// Paired trainings with and without the prior.
    AblatePrior(AblateArgs),
    /// Generate prior policy and reward specs with a language model.
    Generate(GenerateArgs),
    /// Success rate of generation across prompt variants.
    AblatePrompt(AblatePromptArgs),
    /// Collect run outputs into plotting CSVs.
    ExportPlots(ExportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train without the prior policy (regularizer weight forced to zero).
    #[arg(long)]
    no_prior: bool,
    #[arg(long)]
    episodes: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if self.no_prior {
            cfg.mode.use_prior = false;
        }
        if let Some(e) = self.episodes {
            cfg.train.episodes = e;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Run directory; `<output_dir>/train_seed<seed>` by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Checkpoint to evaluate; its run manifest supplies the config unless
    /// `--config` is given.
    #[arg(long, required_unless_present = "prior_only")]
    checkpoint: Option<PathBuf>,
    /// Drive the robots with the prior policy instead of a checkpoint.
    #[arg(long)]
    prior_only: bool,
    /// Shape file or directory overriding the config.
    #[arg(long)]
    shapes: Option<PathBuf>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64, 1, 2, 3, 4])]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LlmArgs {
    /// Directory of fixture replies (`<step>.txt`) instead of a live model.
    #[arg(long)]
    stub_llm: Option<PathBuf>,
    /// Model name sent to the live endpoint.
    #[arg(long, required_unless_present = "stub_llm")]
    model: Option<String>,
}

impl LlmArgs {
    fn client(&self) -> Result<Box<dyn LlmClient>, CliError> {
        Ok(match &self.stub_llm {
            Some(dir) => Box::new(StubClient::new(dir)),
            None => Box::new(HttpClient::from_env(self.model.clone().unwrap_or_default())?),
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    llm: LlmArgs,
    /// Print the review report and wait for confirmation.
    #[arg(long)]
    human_review: bool,
    #[arg(long, default_value = "generated")]
    out: PathBuf,
}

#[derive(Args)]
struct AblatePromptArgs {
    #[command(flatten)]
    llm: LlmArgs,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Maximum concurrent requests.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value = "prompt_ablation")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Directory searched for run outputs.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn eval_config(args: &EvalArgs) -> Result<ExperimentConfig, CliError> {
    if args.cfg.config.is_none() {
        if let Some(dir) = args.checkpoint.as_deref().and_then(Path::parent) {
            if dir.join(lamarl_cli::run::MANIFEST_FILE).exists() {
                let mut cfg = Manifest::read(dir)?.config;
                if let Some(s) = args.cfg.seed {
                    cfg.train.seed = s;
                }
                return Ok(cfg);
            }
        }
    }
    args.cfg.resolve()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => {
            let cfg = a.cfg.resolve()?;
            let dir = a
                .out
                .unwrap_or_else(|| cfg.output_dir.join(format!("train_seed{}", cfg.train.seed)));
            let out = cmd_train(&cfg, &dir)?;
            if let Some(last) = out.logs.last() {
                println!(
                    "trained {} episodes; last episode M1 {:.3} M2 {:.3}; outputs in {}",
                    out.logs.len(),
                    last.m1,
                    last.m2,
                    dir.display()
                );
            }
        }
        Command::Eval(a) => {
            let mut cfg = eval_config(&a)?;
            if let Some(s) = &a.shapes {
                cfg.shapes.path = s.clone();
            }
            if let Some(n) = a.n_steps {
                cfg.eval.n_steps = n;
                cfg.eval.window = cfg.eval.window.min(n);
            }
            let library = cfg.shape_library()?;
            let settings = EvalSettings {
                n_steps: cfg.eval.n_steps,
                window: cfg.eval.window,
                seed: cfg.train.seed,
            };
            let prior;
            let actor: Mlp<Real>;
            let controller = if a.prior_only {
                prior = cfg.policy_spec()?;
                Controller::Prior(&prior)
            } else {
                let path = a.checkpoint.as_ref().expect("clap enforces --checkpoint");
                let ck = load_checkpoint(path)?;
                if ck.obs_dim != cfg.env.obs_dim() {
                    return Err(CliError::Config(format!(
                        "checkpoint expects observations of length {}, config yields {}",
                        ck.obs_dim,
                        cfg.env.obs_dim()
                    )));
                }
                actor = ck.actor;
                Controller::Actor(&actor)
            };
            if let Some(dir) = &a.out {
                create_dir(dir)?;
            }
            let rows = cmd_eval(&controller, &cfg.env, &library, cfg.reward_fn()?, &settings, a.out.as_deref())?;
            print!("{}", render_table(&rows));
        }
        Command::AblatePrior(a) => {
            let cfg = a.cfg.resolve()?;
            let dir = a.out.unwrap_or_else(|| cfg.output_dir.join("ablate_prior"));
            let report = cmd_ablate_prior(&cfg, &a.seeds, &dir)?;
            print!("{}", report.render());
        }
        Command::Generate(a) => {
            let client = a.llm.client()?;
            let params = CompletionParams::deterministic();
            let report = if a.human_review {
                let stdin = io::stdin();
                let mut input = stdin.lock();
                let mut output = io::stdout();
                cmd_generate(
                    &*client,
                    params,
                    &a.out,
                    Some(HumanReview {
                        input: &mut input,
                        output: &mut output,
                    }),
                )?
            } else {
                cmd_generate(&*client, params, &a.out, None)?
            };
            print!("{}", report.render());
            println!("specs written to {}", a.out.display());
        }
        Command::AblatePrompt(a) => {
            // Validate credentials once before fanning out.
            a.llm.client()?;
            let cfg = HarnessConfig {
                n_trials: a.trials,
                concurrency: a.concurrency,
                params: CompletionParams::sampling(),
            };
            let llm = &a.llm;
            let results = cmd_ablate_prompt(
                |_, _| llm.client().expect("client construction validated above"),
                &cfg,
                &a.out,
            )?;
            for r in results {
                println!("{:<8} {}/{} = {:.2}%", r.variant, r.successes, r.trials, 100.0 * r.rate());
            }
        }
        Command::ExportPlots(a) => {
            for p in cmd_export_plots(&a.input, &a.out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
