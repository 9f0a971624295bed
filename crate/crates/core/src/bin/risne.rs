use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use risne::harness::{
    self, load_config, parse_values, run_evaluation, run_experiment, sample_trace, save_trace, sweep, ExperimentConfig,
    MetricRecord, OutputFormat, PolicyKind,
};
use risne::mbacnn::load_genome;

#[derive(Parser)]
#[command(name = "risne", version, about = "Evolve and evaluate RIS phase and precoder controllers")]
struct Cli {
    /// Worker threads for population evaluation.
    #[arg(long, env = "RISNE_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format of metric tables.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured policy and evaluate the best genome.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Evaluate a baseline, or an evolved policy from a saved genome.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        genome: Option<PathBuf>,
        /// Channel trace to evaluate on instead of the scenario model.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run one or more policies over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Alias such as `tx_power_dbm` or a dotted path such as `evo.p_mut`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Comma-separated policy kinds; defaults to the configured one.
        #[arg(long)]
        policy: Option<String>,
    },
    /// Evaluate the exhaustive-search upper bound.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Check a channel trace against a scenario and store it with a config
    /// that points at it.
    ImportTrace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample channel episodes from the scenario model into a trace file.
    ExportTrace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace file to write.
        #[arg(long)]
        out: PathBuf,
        /// Episodes to sample; defaults to the evaluation episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
}

fn prepare(common: &Common) -> anyhow::Result<(ExperimentConfig, Option<PathBuf>, OutputFormat)> {
    let mut cfg = load_config(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.experiment.output_dir.clone());
    Ok((cfg, out, OutputFormat::parse(&common.format)?))
}

fn parse_policy(name: Option<&str>, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
    if let Some(name) = name {
        cfg.experiment.policy = PolicyKind::parse(name)?;
    }
    Ok(())
}

fn print_records(records: &[MetricRecord]) {
    println!("run policy param value mean_snr_db mean_rate rate_std_error evaluations");
    for r in records {
        let value = r.value.map_or_else(|| "-".to_string(), |v| v.to_string());
        let param = if r.param.is_empty() { "-" } else { &r.param };
        println!(
            "{} {} {} {} {:.4} {:.4} {:.4} {}",
            r.run, r.policy, param, value, r.mean_snr_db, r.mean_rate, r.rate_std_error, r.evaluations
        );
    }
}

fn write_eval(records: &[MetricRecord], out: Option<&Path>, format: OutputFormat) -> anyhow::Result<()> {
    if let Some(dir) = out {
        harness::export_results(dir, "metrics", records, format)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Train { common, policy } => {
            let (mut cfg, out, format) = prepare(&common)?;
            parse_policy(policy.as_deref(), &mut cfg)?;
            let output = run_experiment(&cfg, out.as_deref(), format)?;
            print_records(&output.records);
        }
        Command::Eval {
            common,
            policy,
            genome,
            trace,
        } => {
            let (mut cfg, out, format) = prepare(&common)?;
            parse_policy(policy.as_deref(), &mut cfg)?;
            if trace.is_some() {
                cfg.experiment.trace = trace;
            }
            let genome = match (&genome, cfg.experiment.policy.is_evolved()) {
                (Some(path), true) => {
                    let policy = harness::build_policy(&cfg, cfg.experiment.policy)?;
                    Some(load_genome(path, policy.layout()).with_context(|| format!("loading {}", path.display()))?)
                }
                (None, true) => bail!("policy '{}' needs --genome", cfg.experiment.policy.name()),
                (Some(_), false) => bail!("policy '{}' takes no genome", cfg.experiment.policy.name()),
                (None, false) => None,
            };
            let records = run_evaluation(&cfg, genome.as_deref())?;
            write_eval(&records, out.as_deref(), format)?;
            print_records(&records);
        }
        Command::Sweep {
            common,
            param,
            values,
            policy,
        } => {
            let (cfg, out, format) = prepare(&common)?;
            let policies = match policy {
                Some(list) => list
                    .split(',')
                    .map(|p| PolicyKind::parse(p.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)?;
            }
            let records = sweep(&cfg, &param, &parse_values(&values)?, &policies, out.as_deref(), format)?;
            print_records(&records);
        }
        Command::Oracle { common } => {
            let (mut cfg, out, format) = prepare(&common)?;
            cfg.experiment.policy = PolicyKind::Oracle;
            let records = run_evaluation(&cfg, None)?;
            write_eval(&records, out.as_deref(), format)?;
            print_records(&records);
        }
        Command::ImportTrace { config, trace, out } => {
            let mut cfg = load_config(&config)?;
            let episodes = harness::load_trace(&trace).with_context(|| format!("reading {}", trace.display()))?;
            harness::check_trace(&episodes, &cfg.scenario)?;
            std::fs::create_dir_all(&out)?;
            let stored = out.join("trace.csv");
            save_trace(&stored, &episodes)?;
            cfg.experiment.trace = Some(stored.clone());
            harness::save_config(&cfg, &out.join("config.toml"))?;
            let blocks: usize = episodes.iter().map(Vec::len).sum();
            println!("imported {} episodes, {blocks} blocks into {}", episodes.len(), stored.display());
        }
        Command::ExportTrace {
            config,
            seed,
            out,
            episodes,
        } => {
            let cfg = load_config(&config)?;
            let seed = seed.unwrap_or(cfg.experiment.seed);
            let episodes = episodes.unwrap_or(cfg.scenario.episodes);
            save_trace(&out, &sample_trace(&cfg.scenario, episodes, seed)?)?;
            println!("wrote {episodes} episodes of {} blocks to {}", cfg.scenario.horizon, out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
