use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicyKind};
use super::export::{export_results, write_records, OutputFormat};
use super::trace::{check_trace, load_trace};
use crate::baselines::{exhaustive_oracle, lga_solve, random_baseline};
use crate::channel::ChannelSource;
use crate::cosyne::{mean, rollout, train, Environment, GenerationStats};
use crate::error::{invalid_input, Result};
use crate::mbacnn::{save_genome, ArchConfig, FfArch, FfNet, Mbacnn, Policy, SelectionMode};
use crate::multiris::{message_accounting, ControlArchitecture, Distributed, OverheadRecord, ProtocolPhase};
use crate::numerics::child_seed;
use crate::system::{rate, to_db};

/// One evaluated configuration. Wall-clock time is kept out of this record
/// so that reruns with the same seed produce identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub run: usize,
    pub policy: String,
    pub param: String,
    pub value: Option<f64>,
    /// Mean linear SNR over all evaluation blocks.
    pub mean_snr: f64,
    pub mean_snr_db: f64,
    /// Mean spectral efficiency in bit/s/Hz.
    pub mean_rate: f64,
    /// Standard error of the per-block rate.
    pub rate_std_error: f64,
    pub blocks: usize,
    /// Fitness evaluations for evolved policies, candidate evaluations for
    /// search baselines.
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub run: usize,
    pub policy: String,
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub run: usize,
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_so_far: f64,
}

/// Summary of per-block SNRs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalStats {
    pub mean_snr: f64,
    pub mean_snr_db: f64,
    pub mean_rate: f64,
    pub rate_std_error: f64,
    pub blocks: usize,
}

impl EvalStats {
    pub fn from_gammas(gammas: &[f64]) -> Result<Self> {
        if gammas.is_empty() {
            return Err(invalid_input("no evaluation blocks"));
        }
        let rates = gammas.iter().map(|&g| rate(g)).collect::<Result<Vec<_>>>()?;
        let n = rates.len();
        let mean_rate = mean(&rates);
        let std_error = if n > 1 {
            let var = rates.iter().map(|r| (r - mean_rate).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mean_snr = mean(gammas);
        Ok(Self {
            mean_snr,
            mean_snr_db: to_db(mean_snr),
            mean_rate,
            rate_std_error: std_error,
            blocks: n,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<MetricRecord>,
    pub timings: Vec<TimingRecord>,
    pub history: Vec<HistoryRecord>,
    /// Best genome of each run for evolved policies.
    pub genomes: Vec<Vec<f64>>,
}

/// Master seed of run `r`; run 0 uses the configured seed itself.
pub fn run_seed(master: u64, run: usize) -> u64 {
    if run == 0 {
        master
    } else {
        child_seed(master, "run", run as u64)
    }
}

/// Evaluation episodes are drawn from a namespace disjoint from training.
pub fn eval_seed(run_master: u64) -> u64 {
    child_seed(run_master, "eval", 0)
}

/// Channel environment of the scenario, or of the configured trace.
pub fn build_environment(cfg: &ExperimentConfig) -> Result<Environment> {
    let env = Environment::from_scenario(&cfg.scenario)?;
    match &cfg.experiment.trace {
        Some(path) => {
            let episodes = load_trace(path)?;
            check_trace(&episodes, &cfg.scenario)?;
            Ok(env.with_source(ChannelSource::trace(episodes)?))
        }
        None => Ok(env),
    }
}

/// Genome-parameterized controller for an evolved policy kind. With several
/// RISs `mbacnn` and `ff` run as distributed agents; `ff_cent` is one
/// network for all surfaces.
pub fn build_policy(cfg: &ExperimentConfig, kind: PolicyKind) -> Result<Box<dyn Policy>> {
    let s = &cfg.scenario;
    let ff = |ris_count| FfArch {
        n_tx: s.n_tx,
        n_ris: s.n_ris,
        ris_count,
        codebook_size: s.n_tx,
        hidden: cfg.arch.ff_hidden.clone(),
        normalize_inputs: cfg.arch.normalize_inputs,
    };
    let agg = cfg.aggregator.clone();
    Ok(match kind {
        PolicyKind::Mbacnn => {
            let net = Mbacnn::new(ArchConfig::for_scenario(s, &cfg.arch))?;
            if s.ris_count == 1 {
                Box::new(net)
            } else {
                Box::new(Distributed::new(net, s.ris_count, agg)?)
            }
        }
        PolicyKind::Ff => {
            let net = FfNet::new(ff(1))?;
            if s.ris_count == 1 {
                Box::new(net)
            } else {
                Box::new(Distributed::new(net, s.ris_count, agg)?)
            }
        }
        PolicyKind::FfCent => Box::new(FfNet::new(ff(s.ris_count))?),
        other => return Err(invalid_input(format!("policy '{}' has no genome", other.name()))),
    })
}

/// Per-block SNRs of a genome over `episodes` evaluation episodes.
pub fn evaluate_genome(
    policy: &dyn Policy,
    genome: &[f64],
    env: &Environment,
    episodes: usize,
    seed: u64,
    mode: SelectionMode,
) -> Result<Vec<f64>> {
    rollout(env, episodes, seed, |cs, rng| policy.act(genome, cs, rng, mode))
}

/// Per-block SNRs of a search or random baseline, with the total number of
/// candidate evaluations.
pub fn evaluate_baseline(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    env: &Environment,
    episodes: usize,
    seed: u64,
) -> Result<(Vec<f64>, u64)> {
    let mut evaluations = 0u64;
    let gammas = match kind {
        PolicyKind::Random => rollout(env, episodes, seed, |cs, rng| random_baseline(cs, &env.codebook, rng))?,
        PolicyKind::Lga => rollout(env, episodes, seed, |cs, rng| {
            let r = lga_solve(cs, env.budget, &env.codebook, &cfg.lga, rng)?;
            evaluations += r.evaluations as u64;
            Ok(r.action())
        })?,
        PolicyKind::Oracle => rollout(env, episodes, seed, |cs, _| {
            let r = exhaustive_oracle(cs, env.budget, &env.codebook)?;
            evaluations += r.evaluations as u64;
            Ok(r.action())
        })?,
        other => return Err(invalid_input(format!("policy '{}' is not a baseline", other.name()))),
    };
    Ok((gammas, evaluations))
}

/// Signalling cost of a multi-RIS policy in both protocol phases.
pub fn overhead_records(cfg: &ExperimentConfig, kind: PolicyKind, genome_len: usize) -> Vec<OverheadRecord> {
    let arch = match kind {
        PolicyKind::FfCent => ControlArchitecture::Centralized,
        _ => ControlArchitecture::Distributed,
    };
    [ProtocolPhase::Training, ProtocolPhase::Deployment]
        .into_iter()
        .map(|phase| message_accounting(&cfg.scenario, phase, arch, genome_len))
        .collect()
}

fn record(run: usize, kind: PolicyKind, stats: EvalStats, evaluations: u64) -> MetricRecord {
    MetricRecord {
        run,
        policy: kind.name().to_string(),
        param: String::new(),
        value: None,
        mean_snr: stats.mean_snr,
        mean_snr_db: stats.mean_snr_db,
        mean_rate: stats.mean_rate,
        rate_std_error: stats.rate_std_error,
        blocks: stats.blocks,
        evaluations,
    }
}

/// Trains (if the policy is evolved) and evaluates the configured policy for
/// every run. With `out` set, metrics, timings, training history, genomes,
/// per-generation checkpoints and the resolved config are written there.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>, format: OutputFormat) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    }
    let kind = cfg.experiment.policy;
    let env = build_environment(cfg)?;
    let eval_env = Environment {
        perturbation: cfg.experiment.perturbation,
        ..env.clone()
    };
    let episodes = cfg.scenario.episodes;
    let mut output = RunOutput::default();
    let policy = if kind.is_evolved() { Some(build_policy(cfg, kind)?) } else { None };
    for run in 0..cfg.experiment.runs {
        let master = run_seed(cfg.experiment.seed, run);
        let started = Instant::now();
        let (gammas, evaluations, train_seconds) = match &policy {
            Some(policy) => {
                let fitness = |g: &[f64], seed: u64| {
                    let gammas = evaluate_genome(policy.as_ref(), g, &env, cfg.evo.t_e_train, seed, SelectionMode::Sample)?;
                    Ok(mean(&gammas))
                };
                let layout = policy.layout();
                let checkpoint = |stats: &GenerationStats, best: &[f64]| -> Result<()> {
                    if let Some(dir) = out {
                        save_genome(&dir.join(format!("checkpoint_run{run}.bin")), layout, best)?;
                    }
                    output.history.push(HistoryRecord {
                        run,
                        generation: stats.generation,
                        best_fitness: stats.best_fitness,
                        mean_fitness: stats.mean_fitness,
                        best_so_far: stats.best_so_far,
                    });
                    Ok(())
                };
                let outcome = train(&fitness, policy.genome_len(), &cfg.evo, master, checkpoint)?;
                let train_seconds = started.elapsed().as_secs_f64();
                if let Some(dir) = out {
                    save_genome(&dir.join(format!("genome_run{run}.bin")), layout, &outcome.best_genome)?;
                }
                let gammas = evaluate_genome(
                    policy.as_ref(),
                    &outcome.best_genome,
                    &eval_env,
                    episodes,
                    eval_seed(master),
                    cfg.experiment.eval_selection,
                )?;
                output.genomes.push(outcome.best_genome);
                (gammas, outcome.evaluations as u64, train_seconds)
            }
            None => {
                let (gammas, evals) = evaluate_baseline(cfg, kind, &eval_env, episodes, eval_seed(master))?;
                (gammas, evals, 0.0)
            }
        };
        let eval_seconds = started.elapsed().as_secs_f64() - train_seconds;
        output.records.push(record(run, kind, EvalStats::from_gammas(&gammas)?, evaluations));
        output.timings.push(TimingRecord {
            run,
            policy: kind.name().to_string(),
            train_seconds,
            eval_seconds,
        });
    }
    if let Some(dir) = out {
        export_results(dir, "metrics", &output.records, format)?;
        write_records(&dir.join("timing.csv"), &output.timings, OutputFormat::Csv)?;
        if !output.history.is_empty() {
            write_records(&dir.join("history.csv"), &output.history, OutputFormat::Csv)?;
        }
        if let (Some(policy), true) = (&policy, cfg.scenario.ris_count > 1) {
            let overhead = overhead_records(cfg, kind, policy.genome_len());
            write_records(&dir.join("overhead.csv"), &overhead, OutputFormat::Csv)?;
        }
    }
    Ok(output)
}

/// Evaluates a fixed genome (evolved kinds) or a baseline without training.
pub fn run_evaluation(cfg: &ExperimentConfig, genome: Option<&[f64]>) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let kind = cfg.experiment.policy;
    let env = Environment {
        perturbation: cfg.experiment.perturbation,
        ..build_environment(cfg)?
    };
    let episodes = cfg.scenario.episodes;
    (0..cfg.experiment.runs)
        .map(|run| {
            let seed = eval_seed(run_seed(cfg.experiment.seed, run));
            let (gammas, evals) = if kind.is_evolved() {
                let policy = build_policy(cfg, kind)?;
                let genome = genome.ok_or_else(|| invalid_input(format!("evaluating '{}' needs a genome", kind.name())))?;
                (evaluate_genome(policy.as_ref(), genome, &env, episodes, seed, cfg.experiment.eval_selection)?, 0)
            } else {
                evaluate_baseline(cfg, kind, &env, episodes, seed)?
            };
            Ok(record(run, kind, EvalStats::from_gammas(&gammas)?, evals))
        })
        .collect()
}
