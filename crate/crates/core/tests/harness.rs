use std::path::PathBuf;

use proptest::prelude::*;
use risne::channel::ScenarioConfig;
use risne::harness::{
    load_config, read_records, read_trace, run_experiment, sample_trace, save_trace, sweep, write_records,
    write_trace, ExperimentConfig, HistoryRecord, MetricRecord, OutputFormat, PolicyKind,
};
use risne::mbacnn::load_genome;
use risne::multiris::OverheadRecord;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn tiny(policy: PolicyKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ScenarioConfig {
        n_tx: 2,
        n_ris: 4,
        horizon: 4,
        episodes: 3,
        ..ScenarioConfig::desk()
    });
    cfg.evo.l_pop = 8;
    cfg.evo.generations = 3;
    cfg.evo.t_e_train = 1;
    cfg.arch.ff_hidden = vec![6];
    cfg.experiment.policy = policy;
    cfg
}

#[test]
fn shipped_configs_load() {
    for name in ["desk.toml", "multi_ris.toml"] {
        let cfg = load_config(&configs_dir().join(name)).unwrap();
        assert_eq!(cfg.scenario.ris_positions.len(), cfg.scenario.ris_count);
    }
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(PolicyKind::Mbacnn);
    let out = run_experiment(&cfg, Some(dir.path()), OutputFormat::Csv).unwrap();
    for f in ["config.toml", "metrics.csv", "timing.csv", "history.csv", "genome_run0.bin", "checkpoint_run0.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(load_config(&dir.path().join("config.toml")).unwrap(), cfg);
    let metrics: Vec<MetricRecord> = read_records(&dir.path().join("metrics.csv"), OutputFormat::Csv).unwrap();
    assert_eq!(metrics, out.records);
    let history: Vec<HistoryRecord> = read_records(&dir.path().join("history.csv"), OutputFormat::Csv).unwrap();
    assert_eq!(history.len(), cfg.evo.generations + 1);
    let policy = risne::harness::build_policy(&cfg, PolicyKind::Mbacnn).unwrap();
    let genome = load_genome(&dir.path().join("genome_run0.bin"), policy.layout()).unwrap();
    assert_eq!(genome, out.genomes[0]);
    // the final checkpoint holds the best genome
    assert_eq!(load_genome(&dir.path().join("checkpoint_run0.bin"), policy.layout()).unwrap(), genome);
}

#[test]
fn multi_ris_run_reports_overhead() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(PolicyKind::Mbacnn);
    cfg.scenario = ScenarioConfig {
        n_tx: 2,
        n_ris: 4,
        horizon: 2,
        episodes: 2,
        ..ScenarioConfig::multi_ris_reference(2)
    };
    for kind in [PolicyKind::Mbacnn, PolicyKind::Ff, PolicyKind::FfCent] {
        cfg.experiment.policy = kind;
        run_experiment(&cfg, Some(dir.path()), OutputFormat::Json).unwrap();
        let overhead: Vec<OverheadRecord> = read_records(&dir.path().join("overhead.csv"), OutputFormat::Csv).unwrap();
        assert_eq!(overhead.len(), 2);
        let metrics: Vec<MetricRecord> = read_records(&dir.path().join("metrics.json"), OutputFormat::Json).unwrap();
        assert_eq!(metrics[0].policy, kind.name());
    }
}

#[test]
fn trace_replaces_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(PolicyKind::Random);
    let path = dir.path().join("trace.csv");
    save_trace(&path, &sample_trace(&cfg.scenario, 3, 11).unwrap()).unwrap();
    cfg.experiment.trace = Some(path);
    let a = run_experiment(&cfg, None, OutputFormat::Csv).unwrap();
    cfg.experiment.seed = 99;
    let b = run_experiment(&cfg, None, OutputFormat::Csv).unwrap();
    assert_eq!(a.records[0].blocks, 12);
    // random actions change with the seed but the channels do not
    assert_ne!(a.records[0].mean_snr, b.records[0].mean_snr);
    cfg.experiment.policy = PolicyKind::Oracle;
    let o1 = run_experiment(&cfg, None, OutputFormat::Csv).unwrap();
    cfg.experiment.seed = 5;
    let o2 = run_experiment(&cfg, None, OutputFormat::Csv).unwrap();
    assert_eq!(o1.records[0].mean_snr, o2.records[0].mean_snr);

    let mut wrong = tiny(PolicyKind::Random);
    wrong.scenario.n_ris = 9;
    wrong.experiment.trace = cfg.experiment.trace.clone();
    assert!(run_experiment(&wrong, None, OutputFormat::Csv).is_err());
}

#[test]
fn sweep_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(PolicyKind::Random);
    let records = sweep(&cfg, "noise_dbm", &[-60.0, -50.0], &[PolicyKind::Random, PolicyKind::Oracle], Some(dir.path()), OutputFormat::Csv)
        .unwrap();
    assert_eq!(records.len(), 4);
    let plot = std::fs::read_to_string(dir.path().join("plot_noise_dbm.dat")).unwrap();
    assert_eq!(plot.lines().filter(|l| l.starts_with("oracle ")).count(), 2);
    let back: Vec<MetricRecord> = read_records(&dir.path().join("metrics.csv"), OutputFormat::Csv).unwrap();
    assert_eq!(back, records);
}

#[test]
fn seeds_are_shared_across_policies() {
    let lga = run_experiment(&tiny(PolicyKind::Lga), None, OutputFormat::Csv).unwrap();
    let oracle = run_experiment(&tiny(PolicyKind::Oracle), None, OutputFormat::Csv).unwrap();
    assert!(lga.records[0].mean_snr <= oracle.records[0].mean_snr * (1.0 + 1e-12));
}

fn record(x: f64, y: f64) -> MetricRecord {
    MetricRecord {
        run: 3,
        policy: "mbacnn".into(),
        param: "p".into(),
        value: Some(y),
        mean_snr: x,
        mean_snr_db: 10.0 * x.log10(),
        mean_rate: (1.0 + x).log2(),
        rate_std_error: x / 7.0,
        blocks: 1000,
        evaluations: 1 << 40,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn export_round_trip_is_exact(x in 1e-300f64..1e300, y in -1e6f64..1e6) {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![record(x, y), record(x.sqrt(), -y)];
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let path = dir.path().join(format!("m.{}", format.extension()));
            write_records(&path, &rows, format).unwrap();
            let back: Vec<MetricRecord> = read_records(&path, format).unwrap();
            prop_assert_eq!(&back, &rows);
        }
    }

    #[test]
    fn trace_round_trip_any_seed(seed in any::<u64>(), k in 1usize..3) {
        let cfg = ScenarioConfig { n_tx: 2, n_ris: 4, horizon: 2, ..ScenarioConfig::multi_ris_reference(k) };
        let trace = sample_trace(&cfg, 2, seed).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        prop_assert_eq!(read_trace(buf.as_slice()).unwrap(), trace);
    }
}
