use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::{ExperimentConfig, PolicyKind};
use super::export::{export_results, OutputFormat};
use super::run::{run_experiment, MetricRecord};
use crate::error::{invalid_input, Result};

/// Short names accepted in place of dotted config paths. One alias may set
/// several fields.
pub const PARAM_ALIASES: &[(&str, &[&str])] = &[
    ("tx_power_dbm", &["scenario.tx_power_dbm"]),
    ("power", &["scenario.tx_power_dbm"]),
    ("noise_dbm", &["scenario.noise_dbm"]),
    ("kappa", &["scenario.kappa_h2_db"]),
    ("kappa_db", &["scenario.kappa_h2_db"]),
    ("n_ris", &["scenario.n_ris"]),
    ("n_tx", &["scenario.n_tx"]),
    ("horizon", &["scenario.horizon"]),
    ("episodes", &["scenario.episodes"]),
    ("l_pop", &["evo.l_pop"]),
    ("p_mut", &["evo.p_mut"]),
    ("sigma_mut", &["evo.sigma_mut"]),
    ("generations", &["evo.generations"]),
    ("t_e_train", &["evo.t_e_train"]),
    ("init_sigma", &["evo.init_sigma"]),
    ("epsilon", &["experiment.perturbation.epsilon"]),
    ("alpha", &["experiment.perturbation.alpha"]),
];

fn resolve(name: &str) -> Vec<String> {
    PARAM_ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map(|(_, paths)| paths.iter().map(|p| p.to_string()).collect())
        .unwrap_or_else(|| vec![name.to_string()])
}

fn set_path(root: &mut toml::Table, path: &str, value: f64, name: &str) -> Result<()> {
    let unknown = || invalid_input(format!("unknown parameter '{name}'"));
    let mut keys: Vec<&str> = path.split('.').collect();
    let leaf = keys.pop().filter(|k| !k.is_empty()).ok_or_else(unknown)?;
    let mut table = root;
    for key in keys {
        table = table.get_mut(key).and_then(toml::Value::as_table_mut).ok_or_else(unknown)?;
    }
    let new = match table.get(leaf) {
        Some(toml::Value::Integer(_)) => {
            if value.fract() != 0.0 || !(0.0..=i64::MAX as f64).contains(&value) {
                return Err(invalid_input(format!("parameter '{name}' needs a non-negative integer, got {value}")));
            }
            toml::Value::Integer(value as i64)
        }
        Some(toml::Value::Float(_)) | None => toml::Value::Float(value),
        Some(_) => return Err(invalid_input(format!("parameter '{name}' is not numeric"))),
    };
    table.insert(leaf.to_string(), new);
    Ok(())
}

/// Copy of `cfg` with parameter `name` (an alias or a dotted path such as
/// `evo.p_mut`) set to `value`. The result is re-validated.
pub fn with_param(cfg: &ExperimentConfig, name: &str, value: f64) -> Result<ExperimentConfig> {
    let out = assign(cfg, name, value)?;
    out.validate()?;
    Ok(out)
}

fn assign(cfg: &ExperimentConfig, name: &str, value: f64) -> Result<ExperimentConfig> {
    let mut root = toml::Table::try_from(cfg).map_err(|e| invalid_input(e.to_string()))?;
    for path in resolve(name) {
        set_path(&mut root, &path, value, name)?;
    }
    toml::Value::Table(root)
        .try_into()
        .map_err(|e| invalid_input(format!("cannot set parameter '{name}': {e}")))
}

/// Parses a comma-separated value list such as `10,20,30`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| invalid_input(format!("'{s}' is not a number"))))
        .collect()
}

/// Runs every policy in `policies` (the configured one if empty) at every
/// value of `param`. All points share the configured seed, so channels are
/// common across the sweep. With `out` set, the combined metrics and a
/// whitespace-separated plot file `plot_<param>.dat` are written there.
pub fn sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    policies: &[PolicyKind],
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<Vec<MetricRecord>> {
    let policies = if policies.is_empty() { vec![cfg.experiment.policy] } else { policies.to_vec() };
    // reject unknown names even when there is nothing to run
    assign(cfg, param, values.first().copied().unwrap_or(1.0))?;
    let mut records = Vec::new();
    for &kind in &policies {
        for &value in values {
            let mut point = with_param(cfg, param, value)?;
            point.experiment.policy = kind;
            for mut r in run_experiment(&point, None, format)?.records {
                r.param = param.to_string();
                r.value = Some(value);
                records.push(r);
            }
        }
    }
    if let Some(dir) = out {
        export_results(dir, "metrics", &records, format)?;
        fs::write(dir.join(format!("plot_{}.dat", param.replace('.', "_"))), plot_data(param, &records))?;
    }
    Ok(records)
}

/// Run-averaged curves, one block per policy, for gnuplot-style tools.
pub fn plot_data(param: &str, records: &[MetricRecord]) -> String {
    let mut s = format!("# policy {param} mean_rate mean_snr_db rate_std_error runs\n");
    let mut policies: Vec<&str> = Vec::new();
    for r in records {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    for p in policies {
        let mut values: Vec<f64> = Vec::new();
        for r in records.iter().filter(|r| r.policy == p) {
            if let Some(v) = r.value {
                if !values.contains(&v) {
                    values.push(v);
                }
            }
        }
        for v in values {
            let pts: Vec<&MetricRecord> = records.iter().filter(|r| r.policy == p && r.value == Some(v)).collect();
            let n = pts.len() as f64;
            let rate = pts.iter().map(|r| r.mean_rate).sum::<f64>() / n;
            let db = pts.iter().map(|r| r.mean_snr_db).sum::<f64>() / n;
            let se = pts.iter().map(|r| r.rate_std_error).sum::<f64>() / n;
            let _ = writeln!(s, "{p} {v} {rate} {db} {se} {}", pts.len());
        }
        s.push('\n');
    }
    s
}
