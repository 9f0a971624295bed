use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::LgaParams;
use crate::channel::{Perturbation, ScenarioConfig};
use crate::cosyne::EvoParams;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::mbacnn::{NetworkParams, SelectionMode};
use crate::multiris::AggregatorConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Mbacnn,
    Ff,
    FfCent,
    Lga,
    Random,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [Self::Mbacnn, Self::Ff, Self::FfCent, Self::Lga, Self::Random, Self::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mbacnn => "mbacnn",
            Self::Ff => "ff",
            Self::FfCent => "ff_cent",
            Self::Lga => "lga",
            Self::Random => "random",
            Self::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name.replace('-', "_"))
            .ok_or_else(|| invalid_input(format!("unknown policy '{name}'")))
    }

    /// Whether the policy has a genome trained by evolution.
    pub fn is_evolved(self) -> bool {
        matches!(self, Self::Mbacnn | Self::Ff | Self::FfCent)
    }
}

/// Run-level settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Independent training-plus-evaluation runs per configuration.
    pub runs: usize,
    pub output_dir: Option<PathBuf>,
    /// Precoder selection during the final evaluation.
    pub eval_selection: SelectionMode,
    /// Evaluation-time noise on the RIS-RX channels.
    pub perturbation: Option<Perturbation>,
    /// Channel trace replacing the stochastic model for training and evaluation.
    pub trace: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Mbacnn,
            seed: 0,
            runs: 1,
            output_dir: None,
            eval_selection: SelectionMode::Sample,
            perturbation: None,
            trace: None,
        }
    }
}

/// Everything needed to reproduce one experiment. Evaluation uses
/// `scenario.episodes` episodes of `scenario.horizon` blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub arch: NetworkParams,
    #[serde(default)]
    pub evo: EvoParams,
    #[serde(default)]
    pub lga: LgaParams,
    #[serde(default)]
    pub aggregator: AggregatorConfig,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            arch: NetworkParams::default(),
            evo: EvoParams::default(),
            lga: LgaParams::default(),
            aggregator: AggregatorConfig::default(),
            experiment: ExperimentSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.arch.validate()?;
        self.evo.validate()?;
        self.lga.validate()?;
        self.aggregator.validate()?;
        if self.experiment.runs == 0 {
            return Err(invalid_config("experiment.runs must be at least 1"));
        }
        if let Some(p) = self.experiment.perturbation {
            if !(p.epsilon >= 0.0 && p.alpha >= 0.0) {
                return Err(invalid_config("experiment.perturbation epsilon and alpha must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            record: 0,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid_config(e.to_string()))
    }
}

/// Reads and validates a TOML experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(&fs::read_to_string(path)?)
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    fs::write(path, cfg.to_toml()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
n_tx = 4
n_ris = 16
tx_position = [0.0, 0.0, 2.0]
rx_position = [8.0, 10.0, 1.5]
ris_positions = [[0.0, 3.0, 2.0]]
kappa_h2_db = 10.0
tx_power_dbm = 30.0
noise_dbm = -50.0
horizon = 50
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.evo.l_pop, 100);
        assert_eq!(cfg.evo.sigma_mut, 0.2);
        assert_eq!(cfg.evo.p_mut, 0.3);
        assert_eq!(cfg.evo.generations, 25);
        assert_eq!(cfg.scenario.episodes, 20);
        assert_eq!(cfg.experiment.policy, PolicyKind::Mbacnn);
    }

    #[test]
    fn invalid_p_mut_names_field() {
        let text = format!("{MINIMAL}\n[evo]\np_mut = 1.5\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("evo.p_mut"), "{err}");
        let text = format!("{MINIMAL}\n[evo]\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let mut cfg = ExperimentConfig::new(ScenarioConfig::multi_ris_reference(4));
        cfg.experiment.perturbation = Some(Perturbation { epsilon: 0.1, alpha: 1.0 / 3.0 });
        cfg.experiment.policy = PolicyKind::FfCent;
        cfg.arch.direct_branch = Some(true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn policy_names() {
        for p in PolicyKind::ALL {
            assert_eq!(PolicyKind::parse(p.name()).unwrap(), p);
        }
        assert_eq!(PolicyKind::parse("ff-cent").unwrap(), PolicyKind::FfCent);
        assert!(PolicyKind::parse("a2c").is_err());
    }
}
