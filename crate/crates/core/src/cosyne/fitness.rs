use crate::channel::{ChannelModel, ChannelSet, ChannelSource, Perturbation, ScenarioConfig};
use crate::error::{invalid_input, Result};
use crate::mbacnn::{Action, Policy, SelectionMode};
use crate::numerics::{child_seed, SimRng};
use crate::system::{dft_codebook, snr, Codebook, LinkBudget};

/// Everything needed to score actions: channel source, link budget,
/// codebook and horizon `T`.
#[derive(Clone, Debug)]
pub struct Environment {
    pub source: ChannelSource,
    pub budget: LinkBudget,
    pub codebook: Codebook,
    pub horizon: usize,
    pub perturbation: Option<Perturbation>,
}

impl Environment {
    /// Model-driven environment with a DFT codebook of size `N_TX`.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            source: ChannelSource::Model(Box::new(ChannelModel::new(cfg)?)),
            budget: LinkBudget::from_scenario(cfg),
            codebook: dft_codebook(cfg.n_tx),
            horizon: cfg.horizon,
            perturbation: None,
        })
    }

    pub fn with_source(mut self, source: ChannelSource) -> Self {
        self.source = source;
        self
    }

    /// SNR achieved by `action` on `cs`.
    pub fn gamma(&self, cs: &ChannelSet, action: &Action) -> Result<f64> {
        if action.precoder_index >= self.codebook.len() {
            return Err(invalid_input(format!(
                "precoder index {} outside a codebook of {}",
                action.precoder_index,
                self.codebook.len()
            )));
        }
        snr(cs, &action.phases, self.codebook.get(action.precoder_index), self.budget)
    }
}

/// Seeds of the channel and policy streams of one episode.
pub fn episode_rngs(seed: u64, episode: usize) -> (SimRng, SimRng, SimRng) {
    let e = episode as u64;
    (
        SimRng::seeded(child_seed(seed, "channels", e)),
        SimRng::seeded(child_seed(seed, "policy", e)),
        SimRng::seeded(child_seed(seed, "perturb", e)),
    )
}

/// Runs `episodes x horizon` coherence blocks, asking `act` for a decision
/// in each, and returns every per-step SNR in episode-major order.
pub fn rollout<F>(env: &Environment, episodes: usize, seed: u64, mut act: F) -> Result<Vec<f64>>
where
    F: FnMut(&ChannelSet, &mut SimRng) -> Result<Action>,
{
    if episodes == 0 || env.horizon == 0 {
        return Err(invalid_input("episodes and horizon must be at least 1"));
    }
    let mut gammas = Vec::with_capacity(episodes * env.horizon);
    for e in 0..episodes {
        let (mut chan_rng, mut pol_rng, mut pert_rng) = episode_rngs(seed, e);
        for t in 0..env.horizon {
            let mut cs = env.source.draw(e, t, &mut chan_rng);
            if let Some(p) = env.perturbation {
                p.apply(&mut cs, &mut pert_rng)?;
            }
            let action = act(&cs, &mut pol_rng)?;
            gammas.push(env.gamma(&cs, &action)?);
        }
    }
    Ok(gammas)
}

/// Average instantaneous SNR of `policy` under `genome` over
/// `episodes x horizon` blocks.
pub fn evaluate_fitness<P: Policy + ?Sized>(
    policy: &P,
    genome: &[f64],
    env: &Environment,
    episodes: usize,
    seed: u64,
    mode: SelectionMode,
) -> Result<f64> {
    let gammas = rollout(env, episodes, seed, |cs, rng| policy.act(genome, cs, rng, mode))?;
    Ok(mean(&gammas))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
