use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{perturb_h2, ChannelModel, ChannelSet};
use crate::error::{invalid_input, Result};

/// Mismatch noise added to every RIS-RX channel at evaluation time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub epsilon: f64,
    pub alpha: f64,
}

/// Where coherence blocks come from: fresh draws from a model, or a
/// recorded trace of episodes replayed cyclically.
#[derive(Clone, Debug)]
pub enum ChannelSource {
    Model(Box<ChannelModel>),
    Trace(Arc<Vec<Vec<ChannelSet>>>),
}

impl ChannelSource {
    pub fn trace(episodes: Vec<Vec<ChannelSet>>) -> Result<Self> {
        if episodes.is_empty() || episodes.iter().any(Vec::is_empty) {
            return Err(invalid_input("a channel trace needs at least one non-empty episode"));
        }
        Ok(Self::Trace(Arc::new(episodes)))
    }

    /// Source that returns the same channel set at every step.
    pub fn frozen(cs: ChannelSet) -> Self {
        Self::Trace(Arc::new(vec![vec![cs]]))
    }

    /// Channels of step `step` in episode `episode`. Model sources draw from
    /// `rng`; trace sources ignore it.
    pub fn draw<R: Rng + ?Sized>(&self, episode: usize, step: usize, rng: &mut R) -> ChannelSet {
        match self {
            Self::Model(m) => m.sample(rng),
            Self::Trace(t) => {
                let ep = &t[episode % t.len()];
                ep[step % ep.len()].clone()
            }
        }
    }
}

impl Perturbation {
    pub fn apply<R: Rng + ?Sized>(&self, cs: &mut ChannelSet, rng: &mut R) -> Result<()> {
        for h2 in cs.h2.iter_mut() {
            *h2 = perturb_h2(h2, self.epsilon, self.alpha, rng)?;
        }
        Ok(())
    }
}
