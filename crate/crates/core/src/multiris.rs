//! Distributed control of several RISs. Every RIS agent runs the same
//! network on its local channels, keeps its phase decision and votes for a
//! precoder; a small receiver-side network turns the votes into the final
//! precoder choice. Agents and aggregator are evolved as one genome.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, RisView, ScenarioConfig};
use crate::cosyne::{mean, rollout, Environment};
use crate::error::{dim_mismatch, invalid_config, invalid_input, Result};
use crate::mbacnn::layout::{push_dense, DenseSlots, LayoutBuilder};
use crate::mbacnn::{argmax, check_genome, dense_view, precoder_select, Action, Agent, GenomeLayout, Policy, SelectionMode};
use crate::numerics::SimRng;
use crate::system::PhaseConfig;

/// How the aggregator reads the agents' votes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteEncoding {
    /// `K |V|` inputs with a one at `k |V| + vote_k`.
    #[default]
    OneHot,
    /// `K` inputs holding the raw vote indices.
    RawIndex,
    /// No network: plurality vote, lowest index on ties.
    Bypass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregatorConfig {
    pub hidden: usize,
    pub encoding: VoteEncoding,
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            encoding: VoteEncoding::OneHot,
        }
    }
}

impl AggregatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 && self.encoding != VoteEncoding::Bypass {
            return Err(invalid_config("aggregator.hidden must be at least 1"));
        }
        Ok(())
    }
}

/// Per-agent precoder preferences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteVector(pub Vec<usize>);

/// Weight offsets of the aggregator, relative to its own genome slice.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatorSlots {
    pub hidden: Option<DenseSlots>,
    pub out: Option<DenseSlots>,
    pub layout: GenomeLayout,
}

pub fn aggregator_slots(cfg: &AggregatorConfig, k: usize, codebook_size: usize) -> AggregatorSlots {
    let mut b = LayoutBuilder::default();
    let inputs = match cfg.encoding {
        VoteEncoding::OneHot => k * codebook_size,
        VoteEncoding::RawIndex => k,
        VoteEncoding::Bypass => {
            return AggregatorSlots {
                hidden: None,
                out: None,
                layout: b.finish(),
            }
        }
    };
    let hidden = push_dense(&mut b, "hidden", inputs, cfg.hidden);
    let out = push_dense(&mut b, "out", cfg.hidden, codebook_size);
    AggregatorSlots {
        hidden: Some(hidden),
        out: Some(out),
        layout: b.finish(),
    }
}

/// Plurality of the votes, lowest index on ties.
pub fn plurality(votes: &[usize], codebook_size: usize) -> (usize, Vec<f64>) {
    let mut counts = vec![0.0; codebook_size];
    for &v in votes {
        counts[v] += 1.0;
    }
    let index = argmax(&counts);
    let total = votes.len() as f64;
    (index, counts.into_iter().map(|c| c / total).collect())
}

pub fn encode_votes(votes: &VoteVector, encoding: VoteEncoding, codebook_size: usize) -> Vec<f64> {
    match encoding {
        VoteEncoding::OneHot => {
            let mut x = vec![0.0; votes.0.len() * codebook_size];
            for (k, &v) in votes.0.iter().enumerate() {
                x[k * codebook_size + v] = 1.0;
            }
            x
        }
        VoteEncoding::RawIndex => votes.0.iter().map(|&v| v as f64).collect(),
        VoteEncoding::Bypass => Vec::new(),
    }
}

/// Final precoder index and probabilities from the agents' votes.
pub fn aggregate_precoder(
    genome: &[f64],
    slots: &AggregatorSlots,
    encoding: VoteEncoding,
    votes: &VoteVector,
    codebook_size: usize,
    rng: &mut SimRng,
    mode: SelectionMode,
) -> Result<(usize, Vec<f64>)> {
    check_genome(genome, &slots.layout)?;
    if votes.0.is_empty() {
        return Err(invalid_input("no votes to aggregate"));
    }
    if let Some(bad) = votes.0.iter().find(|&&v| v >= codebook_size) {
        return Err(invalid_input(format!("vote {bad} outside a codebook of {codebook_size}")));
    }
    let (Some(hidden), Some(out)) = (&slots.hidden, &slots.out) else {
        return Ok(plurality(&votes.0, codebook_size));
    };
    let x = encode_votes(votes, encoding, codebook_size);
    let mut z = dense_view(genome, hidden).forward(&x)?;
    z.iter_mut().for_each(|v| *v = v.max(0.0));
    precoder_select(&dense_view(genome, out).forward(&z)?, rng, mode)
}

/// One agent's phase decision and argmax precoder vote.
pub fn agent_act<A: Agent + ?Sized>(agent: &A, genome: &[f64], view: RisView<'_>, rng: &mut SimRng) -> Result<(PhaseConfig, usize)> {
    let out = agent.forward(genome, view, rng, SelectionMode::Argmax)?;
    Ok((out.phases, out.precoder_index))
}

/// `K` agents sharing one genome plus the receiver-side aggregator.
#[derive(Clone, Debug)]
pub struct Distributed<A> {
    agent: A,
    ris_count: usize,
    aggregator: AggregatorConfig,
    agg_slots: AggregatorSlots,
    layout: GenomeLayout,
}

impl<A: Agent> Distributed<A> {
    pub fn new(agent: A, ris_count: usize, aggregator: AggregatorConfig) -> Result<Self> {
        if ris_count == 0 {
            return Err(invalid_config("need at least one RIS agent"));
        }
        aggregator.validate()?;
        let agg_slots = aggregator_slots(&aggregator, ris_count, agent.codebook_size());
        let layout = agent.layout().concat("aggregator.", &agg_slots.layout);
        Ok(Self {
            agent,
            ris_count,
            aggregator,
            agg_slots,
            layout,
        })
    }

    pub fn agent(&self) -> &A {
        &self.agent
    }

    pub fn ris_count(&self) -> usize {
        self.ris_count
    }

    /// Splits a joint genome into the shared agent part and the aggregator part.
    pub fn split<'g>(&self, genome: &'g [f64]) -> Result<(&'g [f64], &'g [f64])> {
        check_genome(genome, &self.layout)?;
        Ok(genome.split_at(self.agent.layout().len()))
    }

    /// Every agent's decision and the aggregated precoder.
    pub fn decide(&self, genome: &[f64], cs: &ChannelSet, rng: &mut SimRng, mode: SelectionMode) -> Result<(Action, VoteVector)> {
        if cs.ris_count() != self.ris_count {
            return Err(dim_mismatch(format!(
                "{} agents but the channel set has {} RISs",
                self.ris_count,
                cs.ris_count()
            )));
        }
        let (g_agent, g_agg) = self.split(genome)?;
        let mut phases = Vec::with_capacity(self.ris_count);
        let mut votes = Vec::with_capacity(self.ris_count);
        for k in 0..self.ris_count {
            let (phi, vote) = agent_act(&self.agent, g_agent, cs.view(k), rng)?;
            phases.push(phi);
            votes.push(vote);
        }
        let votes = VoteVector(votes);
        let (precoder_index, _) = aggregate_precoder(
            g_agg,
            &self.agg_slots,
            self.aggregator.encoding,
            &votes,
            self.agent.codebook_size(),
            rng,
            mode,
        )?;
        Ok((Action { phases, precoder_index }, votes))
    }
}

impl<A: Agent> Policy for Distributed<A> {
    fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    fn act(&self, genome: &[f64], cs: &ChannelSet, rng: &mut SimRng, mode: SelectionMode) -> Result<Action> {
        Ok(self.decide(genome, cs, rng, mode)?.0)
    }
}

/// Mean SNR of the distributed controller over `episodes x horizon` blocks:
/// every block all agents act on fresh channels, the votes are aggregated
/// and the SNR of the joint decision is accumulated.
pub fn evaluate_fitness_multi<A: Agent>(
    policy: &Distributed<A>,
    genome: &[f64],
    env: &Environment,
    episodes: usize,
    seed: u64,
    mode: SelectionMode,
) -> Result<f64> {
    let gammas = rollout(env, episodes, seed, |cs, rng| Ok(policy.decide(genome, cs, rng, mode)?.0))?;
    Ok(mean(&gammas))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolPhase {
    Training,
    Deployment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlArchitecture {
    Distributed,
    Centralized,
}

/// Messages exchanged per coherence block. Weight broadcasts are counted
/// per fitness evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadRecord {
    pub phase: ProtocolPhase,
    pub scalars_up: u64,
    pub scalars_down: u64,
    pub bits_votes: u64,
    pub weight_broadcast_scalars: u64,
    pub architecture: ControlArchitecture,
    pub bits_phase_down: u64,
}

/// Signalling cost of running `cfg` under the given architecture and phase.
/// `genome_len` is the number of evolved weights broadcast per evaluation.
pub fn message_accounting(
    cfg: &ScenarioConfig,
    phase: ProtocolPhase,
    architecture: ControlArchitecture,
    genome_len: usize,
) -> OverheadRecord {
    let (k, n_tx, n_ris) = (cfg.ris_count as u64, cfg.n_tx as u64, cfg.n_ris as u64);
    let codebook = cfg.n_tx as u64;
    let vote_bits = if codebook <= 1 { 0 } else { 64 - (codebook - 1).leading_zeros() as u64 };
    let weight_broadcast_scalars = match phase {
        ProtocolPhase::Training => genome_len as u64,
        ProtocolPhase::Deployment => 0,
    };
    match architecture {
        ControlArchitecture::Distributed => OverheadRecord {
            phase,
            scalars_up: 0,
            scalars_down: 2 * n_tx,
            bits_votes: k * vote_bits,
            weight_broadcast_scalars,
            architecture,
            bits_phase_down: 0,
        },
        ControlArchitecture::Centralized => OverheadRecord {
            phase,
            scalars_up: 2 * n_tx * n_ris * k + 2 * n_ris * k + 2 * n_tx,
            scalars_down: 0,
            bits_votes: 0,
            weight_broadcast_scalars,
            architecture,
            bits_phase_down: k * n_ris,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_set, ChannelModel};
    use crate::cosyne::evaluate_fitness;
    use crate::mbacnn::{ArchConfig, Mbacnn};
    use rand::Rng;

    fn random_genome(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seeded(seed);
        (0..len).map(|_| rng.random_range(-0.5..0.5)).collect()
    }

    #[test]
    fn zero_genome_agent() {
        let net = Mbacnn::new(ArchConfig::new(4, 16, true)).unwrap();
        let cs = sample_channel_set(&ScenarioConfig::desk_multi(2), &mut SimRng::seeded(1)).unwrap();
        let g = vec![0.0; Agent::layout(&net).len()];
        let (phi, vote) = agent_act(&net, &g, cs.view(1), &mut SimRng::seeded(0)).unwrap();
        assert_eq!(phi.values(), &[1; 16]);
        assert_eq!(vote, 0);
    }

    #[test]
    fn shared_genome_identical_agents() {
        let net = Mbacnn::new(ArchConfig::new(4, 16, true)).unwrap();
        let mut cs = sample_channel_set(&ScenarioConfig::desk_multi(2), &mut SimRng::seeded(2)).unwrap();
        cs.h1[1] = cs.h1[0].clone();
        cs.h2[1] = cs.h2[0].clone();
        let g = random_genome(Agent::layout(&net).len(), 3);
        let a = agent_act(&net, &g, cs.view(0), &mut SimRng::seeded(0)).unwrap();
        let b = agent_act(&net, &g, cs.view(1), &mut SimRng::seeded(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregator_examples() {
        let cfg = AggregatorConfig::default();
        let slots = aggregator_slots(&cfg, 2, 4);
        let g = vec![0.0; slots.layout.len()];
        let votes = VoteVector(vec![3, 3]);
        let (_, probs) =
            aggregate_precoder(&g, &slots, cfg.encoding, &votes, 4, &mut SimRng::seeded(0), SelectionMode::Sample).unwrap();
        assert!(probs.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        let x = encode_votes(&votes, VoteEncoding::OneHot, 4);
        let ones: Vec<usize> = x.iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect();
        assert_eq!(ones, vec![3, 7]);
        let bad = VoteVector(vec![4, 0]);
        assert!(aggregate_precoder(&g, &slots, cfg.encoding, &bad, 4, &mut SimRng::seeded(0), SelectionMode::Sample).is_err());
    }

    #[test]
    fn constructed_majority_weights() {
        let (k, v) = (2, 4);
        let cfg = AggregatorConfig { hidden: v, encoding: VoteEncoding::OneHot };
        let slots = aggregator_slots(&cfg, k, v);
        let mut g = vec![0.0; slots.layout.len()];
        let hidden = slots.hidden.as_ref().unwrap();
        for j in 0..v {
            for a in 0..k {
                g[hidden.weight.start + j * k * v + a * v + j] = 1.0;
            }
        }
        let out = slots.out.as_ref().unwrap();
        for j in 0..v {
            g[out.weight.start + j * v + j] = 10.0;
        }
        for a in 0..v {
            for b in 0..v {
                let votes = VoteVector(vec![a, b]);
                let (idx, probs) =
                    aggregate_precoder(&g, &slots, cfg.encoding, &votes, v, &mut SimRng::seeded(0), SelectionMode::Argmax).unwrap();
                assert_eq!(idx, plurality(&votes.0, v).0);
                assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reduces_to_single_ris_pipeline() {
        let mut cfg = ScenarioConfig::desk();
        cfg.horizon = 10;
        let net = Mbacnn::new(ArchConfig::new(4, 16, false)).unwrap();
        let multi = Distributed::new(
            net.clone(),
            1,
            AggregatorConfig { hidden: 16, encoding: VoteEncoding::Bypass },
        )
        .unwrap();
        assert_eq!(Policy::layout(&multi).len(), Agent::layout(&net).len());
        let g = random_genome(Agent::layout(&net).len(), 4);
        let env = Environment::from_scenario(&cfg).unwrap();
        for seed in 0..3 {
            let single = evaluate_fitness(&net, &g, &env, 2, seed, SelectionMode::Argmax).unwrap();
            let joint = evaluate_fitness_multi(&multi, &g, &env, 2, seed, SelectionMode::Argmax).unwrap();
            assert_eq!(single.to_bits(), joint.to_bits());
        }
    }

    #[test]
    fn accumulation_oracle_two_agents() {
        let mut cfg = ScenarioConfig::desk_multi(2);
        cfg.horizon = 5;
        let net = Mbacnn::new(ArchConfig::new(4, 16, true)).unwrap();
        let multi = Distributed::new(net, 2, AggregatorConfig::default()).unwrap();
        let g = random_genome(Policy::layout(&multi).len(), 5);
        let env = Environment::from_scenario(&cfg).unwrap();
        let f = evaluate_fitness_multi(&multi, &g, &env, 2, 11, SelectionMode::Sample).unwrap();

        let model = ChannelModel::new(&cfg).unwrap();
        let mut sum = 0.0;
        for e in 0..2 {
            let (mut chan, mut pol, _) = crate::cosyne::episode_rngs(11, e);
            for _ in 0..5 {
                let cs = model.sample(&mut chan);
                let (action, _) = multi.decide(&g, &cs, &mut pol, SelectionMode::Sample).unwrap();
                sum += env.gamma(&cs, &action).unwrap();
            }
        }
        assert!((f - sum / 10.0).abs() <= 1e-12 * f);
    }

    #[test]
    fn frozen_channels_single_gamma() {
        let cfg = ScenarioConfig::desk_multi(2);
        let net = Mbacnn::new(ArchConfig::new(4, 16, true)).unwrap();
        let multi = Distributed::new(net, 2, AggregatorConfig::default()).unwrap();
        let g = random_genome(Policy::layout(&multi).len(), 6);
        let cs = sample_channel_set(&cfg, &mut SimRng::seeded(3)).unwrap();
        let env = Environment::from_scenario(&cfg)
            .unwrap()
            .with_source(crate::channel::ChannelSource::frozen(cs.clone()));
        let f = evaluate_fitness_multi(&multi, &g, &env, 2, 1, SelectionMode::Argmax).unwrap();
        let (action, _) = multi.decide(&g, &cs, &mut SimRng::seeded(0), SelectionMode::Argmax).unwrap();
        let gamma = env.gamma(&cs, &action).unwrap();
        assert!((f - gamma).abs() <= 1e-12 * gamma);
    }

    #[test]
    fn overhead_arithmetic() {
        let cfg = ScenarioConfig::multi_ris_reference(4);
        let d = message_accounting(&cfg, ProtocolPhase::Deployment, ControlArchitecture::Distributed, 1000);
        assert_eq!(d.bits_votes, 16);
        assert_eq!(d.weight_broadcast_scalars, 0);
        let t = message_accounting(&cfg, ProtocolPhase::Training, ControlArchitecture::Distributed, 1000);
        assert_eq!(t.weight_broadcast_scalars, 1000);
        let c = message_accounting(&cfg, ProtocolPhase::Deployment, ControlArchitecture::Centralized, 1000);
        let csi = 2 * 16 * 400 * 4 + 2 * 400 * 4 + 2 * 16;
        assert_eq!(c.scalars_up, csi);
        assert!(c.scalars_up + c.scalars_down > d.scalars_up + d.scalars_down);
    }
}
