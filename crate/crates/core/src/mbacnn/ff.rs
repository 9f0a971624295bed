use serde::{Deserialize, Serialize};

use super::heads::{precoder_select, sign_symbol, Dense, SelectionMode};
use super::layout::{push_dense, DenseSlots, GenomeLayout, LayoutBuilder};
use super::{check_genome, dense_view, normalize_rms, Action, Agent, Policy, PolicyOutput};
use crate::channel::{stack_view, ChannelSet, RisView};
use crate::error::{dim_mismatch, invalid_config, Result};
use crate::numerics::SimRng;
use crate::system::PhaseConfig;

/// Shape of the fully connected benchmark. With `ris_count > 1` the network
/// is centralized: it reads every RIS's channels and sets every RIS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FfArch {
    pub n_tx: usize,
    pub n_ris: usize,
    pub ris_count: usize,
    pub codebook_size: usize,
    pub hidden: Vec<usize>,
    pub normalize_inputs: bool,
}

impl FfArch {
    pub fn input_len(&self) -> usize {
        2 * self.n_tx + self.ris_count * (2 * self.n_tx * self.n_ris + 2 * self.n_ris)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_ris == 0 || self.ris_count == 0 || self.codebook_size == 0 {
            return Err(invalid_config("ff dims must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(invalid_config("ff needs at least one positive hidden layer"));
        }
        Ok(())
    }
}

/// Rectifier MLP emitting phase logits and precoder logits from one trunk.
#[derive(Clone, Debug)]
pub struct FfNet {
    arch: FfArch,
    trunk: Vec<DenseSlots>,
    phase_out: DenseSlots,
    precoder_out: DenseSlots,
    layout: GenomeLayout,
}

impl FfNet {
    pub fn new(arch: FfArch) -> Result<Self> {
        arch.validate()?;
        let mut b = LayoutBuilder::default();
        let mut widths = vec![arch.input_len()];
        widths.extend(&arch.hidden);
        let trunk = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| push_dense(&mut b, &format!("ff.{i}"), w[0], w[1]))
            .collect();
        let last = *widths.last().expect("non-empty");
        let phase_out = push_dense(&mut b, "ff.phase", last, arch.ris_count * arch.n_ris);
        let precoder_out = push_dense(&mut b, "ff.precoder", last, arch.codebook_size);
        Ok(Self {
            arch,
            trunk,
            phase_out,
            precoder_out,
            layout: b.finish(),
        })
    }

    pub fn arch(&self) -> &FfArch {
        &self.arch
    }

    fn input(&self, views: &[RisView<'_>]) -> Result<Vec<f64>> {
        let a = &self.arch;
        if views.len() != a.ris_count {
            return Err(dim_mismatch(format!("ff expects {} RIS views, got {}", a.ris_count, views.len())));
        }
        let mut x = Vec::with_capacity(a.input_len());
        for (k, v) in views.iter().enumerate() {
            if v.h1.rows() != a.n_tx || v.h1.cols() != a.n_ris || v.h2.rows() != a.n_ris || v.h.rows() != a.n_tx {
                return Err(dim_mismatch(format!(
                    "ff expects N_TX={}, N_RIS={}; channels are {}x{}",
                    a.n_tx,
                    a.n_ris,
                    v.h1.rows(),
                    v.h1.cols()
                )));
            }
            let mut s = stack_view(*v);
            if a.normalize_inputs {
                normalize_rms(&mut s.h);
                normalize_rms(s.h1.as_mut_slice());
                normalize_rms(&mut s.h2);
            }
            if k == 0 {
                x.extend_from_slice(&s.h);
            }
            x.extend_from_slice(s.h1.as_slice());
            x.extend_from_slice(&s.h2);
        }
        Ok(x)
    }

    /// Phases for every RIS plus precoder index and probabilities.
    pub fn forward_views(
        &self,
        genome: &[f64],
        views: &[RisView<'_>],
        rng: &mut SimRng,
        mode: SelectionMode,
    ) -> Result<(Vec<PhaseConfig>, usize, Vec<f64>)> {
        check_genome(genome, &self.layout)?;
        let mut x = self.input(views)?;
        for d in &self.trunk {
            x = dense_view(genome, d).forward(&x)?;
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let logits = dense_view(genome, &self.phase_out).forward(&x)?;
        let phases = logits
            .chunks(self.arch.n_ris)
            .map(|c| PhaseConfig::binary(c.iter().map(|v| sign_symbol(v.tanh())).collect()))
            .collect::<Result<Vec<_>>>()?;
        let out: Dense<'_> = dense_view(genome, &self.precoder_out);
        let (index, probs) = precoder_select(&out.forward(&x)?, rng, mode)?;
        Ok((phases, index, probs))
    }
}

impl Agent for FfNet {
    fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    fn codebook_size(&self) -> usize {
        self.arch.codebook_size
    }

    fn forward(&self, genome: &[f64], view: RisView<'_>, rng: &mut SimRng, mode: SelectionMode) -> Result<PolicyOutput> {
        let (mut phases, precoder_index, precoder_probs) = self.forward_views(genome, &[view], rng, mode)?;
        Ok(PolicyOutput {
            phases: phases.remove(0),
            precoder_index,
            precoder_probs,
        })
    }
}

impl Policy for FfNet {
    fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    fn act(&self, genome: &[f64], cs: &ChannelSet, rng: &mut SimRng, mode: SelectionMode) -> Result<Action> {
        let views: Vec<_> = (0..cs.ris_count()).map(|k| cs.view(k)).collect();
        let (phases, precoder_index, _) = self.forward_views(genome, &views, rng, mode)?;
        Ok(Action { phases, precoder_index })
    }
}
