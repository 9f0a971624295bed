//! Forward-only inference of the attention-convolutional policy network and
//! the feedforward benchmark from flat genomes.
//!
//! A network maps the channels seen by one RIS to a discrete phase
//! configuration and a distribution over codebook precoders. Weights are
//! never stored inside the network objects: every call receives the genome
//! slice, which lets one network description serve a whole population.

pub mod attention;
pub mod cnn;
pub mod ff;
pub mod genome_io;
pub mod heads;
pub mod layout;

pub use attention::{attention_branch, merge_branches, AttentionOutput, DirectProjection};
pub use cnn::cnn_forward;
pub use ff::{FfArch, FfNet};
pub use genome_io::{load_genome, read_genome, save_genome, write_genome};
pub use heads::{argmax, phase_head, precoder_head, precoder_select, sample_index, select_index, Dense, SelectionMode};
pub use layout::{
    genome_layout, mbacnn_slots, Activation, ArchConfig, AttentionSlots, ConvSlots, DenseSlots, GenomeLayout,
    MbacnnSlots, NetworkParams, Segment,
};

use crate::channel::{stack_view, ChannelSet, RisView};
use crate::error::{dim_mismatch, invalid_input, Result};
use crate::numerics::{ConvWeights, RealMatrix, SimRng};
use crate::system::PhaseConfig;

/// Output of one forward pass for a single RIS.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub phases: PhaseConfig,
    pub precoder_index: usize,
    pub precoder_probs: Vec<f64>,
}

/// Decision for every RIS of a channel set plus the shared precoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub phases: Vec<PhaseConfig>,
    pub precoder_index: usize,
}

/// A network that acts on the local channels of one RIS.
pub trait Agent: Send + Sync {
    fn layout(&self) -> &GenomeLayout;
    fn codebook_size(&self) -> usize;
    fn forward(&self, genome: &[f64], view: RisView<'_>, rng: &mut SimRng, mode: SelectionMode) -> Result<PolicyOutput>;
}

/// A genome-parameterized controller of a full channel set.
pub trait Policy: Send + Sync {
    fn layout(&self) -> &GenomeLayout;
    fn act(&self, genome: &[f64], cs: &ChannelSet, rng: &mut SimRng, mode: SelectionMode) -> Result<Action>;

    fn genome_len(&self) -> usize {
        self.layout().len()
    }
}

pub(crate) fn check_genome(genome: &[f64], layout: &GenomeLayout) -> Result<()> {
    if genome.len() != layout.len() {
        return Err(invalid_input(format!(
            "genome has {} entries, layout expects {}",
            genome.len(),
            layout.len()
        )));
    }
    Ok(())
}

pub(crate) fn dense_view<'a>(genome: &'a [f64], s: &DenseSlots) -> Dense<'a> {
    Dense {
        inputs: s.inputs,
        outputs: s.outputs,
        weight: &genome[s.weight.clone()],
        bias: &genome[s.bias.clone()],
    }
}

fn square(genome: &[f64], range: &std::ops::Range<usize>, dim: usize) -> RealMatrix {
    RealMatrix::from_vec(dim, dim, genome[range.clone()].to_vec()).expect("layout shapes are consistent")
}

/// Divides `x` by its root mean square; all-zero input is left unchanged.
pub fn normalize_rms(x: &mut [f64]) {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    if ms > 0.0 && ms.is_finite() {
        let inv = 1.0 / ms.sqrt();
        x.iter_mut().for_each(|v| *v *= inv);
    }
}

/// Tokens of a stacked vector: one `(re, im)` row per element.
fn pair_tokens(stacked: &[f64]) -> RealMatrix {
    let n = stacked.len() / 2;
    RealMatrix::from_fn(n, 2, |r, c| stacked[r + c * n])
}

/// Intermediate tensors of a forward pass, exposed for inspection.
#[derive(Clone, Debug)]
pub struct Trace {
    pub attn_h1: AttentionOutput,
    pub attn_h2: AttentionOutput,
    pub attn_h: Option<AttentionOutput>,
    pub merged: RealMatrix,
    pub features: RealMatrix,
}

/// The attention-convolutional policy network.
#[derive(Clone, Debug)]
pub struct Mbacnn {
    arch: ArchConfig,
    slots: MbacnnSlots,
}

impl Mbacnn {
    pub fn new(arch: ArchConfig) -> Result<Self> {
        arch.validate()?;
        let slots = mbacnn_slots(&arch);
        Ok(Self { arch, slots })
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn slots(&self) -> &MbacnnSlots {
        &self.slots
    }

    /// Runs the branches, merge and conv stack, stopping before the heads.
    pub fn trace(&self, genome: &[f64], view: RisView<'_>) -> Result<Trace> {
        check_genome(genome, &self.slots.layout)?;
        let (n_tx, n_ris) = (self.arch.n_tx, self.arch.n_ris);
        if view.h1.rows() != n_tx || view.h1.cols() != n_ris || view.h2.rows() != n_ris || view.h.rows() != n_tx {
            return Err(dim_mismatch(format!(
                "network expects N_TX={n_tx}, N_RIS={n_ris}; channels are {}x{}",
                view.h1.rows(),
                view.h1.cols()
            )));
        }
        let mut stacked = stack_view(view);
        if self.arch.normalize_inputs {
            normalize_rms(&mut stacked.h);
            normalize_rms(stacked.h1.as_mut_slice());
            normalize_rms(&mut stacked.h2);
        }
        let s = &self.slots;
        let branch = |tokens: &RealMatrix, a: &AttentionSlots| {
            attention_branch(
                tokens,
                &square(genome, &a.wq, a.dim),
                &square(genome, &a.wk, a.dim),
                &square(genome, &a.wv, a.dim),
            )
        };
        let attn_h1 = branch(&stacked.h1.transpose(), &s.attn_h1)?;
        let attn_h2 = branch(&pair_tokens(&stacked.h2), &s.attn_h2)?;
        let attn_h = match &s.attn_h {
            Some(a) => Some(branch(&pair_tokens(&stacked.h), a)?),
            None => None,
        };
        let direct = match (&attn_h, &s.direct_ff) {
            (Some(a), Some(ff)) => Some((
                &a.output,
                DirectProjection {
                    weight: &genome[ff.weight.clone()],
                    bias: &genome[ff.bias.clone()],
                },
            )),
            _ => None,
        };
        let merged = merge_branches(&attn_h1.output, &attn_h2.output, direct)?;
        let k = self.arch.conv_kernel;
        let conv = |c: &ConvSlots| ConvWeights {
            out_channels: c.out_channels,
            in_channels: c.in_channels,
            kernel: k,
            kernels: &genome[c.kernels.clone()],
            bias: &genome[c.bias.clone()],
        };
        let layers = [conv(&s.conv[0]), conv(&s.conv[1]), conv(&s.conv[2])];
        let features = cnn_forward(&merged, &layers, self.arch.conv_activation)?;
        Ok(Trace {
            attn_h1,
            attn_h2,
            attn_h,
            merged,
            features,
        })
    }
}

impl Agent for Mbacnn {
    fn layout(&self) -> &GenomeLayout {
        &self.slots.layout
    }

    fn codebook_size(&self) -> usize {
        self.arch.codebook_size
    }

    fn forward(&self, genome: &[f64], view: RisView<'_>, rng: &mut SimRng, mode: SelectionMode) -> Result<PolicyOutput> {
        let trace = self.trace(genome, view)?;
        let s = &self.slots;
        let mlp: Vec<Dense<'_>> = s.phase_mlp.iter().map(|d| dense_view(genome, d)).collect();
        let phases = phase_head(&trace.features, &mlp, self.arch.alphabet())?;
        let (precoder_index, precoder_probs) = precoder_head(
            &trace.features,
            dense_view(genome, &s.precoder_hidden),
            dense_view(genome, &s.precoder_out),
            rng,
            mode,
        )?;
        Ok(PolicyOutput {
            phases,
            precoder_index,
            precoder_probs,
        })
    }
}

impl Policy for Mbacnn {
    fn layout(&self) -> &GenomeLayout {
        &self.slots.layout
    }

    fn act(&self, genome: &[f64], cs: &ChannelSet, rng: &mut SimRng, mode: SelectionMode) -> Result<Action> {
        if cs.ris_count() != 1 {
            return Err(dim_mismatch(format!(
                "a single network controls one RIS, channel set has {}",
                cs.ris_count()
            )));
        }
        let out = self.forward(genome, cs.view(0), rng, mode)?;
        Ok(Action {
            phases: vec![out.phases],
            precoder_index: out.precoder_index,
        })
    }
}
