use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioConfig;
use crate::error::{invalid_config, Result};
use crate::system::PhaseAlphabet;

/// Elementwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
            Self::Relu => x.max(0.0),
            Self::Identity => x,
        }
    }
}

/// Network hyper-parameters that do not depend on the scenario dims.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    pub conv_kernel: usize,
    pub conv_channels: [usize; 2],
    pub conv_activation: Activation,
    pub phase_hidden: Vec<usize>,
    pub precoder_hidden: usize,
    pub phase_states: usize,
    /// Rescale each stacked channel to unit RMS before the first layer.
    pub normalize_inputs: bool,
    /// Direct-link attention branch; defaults to on exactly when the direct
    /// link is not blocked.
    pub direct_branch: Option<bool>,
    /// Hidden widths of the feedforward benchmark network.
    pub ff_hidden: Vec<usize>,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            conv_kernel: 3,
            conv_channels: [8, 8],
            conv_activation: Activation::Tanh,
            phase_hidden: vec![16],
            precoder_hidden: 64,
            phase_states: 2,
            normalize_inputs: true,
            direct_branch: None,
            ff_hidden: vec![800, 600, 600, 500, 200],
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if self.conv_kernel.is_multiple_of(2) {
            return Err(invalid_config(format!("arch.conv_kernel must be odd, got {}", self.conv_kernel)));
        }
        if self.conv_channels.contains(&0) {
            return Err(invalid_config("arch.conv_channels must be positive"));
        }
        if self.phase_hidden.contains(&0) || self.ff_hidden.contains(&0) {
            return Err(invalid_config("arch hidden widths must be positive"));
        }
        if self.precoder_hidden == 0 {
            return Err(invalid_config("arch.precoder_hidden must be positive"));
        }
        if self.phase_states < 2 {
            return Err(invalid_config("arch.phase_states must be at least 2"));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> PhaseAlphabet {
        if self.phase_states == 2 {
            PhaseAlphabet::Binary
        } else {
            PhaseAlphabet::MultiState(self.phase_states)
        }
    }
}

/// Full description of one attention-convolutional policy network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub n_tx: usize,
    pub n_ris: usize,
    pub codebook_size: usize,
    pub direct_branch: bool,
    pub conv_kernel: usize,
    pub conv_channels: [usize; 2],
    pub conv_activation: Activation,
    pub phase_hidden: Vec<usize>,
    pub precoder_hidden: usize,
    pub phase_states: usize,
    pub normalize_inputs: bool,
}

impl ArchConfig {
    pub fn new(n_tx: usize, n_ris: usize, direct_branch: bool) -> Self {
        Self::from_params(n_tx, n_ris, direct_branch, &NetworkParams::default())
    }

    pub fn from_params(n_tx: usize, n_ris: usize, direct_branch: bool, p: &NetworkParams) -> Self {
        Self {
            n_tx,
            n_ris,
            codebook_size: n_tx,
            direct_branch,
            conv_kernel: p.conv_kernel,
            conv_channels: p.conv_channels,
            conv_activation: p.conv_activation,
            phase_hidden: p.phase_hidden.clone(),
            precoder_hidden: p.precoder_hidden,
            phase_states: p.phase_states,
            normalize_inputs: p.normalize_inputs,
        }
    }

    pub fn for_scenario(cfg: &ScenarioConfig, p: &NetworkParams) -> Self {
        let direct = p.direct_branch.unwrap_or(!cfg.direct_blocked);
        Self::from_params(cfg.n_tx, cfg.n_ris, direct, p)
    }

    /// Feature width after merging the branches, `2 N_TX + 2`.
    pub fn d_cat(&self) -> usize {
        2 * self.n_tx + 2
    }

    pub fn alphabet(&self) -> PhaseAlphabet {
        if self.phase_states == 2 {
            PhaseAlphabet::Binary
        } else {
            PhaseAlphabet::MultiState(self.phase_states)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_ris == 0 || self.codebook_size == 0 {
            return Err(invalid_config("arch dims must be positive"));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return Err(invalid_config(format!("conv kernel must be odd, got {}", self.conv_kernel)));
        }
        if self.conv_channels.contains(&0) || self.phase_hidden.contains(&0) || self.precoder_hidden == 0 {
            return Err(invalid_config("layer widths must be positive"));
        }
        if self.phase_states < 2 {
            return Err(invalid_config("need at least two phase states"));
        }
        Ok(())
    }
}

/// Named slice of a flat genome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of every weight tensor inside a flat genome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenomeLayout {
    segments: Vec<Segment>,
    total: usize,
}

impl GenomeLayout {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Genome length `M`.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// FNV-1a hash of segment names and shapes, stored in checkpoints.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for s in &self.segments {
            feed(s.name.as_bytes());
            for d in &s.shape {
                feed(&(*d as u64).to_le_bytes());
            }
            feed(b";");
        }
        h
    }

    /// Concatenation of two layouts, the second shifted past the first.
    pub fn concat(&self, prefix: &str, other: &GenomeLayout) -> GenomeLayout {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().map(|s| Segment {
            name: format!("{prefix}{}", s.name),
            offset: s.offset + self.total,
            shape: s.shape.clone(),
        }));
        GenomeLayout {
            segments,
            total: self.total + other.total,
        }
    }
}

#[derive(Default)]
pub(crate) struct LayoutBuilder {
    segments: Vec<Segment>,
    total: usize,
}

impl LayoutBuilder {
    pub(crate) fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> Range<usize> {
        let seg = Segment {
            name: name.into(),
            offset: self.total,
            shape: shape.to_vec(),
        };
        let r = seg.range();
        self.total = r.end;
        self.segments.push(seg);
        r
    }

    pub(crate) fn finish(self) -> GenomeLayout {
        GenomeLayout {
            segments: self.segments,
            total: self.total,
        }
    }
}

/// Query/key/value projections of one attention branch (`d x d` each).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionSlots {
    pub dim: usize,
    pub wq: Range<usize>,
    pub wk: Range<usize>,
    pub wv: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseSlots {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weight: Range<usize>,
    pub bias: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvSlots {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernels: Range<usize>,
    pub bias: Range<usize>,
}

pub(crate) fn push_attention(b: &mut LayoutBuilder, name: &str, dim: usize) -> AttentionSlots {
    AttentionSlots {
        dim,
        wq: b.push(format!("{name}.wq"), &[dim, dim]),
        wk: b.push(format!("{name}.wk"), &[dim, dim]),
        wv: b.push(format!("{name}.wv"), &[dim, dim]),
    }
}

pub(crate) fn push_dense(b: &mut LayoutBuilder, name: &str, inputs: usize, outputs: usize) -> DenseSlots {
    DenseSlots {
        inputs,
        outputs,
        weight: b.push(format!("{name}.weight"), &[outputs, inputs]),
        bias: b.push(format!("{name}.bias"), &[outputs]),
    }
}

/// Typed offsets of an attention-convolutional network genome.
#[derive(Clone, Debug, PartialEq)]
pub struct MbacnnSlots {
    pub attn_h1: AttentionSlots,
    pub attn_h2: AttentionSlots,
    pub attn_h: Option<AttentionSlots>,
    pub direct_ff: Option<DenseSlots>,
    pub conv: [ConvSlots; 3],
    pub phase_mlp: Vec<DenseSlots>,
    pub precoder_hidden: DenseSlots,
    pub precoder_out: DenseSlots,
    pub layout: GenomeLayout,
}

/// Builds the flat-genome layout of an attention-convolutional network.
pub fn genome_layout(arch: &ArchConfig) -> GenomeLayout {
    mbacnn_slots(arch).layout
}

pub fn mbacnn_slots(arch: &ArchConfig) -> MbacnnSlots {
    let d_cat = arch.d_cat();
    let k = arch.conv_kernel;
    let mut b = LayoutBuilder::default();
    let attn_h1 = push_attention(&mut b, "attn_h1", 2 * arch.n_tx);
    let attn_h2 = push_attention(&mut b, "attn_h2", 2);
    let (attn_h, direct_ff) = if arch.direct_branch {
        let a = push_attention(&mut b, "attn_h", 2);
        let ff = push_dense(&mut b, "direct_ff", 2 * arch.n_tx, d_cat * arch.n_ris);
        (Some(a), Some(ff))
    } else {
        (None, None)
    };
    let [c1, c2] = arch.conv_channels;
    let mut conv_layer = |name: &str, cin: usize, cout: usize| ConvSlots {
        in_channels: cin,
        out_channels: cout,
        kernels: b.push(format!("{name}.kernels"), &[cout, cin, k, k]),
        bias: b.push(format!("{name}.bias"), &[cout]),
    };
    let conv = [conv_layer("conv1", 1, c1), conv_layer("conv2", c1, c2), conv_layer("conv3", c2, 1)];
    let out_width = if arch.phase_states == 2 { 1 } else { arch.phase_states };
    let mut widths = vec![d_cat];
    widths.extend(&arch.phase_hidden);
    widths.push(out_width);
    let phase_mlp = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| push_dense(&mut b, &format!("phase_mlp.{i}"), w[0], w[1]))
        .collect();
    let precoder_hidden = push_dense(&mut b, "precoder.hidden", arch.n_ris * d_cat, arch.precoder_hidden);
    let precoder_out = push_dense(&mut b, "precoder.out", arch.precoder_hidden, arch.codebook_size);
    MbacnnSlots {
        attn_h1,
        attn_h2,
        attn_h,
        direct_ff,
        conv,
        phase_mlp,
        precoder_hidden,
        precoder_out,
        layout: b.finish(),
    }
}
