use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Result};
use crate::numerics::{linear, softmax, RealMatrix};
use crate::system::{PhaseAlphabet, PhaseConfig};

/// Borrowed fully connected layer, weight stored `outputs x inputs`.
#[derive(Clone, Copy, Debug)]
pub struct Dense<'a> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: &'a [f64],
    pub bias: &'a [f64],
}

impl Dense<'_> {
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs || self.weight.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(dim_mismatch(format!(
                "dense layer {}x{} fed {} inputs",
                self.outputs,
                self.inputs,
                x.len()
            )));
        }
        Ok(linear(x, self.weight, self.bias))
    }
}

/// How the precoder index is drawn from the output distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Sample,
    Argmax,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; fall back to the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn select_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R, mode: SelectionMode) -> usize {
    match mode {
        SelectionMode::Sample => sample_index(probs, rng),
        SelectionMode::Argmax => argmax(probs),
    }
}

/// Maps `tanh` outputs to binary symbols; `sign(0) = +1`.
pub fn sign_symbol(x: f64) -> i32 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Applies the same MLP to every row of `f`. Binary mode: tanh after every
/// layer, then sign. Multi-state mode: tanh hidden layers, softmax output,
/// argmax state.
pub fn phase_head(f: &RealMatrix, mlp: &[Dense<'_>], alphabet: PhaseAlphabet) -> Result<PhaseConfig> {
    let Some((last, hidden)) = mlp.split_last() else {
        return Err(dim_mismatch("phase MLP has no layers"));
    };
    let mut values = Vec::with_capacity(f.rows());
    for r in 0..f.rows() {
        let mut x = f.row(r).to_vec();
        for layer in hidden {
            x = layer.forward(&x)?;
            x.iter_mut().for_each(|v| *v = v.tanh());
        }
        let out = last.forward(&x)?;
        let symbol = match alphabet {
            PhaseAlphabet::Binary => sign_symbol(out[0].tanh()),
            PhaseAlphabet::MultiState(_) => argmax(&softmax(&out)?) as i32,
        };
        values.push(symbol);
    }
    PhaseConfig::new(alphabet, values)
}

/// Flattened features through a ReLU hidden layer and a softmax output.
pub fn precoder_head<R: Rng + ?Sized>(
    f: &RealMatrix,
    hidden: Dense<'_>,
    out: Dense<'_>,
    rng: &mut R,
    mode: SelectionMode,
) -> Result<(usize, Vec<f64>)> {
    let mut x = hidden.forward(f.as_slice())?;
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    precoder_select(&out.forward(&x)?, rng, mode)
}

/// Softmax over precoder logits followed by index selection.
pub fn precoder_select<R: Rng + ?Sized>(logits: &[f64], rng: &mut R, mode: SelectionMode) -> Result<(usize, Vec<f64>)> {
    let probs = softmax(logits)?;
    Ok((select_index(&probs, rng, mode), probs))
}
