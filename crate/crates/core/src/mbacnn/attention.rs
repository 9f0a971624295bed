use crate::error::{dim_mismatch, Result};
use crate::numerics::{layer_norm, linear, matmul, real::matmul_transposed, softmax_global, RealMatrix};

/// Scores and attended output of one self-attention branch.
#[derive(Clone, Debug)]
pub struct AttentionOutput {
    /// `n x n`, sums to one over all entries.
    pub scores: RealMatrix,
    /// `n x d`.
    pub output: RealMatrix,
}

/// Single-head self-attention over `n` tokens of width `d`:
/// `S = softmax_all(X Wq (X Wk)^T / sqrt(d))`, `A = S X Wv`.
pub fn attention_branch(
    tokens: &RealMatrix,
    wq: &RealMatrix,
    wk: &RealMatrix,
    wv: &RealMatrix,
) -> Result<AttentionOutput> {
    let d = tokens.cols();
    for w in [wq, wk, wv] {
        if w.shape() != (d, d) {
            return Err(dim_mismatch(format!(
                "projection is {:?}, tokens have width {d}",
                w.shape()
            )));
        }
    }
    let q = matmul(tokens, wq)?;
    let k = matmul(tokens, wk)?;
    let scale = 1.0 / (d as f64).sqrt();
    let logits = matmul_transposed(&q, &k)?.map(|x| x * scale);
    let scores = softmax_global(&logits)?;
    let p = matmul(tokens, wv)?;
    let output = matmul(&scores, &p)?;
    Ok(AttentionOutput { scores, output })
}

/// Weights of the dense layer that lifts the flattened direct-link
/// attention output to `N_RIS x d_cat`.
#[derive(Clone, Copy, Debug)]
pub struct DirectProjection<'a> {
    pub weight: &'a [f64],
    pub bias: &'a [f64],
}

/// `A_T = LN(colcat(A1, A2)) + LN(reshape(W vec(A) + b))`, or just the
/// first term when the direct branch is absent.
pub fn merge_branches(
    a1: &RealMatrix,
    a2: &RealMatrix,
    direct: Option<(&RealMatrix, DirectProjection<'_>)>,
) -> Result<RealMatrix> {
    let concat = a1.hcat(a2)?;
    let normed = layer_norm(&concat)?;
    let Some((a, proj)) = direct else {
        return Ok(normed);
    };
    let (n_ris, d_cat) = concat.shape();
    if proj.bias.len() != n_ris * d_cat || proj.weight.len() != proj.bias.len() * a.as_slice().len() {
        return Err(dim_mismatch("direct projection does not map to N_RIS x d_cat"));
    }
    let lifted = linear(a.as_slice(), proj.weight, proj.bias);
    let a0 = RealMatrix::from_vec(n_ris, d_cat, lifted)?;
    normed.add(&layer_norm(&a0)?)
}
