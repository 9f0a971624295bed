use super::layout::Activation;
use crate::error::{dim_mismatch, Result};
use crate::numerics::{conv2d_same, ConvWeights, RealMatrix, Tensor3};

/// Three same-padded conv layers `1 -> c1 -> c2 -> 1` over the merged
/// features viewed as a one-channel `N_RIS x d_cat` image. The activation is
/// applied between layers; the last layer is linear.
pub fn cnn_forward(a_t: &RealMatrix, layers: &[ConvWeights<'_>; 3], activation: Activation) -> Result<RealMatrix> {
    if layers[0].in_channels != 1 || layers[2].out_channels != 1 {
        return Err(dim_mismatch("conv stack must map one channel to one channel"));
    }
    let (rows, cols) = a_t.shape();
    let mut x = Tensor3::from_vec(1, rows, cols, a_t.as_slice().to_vec())?;
    for (i, layer) in layers.iter().enumerate() {
        x = conv2d_same(&x, layer)?;
        if i < 2 {
            x.data.iter_mut().for_each(|v| *v = activation.apply(*v));
        }
    }
    RealMatrix::from_vec(rows, cols, x.data)
}
