use super::sampling::{ChannelSet, RisView};
use crate::numerics::{ComplexMatrix, RealMatrix};

/// Real-valued network inputs for one RIS: real parts stacked above
/// imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedChannels {
    /// `2 N_TX` entries.
    pub h: Vec<f64>,
    /// `2 N_TX x N_RIS`.
    pub h1: RealMatrix,
    /// `2 N_RIS` entries.
    pub h2: Vec<f64>,
}

fn stack_vector(v: &ComplexMatrix) -> Vec<f64> {
    let s = v.as_slice();
    s.iter().map(|z| z.re).chain(s.iter().map(|z| z.im)).collect()
}

fn stack_matrix(m: &ComplexMatrix) -> RealMatrix {
    let rows = m.rows();
    RealMatrix::from_fn(2 * rows, m.cols(), |r, c| {
        if r < rows {
            m.get(r, c).re
        } else {
            m.get(r - rows, c).im
        }
    })
}

pub fn stack_view(view: RisView<'_>) -> StackedChannels {
    StackedChannels {
        h: stack_vector(view.h),
        h1: stack_matrix(view.h1),
        h2: stack_vector(view.h2),
    }
}

/// Stacked inputs for every RIS of the set.
pub fn stack_real_imag(cs: &ChannelSet) -> Vec<StackedChannels> {
    (0..cs.ris_count()).map(|k| stack_view(cs.view(k))).collect()
}
