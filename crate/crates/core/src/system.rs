//! End-to-end SNR and rate evaluation over the discrete action spaces:
//! RIS phase configurations and the DFT precoder codebook.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, ScenarioConfig};
use crate::error::{dim_mismatch, invalid_input, Result};
use crate::numerics::ComplexMatrix;

/// Admissible per-element phase states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseAlphabet {
    /// 1-bit elements with symbols `-1` (phase 0) and `+1` (phase pi).
    Binary,
    /// `S` uniformly spaced states indexed `0..S`, state `s` at phase `2 pi s / S`.
    MultiState(usize),
}

impl PhaseAlphabet {
    pub fn state_count(self) -> usize {
        match self {
            Self::Binary => 2,
            Self::MultiState(s) => s,
        }
    }

    pub fn contains(self, symbol: i32) -> bool {
        match self {
            Self::Binary => symbol == -1 || symbol == 1,
            Self::MultiState(s) => symbol >= 0 && (symbol as usize) < s,
        }
    }
}

/// Reflection coefficient of a single element.
pub fn phase_to_coefficient(symbol: i32, alphabet: PhaseAlphabet) -> Result<Complex64> {
    if !alphabet.contains(symbol) {
        return Err(invalid_input(format!("phase symbol {symbol} not in {alphabet:?}")));
    }
    Ok(match alphabet {
        PhaseAlphabet::Binary => {
            if symbol == -1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }
        PhaseAlphabet::MultiState(s) => {
            let quarter = 4 * symbol as usize;
            // exact values on the axes
            if quarter.is_multiple_of(s) {
                match (quarter / s) % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                }
            } else {
                Complex64::from_polar(1.0, 2.0 * PI * symbol as f64 / s as f64)
            }
        }
    })
}

/// Phase configuration of one RIS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    alphabet: PhaseAlphabet,
    values: Vec<i32>,
}

impl PhaseConfig {
    pub fn new(alphabet: PhaseAlphabet, values: Vec<i32>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| !alphabet.contains(v)) {
            return Err(invalid_input(format!("phase symbol {bad} not in {alphabet:?}")));
        }
        Ok(Self { alphabet, values })
    }

    pub fn binary(values: Vec<i32>) -> Result<Self> {
        Self::new(PhaseAlphabet::Binary, values)
    }

    /// All elements at `+1`.
    pub fn all_plus(n: usize) -> Self {
        Self {
            alphabet: PhaseAlphabet::Binary,
            values: vec![1; n],
        }
    }

    pub fn alphabet(&self) -> PhaseAlphabet {
        self.alphabet
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&v| phase_to_coefficient(v, self.alphabet).expect("validated on construction"))
            .collect()
    }
}

/// Finite set of unit-norm precoding vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    vectors: Vec<ComplexMatrix>,
}

impl Codebook {
    /// Codebook from explicit column vectors of a common length.
    pub fn from_vectors(vectors: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(invalid_input("codebook needs at least one vector"));
        };
        let n = first.rows();
        if vectors.iter().any(|v| v.rows() != n || v.cols() != 1) {
            return Err(dim_mismatch("codebook vectors must be columns of equal length"));
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, index: usize) -> &ComplexMatrix {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[ComplexMatrix] {
        &self.vectors
    }
}

/// Columns of the unitary `n x n` DFT matrix: entry `(n, m) = exp(-j 2pi n m / N) / sqrt(N)`.
pub fn dft_codebook(n_tx: usize) -> Codebook {
    assert!(n_tx >= 1, "codebook needs at least one antenna");
    let scale = 1.0 / (n_tx as f64).sqrt();
    let vectors = (0..n_tx)
        .map(|m| {
            let entries = (0..n_tx)
                .map(|n| {
                    // reduce the exponent first so the axes come out exact
                    let k = (n * m) % n_tx;
                    let c = match ((4 * k).is_multiple_of(n_tx), 4 * k / n_tx) {
                        (true, 0) => Complex64::new(1.0, 0.0),
                        (true, 1) => Complex64::new(0.0, -1.0),
                        (true, 2) => Complex64::new(-1.0, 0.0),
                        (true, 3) => Complex64::new(0.0, 1.0),
                        _ => Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n_tx as f64),
                    };
                    c * scale
                })
                .collect();
            ComplexMatrix::column(entries).expect("non-empty column")
        })
        .collect();
    Codebook { vectors }
}

/// Transmit power and noise power in watts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    pub noise_power: f64,
}

impl LinkBudget {
    pub fn new(tx_power: f64, noise_power: f64) -> Result<Self> {
        if !(tx_power > 0.0) || !(noise_power > 0.0) {
            return Err(invalid_input("transmit and noise power must be positive"));
        }
        Ok(Self {
            tx_power,
            noise_power,
        })
    }

    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            tx_power: cfg.tx_power_watts(),
            noise_power: cfg.noise_watts(),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.tx_power / self.noise_power
    }
}

/// RIS-parameterized channel `m = h^H + sum_k h2_k^H Phi_k H1_k^H` as a `1 x N_TX` row.
pub fn effective_channel(cs: &ChannelSet, phases: &[PhaseConfig]) -> Result<ComplexMatrix> {
    let n_tx = cs.n_tx();
    if phases.len() != cs.ris_count() {
        return Err(dim_mismatch(format!(
            "{} phase configurations for {} RISs",
            phases.len(),
            cs.ris_count()
        )));
    }
    let mut m: Vec<Complex64> = cs.h.as_slice().iter().map(|z| z.conj()).collect();
    for (k, phase) in phases.iter().enumerate() {
        let (h1, h2) = (&cs.h1[k], &cs.h2[k]);
        if phase.len() != h2.rows() || h1.cols() != h2.rows() || h1.rows() != n_tx {
            return Err(dim_mismatch(format!(
                "RIS {k}: {} phases, H1 {}x{}, h2 {}x1",
                phase.len(),
                h1.rows(),
                h1.cols(),
                h2.rows()
            )));
        }
        let weights: Vec<Complex64> = phase
            .coefficients()
            .iter()
            .zip(h2.as_slice())
            .map(|(c, g)| g.conj() * c)
            .collect();
        for (t, mt) in m.iter_mut().enumerate() {
            let row = &h1.as_slice()[t * h1.cols()..(t + 1) * h1.cols()];
            *mt += weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x.conj())
                .sum::<Complex64>();
        }
    }
    ComplexMatrix::from_vec(1, n_tx, m)
}

/// Received SNR `(P / sigma^2) |m v|^2`.
pub fn snr(cs: &ChannelSet, phases: &[PhaseConfig], v: &ComplexMatrix, budget: LinkBudget) -> Result<f64> {
    let m = effective_channel(cs, phases)?;
    if v.rows() != m.cols() || v.cols() != 1 {
        return Err(dim_mismatch(format!(
            "precoder is {}x{}, expected {}x1",
            v.rows(),
            v.cols(),
            m.cols()
        )));
    }
    let gain: Complex64 = m.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
    Ok(budget.ratio() * gain.norm_sqr())
}

/// Spectral efficiency `log2(1 + gamma)`.
pub fn rate(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(invalid_input(format!("SNR must be non-negative, got {gamma}")));
    }
    Ok((1.0 + gamma).log2())
}

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
