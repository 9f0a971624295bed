use crate::error::{dim_mismatch, invalid_input, Result};

/// Epsilon added to the variance in [`layer_norm`].
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Dense real matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(dim_mismatch("ragged rows"));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(dim_mismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Concatenates along the column dimension (same row count).
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(dim_mismatch(format!(
                "cannot column-concat {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }
}

pub fn matmul(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.cols != b.rows {
        return Err(dim_mismatch(format!(
            "cannot multiply {:?} by {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = RealMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `a * b^T` without materializing the transpose.
pub fn matmul_transposed(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.cols != b.cols {
        return Err(dim_mismatch(format!(
            "cannot multiply {:?} by transpose of {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(RealMatrix::from_fn(a.rows, b.rows, |i, j| {
        a.row(i).iter().zip(b.row(j)).map(|(x, y)| x * y).sum()
    }))
}

/// Softmax over every entry of the matrix at once (not row-wise).
pub fn softmax_global(m: &RealMatrix) -> Result<RealMatrix> {
    let probs = softmax(m.as_slice())?;
    RealMatrix::from_vec(m.rows, m.cols, probs)
}

/// Softmax of a slice with max subtraction.
pub fn softmax(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(invalid_input("softmax of an empty input"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input("softmax input has non-finite entries"));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Per-row normalization to zero mean and unit variance, no affine terms.
pub fn layer_norm(m: &RealMatrix) -> Result<RealMatrix> {
    if m.cols < 2 {
        return Err(invalid_input(format!(
            "layer_norm needs at least 2 entries per row, got {}",
            m.cols
        )));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input("layer_norm input has non-finite entries"));
    }
    let n = m.cols as f64;
    let mut out = m.clone();
    for r in 0..m.rows {
        let row = &mut out.data[r * m.cols..(r + 1) * m.cols];
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
    Ok(out)
}

/// Fully connected layer `W x + b` with `W` stored row-major as `out x in`.
pub fn linear(input: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let out = bias.len();
    debug_assert_eq!(weights.len(), out * input.len());
    let n_in = input.len();
    (0..out)
        .map(|o| {
            let w = &weights[o * n_in..(o + 1) * n_in];
            bias[o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SimRng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn softmax_uniform_on_zeros() {
        let out = softmax_global(&RealMatrix::zeros(2, 2)).unwrap();
        for v in out.as_slice() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_ln2_case() {
        let m = RealMatrix::from_rows(&[vec![2f64.ln(), 0.0], vec![0.0, 0.0]]).unwrap();
        let out = softmax_global(&m).unwrap();
        let expected = [0.4, 0.2, 0.2, 0.2];
        for (g, e) in out.as_slice().iter().zip(expected) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_matches_direct_formula() {
        let mut rng = SimRng::seeded(3);
        let m = RealMatrix::from_fn(5, 5, |_, _| rng.random_range(-4.0..4.0));
        let out = softmax_global(&m).unwrap();
        let total: f64 = m.as_slice().iter().map(|v| v.exp()).sum();
        for (g, v) in out.as_slice().iter().zip(m.as_slice()) {
            assert!((g - v.exp() / total).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rejects_non_finite() {
        let m = RealMatrix::from_vec(1, 2, vec![f64::NAN, 0.0]).unwrap();
        assert!(softmax_global(&m).is_err());
        let m = RealMatrix::from_vec(1, 2, vec![f64::INFINITY, 0.0]).unwrap();
        assert!(softmax_global(&m).is_err());
    }

    #[test]
    fn softmax_survives_large_logits() {
        let m = RealMatrix::from_vec(1, 3, vec![1000.0, 999.0, -1000.0]).unwrap();
        let out = softmax_global(&m).unwrap();
        assert!((out.sum() - 1.0).abs() < 1e-12);
        assert!(out.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn layer_norm_examples() {
        let out = layer_norm(&RealMatrix::from_vec(1, 2, vec![1.0, -1.0]).unwrap()).unwrap();
        assert!((out.get(0, 0) - 1.0).abs() < 1e-5);
        assert!((out.get(0, 1) + 1.0).abs() < 1e-5);
        let out = layer_norm(&RealMatrix::from_vec(1, 3, vec![5.0; 3]).unwrap()).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
        assert!(layer_norm(&RealMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn layer_norm_moments() {
        let mut rng = SimRng::seeded(11);
        let m = RealMatrix::from_fn(1, 64, |_, _| rng.random_range(-10.0..30.0));
        let out = layer_norm(&m).unwrap();
        let mean = out.sum() / 64.0;
        let var = out.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_layer() {
        let out = linear(&[1.0, 2.0], &[1.0, 0.0, 0.5, 0.5], &[0.0, 1.0]);
        assert_eq!(out, vec![1.0, 2.5]);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(v in proptest::collection::vec(-15.0f64..15.0, 1..40)) {
            let n = v.len();
            let out = softmax_global(&RealMatrix::from_vec(1, n, v).unwrap()).unwrap();
            prop_assert!((out.sum() - 1.0).abs() < 1e-9);
            prop_assert!(out.as_slice().iter().all(|&p| p > 0.0 && p < 1.0 || n == 1));
        }

        #[test]
        fn layer_norm_shift_scale_invariant(
            v in proptest::collection::vec(-50.0f64..50.0, 4..16),
            shift in -100.0f64..100.0,
            scale in 1.0f64..20.0,
        ) {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            // epsilon effects scale like eps / var
            prop_assume!(var > 50.0);
            let base = layer_norm(&RealMatrix::from_vec(1, n, v.clone()).unwrap()).unwrap();
            let moved: Vec<f64> = v.iter().map(|x| x * scale + shift).collect();
            let other = layer_norm(&RealMatrix::from_vec(1, n, moved).unwrap()).unwrap();
            for (a, b) in base.as_slice().iter().zip(other.as_slice()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
