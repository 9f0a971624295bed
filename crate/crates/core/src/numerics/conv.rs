use crate::error::{dim_mismatch, invalid_config, Result};

/// Channel-major real tensor `channels x height x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(dim_mismatch(format!(
                "{} entries for a {channels}x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// Convolution kernel bank `out x in x k x k` plus one bias per output channel.
#[derive(Clone, Copy, Debug)]
pub struct ConvWeights<'a> {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub kernels: &'a [f64],
    pub bias: &'a [f64],
}

/// Zero-padded cross-correlation preserving the spatial dims.
pub fn conv2d_same(input: &Tensor3, w: &ConvWeights<'_>) -> Result<Tensor3> {
    let k = w.kernel;
    if k.is_multiple_of(2) {
        return Err(invalid_config(format!("kernel size must be odd, got {k}")));
    }
    if w.in_channels != input.channels {
        return Err(dim_mismatch(format!(
            "kernel expects {} input channels, tensor has {}",
            w.in_channels, input.channels
        )));
    }
    if w.kernels.len() != w.out_channels * w.in_channels * k * k || w.bias.len() != w.out_channels {
        return Err(dim_mismatch("kernel bank size does not match its declared shape"));
    }
    let (h, wd) = (input.height, input.width);
    let pad = (k / 2) as isize;
    let mut out = Tensor3::zeros(w.out_channels, h, wd);
    for oc in 0..w.out_channels {
        let plane = &mut out.data[oc * h * wd..(oc + 1) * h * wd];
        plane.iter_mut().for_each(|v| *v = w.bias[oc]);
        for ic in 0..w.in_channels {
            let in_plane = &input.data[ic * h * wd..(ic + 1) * h * wd];
            let kern = &w.kernels[(oc * w.in_channels + ic) * k * k..(oc * w.in_channels + ic + 1) * k * k];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let y_lo = (-dy).max(0) as usize;
                let y_hi = (h as isize - dy).min(h as isize).max(0) as usize;
                for kx in 0..k {
                    let kv = kern[ky * k + kx];
                    if kv == 0.0 {
                        continue;
                    }
                    let dx = kx as isize - pad;
                    let x_lo = (-dx).max(0) as usize;
                    let x_hi = (wd as isize - dx).min(wd as isize).max(0) as usize;
                    for y in y_lo..y_hi {
                        let src_row = ((y as isize + dy) as usize) * wd;
                        let dst_row = y * wd;
                        for x in x_lo..x_hi {
                            plane[dst_row + x] += kv * in_plane[src_row + (x as isize + dx) as usize];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SimRng;
    use rand::Rng;

    #[test]
    fn identity_kernel() {
        let mut rng = SimRng::seeded(5);
        let data: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = Tensor3::from_vec(1, 3, 4, data).unwrap();
        let w = ConvWeights {
            out_channels: 1,
            in_channels: 1,
            kernel: 1,
            kernels: &[1.0],
            bias: &[0.0],
        };
        assert_eq!(conv2d_same(&t, &w).unwrap(), t);
    }

    #[test]
    fn zero_kernels_give_bias() {
        let t = Tensor3::from_vec(1, 3, 3, vec![1.0; 9]).unwrap();
        let kernels = vec![0.0; 2 * 9];
        let w = ConvWeights {
            out_channels: 2,
            in_channels: 1,
            kernel: 3,
            kernels: &kernels,
            bias: &[0.5, -2.0],
        };
        let out = conv2d_same(&t, &w).unwrap();
        assert!(out.data[..9].iter().all(|&v| v == 0.5));
        assert!(out.data[9..].iter().all(|&v| v == -2.0));
    }

    #[test]
    fn even_kernel_rejected() {
        let t = Tensor3::zeros(1, 2, 2);
        let w = ConvWeights {
            out_channels: 1,
            in_channels: 1,
            kernel: 2,
            kernels: &[0.0; 4],
            bias: &[0.0],
        };
        assert!(matches!(conv2d_same(&t, &w), Err(crate::Error::InvalidConfig(_))));
    }

    #[test]
    fn matches_direct_loop() {
        let mut rng = SimRng::seeded(17);
        let input: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
        let kernels: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = Tensor3::from_vec(1, 6, 6, input.clone()).unwrap();
        let w = ConvWeights {
            out_channels: 2,
            in_channels: 1,
            kernel: 3,
            kernels: &kernels,
            bias: &bias,
        };
        let out = conv2d_same(&t, &w).unwrap();
        for oc in 0..2 {
            for y in 0..6i32 {
                for x in 0..6i32 {
                    let mut acc = bias[oc];
                    for ky in 0..3i32 {
                        for kx in 0..3i32 {
                            let (sy, sx) = (y + ky - 1, x + kx - 1);
                            if (0..6).contains(&sy) && (0..6).contains(&sx) {
                                acc += kernels[oc * 9 + (ky * 3 + kx) as usize]
                                    * input[(sy * 6 + sx) as usize];
                            }
                        }
                    }
                    assert!((out.get(oc, y as usize, x as usize) - acc).abs() < 1e-12);
                }
            }
        }
    }
}
