use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{db_to_linear, ArrayGeometry, ScenarioConfig};
use crate::error::{invalid_config, invalid_input, Result};
use crate::numerics::ComplexMatrix;

/// One coherence-block realization of every link in a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Direct TX-RX channel, `N_TX x 1`.
    pub h: ComplexMatrix,
    /// TX-RIS channels, one `N_TX x N_RIS` matrix per RIS.
    pub h1: Vec<ComplexMatrix>,
    /// RIS-RX channels, one `N_RIS x 1` vector per RIS.
    pub h2: Vec<ComplexMatrix>,
}

/// Borrowed channels seen by a single RIS controller.
#[derive(Clone, Copy, Debug)]
pub struct RisView<'a> {
    pub h: &'a ComplexMatrix,
    pub h1: &'a ComplexMatrix,
    pub h2: &'a ComplexMatrix,
}

impl ChannelSet {
    pub fn ris_count(&self) -> usize {
        self.h1.len()
    }

    pub fn n_tx(&self) -> usize {
        self.h.rows()
    }

    pub fn n_ris(&self) -> usize {
        self.h2.first().map_or(0, ComplexMatrix::rows)
    }

    pub fn view(&self, k: usize) -> RisView<'_> {
        RisView {
            h: &self.h,
            h1: &self.h1[k],
            h2: &self.h2[k],
        }
    }

    /// Checks that the set has the dims a scenario declares.
    pub fn check_dims(&self, n_tx: usize, n_ris: usize, k: usize) -> Result<()> {
        let ok = self.h.rows() == n_tx
            && self.h.cols() == 1
            && self.h1.len() == k
            && self.h2.len() == k
            && self.h1.iter().all(|m| m.rows() == n_tx && m.cols() == n_ris)
            && self.h2.iter().all(|m| m.rows() == n_ris && m.cols() == 1);
        if ok {
            Ok(())
        } else {
            Err(crate::error::dim_mismatch(format!(
                "channel set does not match n_tx={n_tx}, n_ris={n_ris}, k={k}"
            )))
        }
    }

    /// Applies a common phase factor to every TX-side channel (`h` and
    /// each `H1`), as a shift of the transmitter's phase reference would.
    pub fn rotated(&self, factor: Complex64) -> Self {
        Self {
            h: self.h.scale(factor),
            h1: self.h1.iter().map(|m| m.scale(factor)).collect(),
            h2: self.h2.clone(),
        }
    }
}

fn element_position(geometry: ArrayGeometry, n: usize, idx: usize, spacing: f64) -> [f64; 3] {
    match geometry {
        ArrayGeometry::Linear => [idx as f64 * spacing, 0.0, 0.0],
        ArrayGeometry::Planar => {
            let side = (n as f64).sqrt().round() as usize;
            let (row, col) = (idx / side, idx % side);
            [col as f64 * spacing, 0.0, row as f64 * spacing]
        }
    }
}

/// Array response `exp(j 2pi/lambda <d, r_n>)` for every element position `r_n`.
///
/// Element 0 sits at the origin, so its entry is always `1`.
pub fn steering_vector(
    geometry: ArrayGeometry,
    n_elements: usize,
    direction: [f64; 3],
    wavelength: f64,
    spacing: f64,
) -> Result<ComplexMatrix> {
    if n_elements == 0 {
        return Err(invalid_input("steering vector needs at least one element"));
    }
    if !(spacing > 0.0) || !(wavelength > 0.0) {
        return Err(invalid_input("spacing and wavelength must be positive"));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid_input(format!("direction must be a unit vector, |d| = {norm}")));
    }
    if geometry == ArrayGeometry::Planar {
        let side = (n_elements as f64).sqrt().round() as usize;
        if side * side != n_elements {
            return Err(invalid_input(format!(
                "planar array needs a square element count, got {n_elements}"
            )));
        }
    }
    let k = 2.0 * PI / wavelength;
    let entries = (0..n_elements)
        .map(|i| {
            let r = element_position(geometry, n_elements, i, spacing);
            let phase = k * (direction[0] * r[0] + direction[1] * r[1] + direction[2] * r[2]);
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    ComplexMatrix::column(entries)
}

/// Standard complex Gaussian `CN(0, 1)` draw.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ricean draw `sqrt(P) (sqrt(k/(k+1)) LOS + sqrt(1/(k+1)) G)`.
///
/// `los` is normalized entry-wise to unit modulus; `kappa_db = -inf` gives
/// pure Rayleigh fading.
pub fn sample_ricean<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    kappa_db: f64,
    los: &ComplexMatrix,
    avg_power: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if los.rows() != rows || los.cols() != cols {
        return Err(crate::error::dim_mismatch(format!(
            "LOS component is {}x{}, expected {rows}x{cols}",
            los.rows(),
            los.cols()
        )));
    }
    if kappa_db.is_nan() || kappa_db == f64::INFINITY {
        return Err(invalid_input(format!("kappa must be finite, got {kappa_db}")));
    }
    if !(avg_power > 0.0) {
        return Err(invalid_input(format!("average power must be positive, got {avg_power}")));
    }
    let kappa = db_to_linear(kappa_db);
    let amp = avg_power.sqrt();
    let los_w = amp * (kappa / (kappa + 1.0)).sqrt();
    let nlos_w = amp * (1.0 / (kappa + 1.0)).sqrt();
    let data = los
        .as_slice()
        .iter()
        .map(|&l| {
            let unit = if l.norm() > 0.0 { l / l.norm() } else { Complex64::new(1.0, 0.0) };
            unit * los_w + complex_normal(rng) * nlos_w
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

fn unit_direction(from: [f64; 3], to: [f64; 3]) -> ([f64; 3], f64) {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    ([d[0] / dist, d[1] / dist, d[2] / dist], dist)
}

fn outer_conj(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), b.rows(), |r, c| a.get(r, 0) * b.get(c, 0).conj())
}

#[derive(Clone, Debug)]
struct RisLinks {
    h1_los: ComplexMatrix,
    h1_power: f64,
    h2_los: ComplexMatrix,
    h2_power: f64,
}

/// Deterministic part of a scenario: LOS components and link powers,
/// computed once from the configured geometry.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    cfg: ScenarioConfig,
    h_los: ComplexMatrix,
    h_power: f64,
    links: Vec<RisLinks>,
}

impl ChannelModel {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let lambda = cfg.carrier_wavelength;
        let spacing = lambda / 2.0;
        let gain = |dist: f64| {
            if cfg.pathloss {
                (lambda / (4.0 * PI * dist)).powi(2)
            } else {
                1.0
            }
        };
        let tx_array = |dir| steering_vector(ArrayGeometry::Linear, cfg.n_tx, dir, lambda, spacing);
        let ris_array = |dir| steering_vector(cfg.ris_array, cfg.n_ris, dir, lambda, spacing);

        let (d_tx_rx, dist) = unit_direction(cfg.tx_position, cfg.rx_position);
        let h_los = tx_array(d_tx_rx)?;
        let h_power = gain(dist) / db_to_linear(cfg.direct_attenuation_db);

        let mut links = Vec::with_capacity(cfg.ris_count);
        for &ris in &cfg.ris_positions {
            let (d_tx_ris, dist1) = unit_direction(cfg.tx_position, ris);
            let (d_ris_tx, _) = unit_direction(ris, cfg.tx_position);
            let (d_ris_rx, dist2) = unit_direction(ris, cfg.rx_position);
            let h1_los = outer_conj(&tx_array(d_tx_ris)?, &ris_array(d_ris_tx)?);
            links.push(RisLinks {
                h1_los,
                h1_power: gain(dist1),
                h2_los: ris_array(d_ris_rx)?,
                h2_power: gain(dist2),
            });
        }
        if links.iter().any(|l| !(l.h1_power > 0.0 && l.h2_power > 0.0)) || !(h_power > 0.0) {
            return Err(invalid_config("link power underflows; check positions and wavelength"));
        }
        Ok(Self {
            cfg: cfg.clone(),
            h_los,
            h_power,
            links,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Draws one i.i.d. coherence block. Draw order: direct link, then
    /// `H1` and `h2` for each RIS in turn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        let cfg = &self.cfg;
        let h = if cfg.direct_blocked {
            ComplexMatrix::zeros(cfg.n_tx, 1)
        } else {
            sample_ricean(cfg.n_tx, 1, cfg.kappa_h_db, &self.h_los, self.h_power, rng)
                .expect("validated direct link")
        };
        let mut h1 = Vec::with_capacity(self.links.len());
        let mut h2 = Vec::with_capacity(self.links.len());
        for link in &self.links {
            h1.push(match cfg.kappa_h1_db {
                None => link.h1_los.scale(Complex64::new(link.h1_power.sqrt(), 0.0)),
                Some(kappa) => {
                    sample_ricean(cfg.n_tx, cfg.n_ris, kappa, &link.h1_los, link.h1_power, rng)
                        .expect("validated TX-RIS link")
                }
            });
            h2.push(
                sample_ricean(cfg.n_ris, 1, cfg.kappa_h2_db, &link.h2_los, link.h2_power, rng)
                    .expect("validated RIS-RX link"),
            );
        }
        ChannelSet { h, h1, h2 }
    }
}

/// Draws one coherence block for `cfg`.
pub fn sample_channel_set<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    Ok(ChannelModel::new(cfg)?.sample(rng))
}

/// Replaces `h2` by `h2 + eps^2 g`, `g ~ CN(0, alpha ||h2|| I)`.
pub fn perturb_h2<R: Rng + ?Sized>(
    h2: &ComplexMatrix,
    epsilon: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if !(epsilon >= 0.0) || !(alpha >= 0.0) {
        return Err(invalid_input("epsilon and alpha must be non-negative"));
    }
    if epsilon == 0.0 {
        return Ok(h2.clone());
    }
    let sigma = (alpha * h2.norm_sqr().sqrt()).sqrt();
    let scale = epsilon * epsilon * sigma;
    let data = h2
        .as_slice()
        .iter()
        .map(|&z| z + complex_normal(rng) * scale)
        .collect();
    ComplexMatrix::from_vec(h2.rows(), h2.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SimRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_broadside_and_endfire() {
        let v = steering_vector(ArrayGeometry::Linear, 2, [0.0, 1.0, 0.0], 1.0, 0.5).unwrap();
        assert!((v.get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((v.get(1, 0) - c(1.0, 0.0)).norm() < 1e-12);
        let v = steering_vector(ArrayGeometry::Linear, 2, [1.0, 0.0, 0.0], 1.0, 0.5).unwrap();
        assert!((v.get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((v.get(1, 0) - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_planar_matches_phase_loop() {
        let mut rng = SimRng::seeded(21);
        let raw: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = [raw[0] / n, raw[1] / n, raw[2] / n];
        let (lambda, spacing) = (0.3, 0.15);
        let v = steering_vector(ArrayGeometry::Planar, 4, d, lambda, spacing).unwrap();
        let positions = [[0.0, 0.0, 0.0], [spacing, 0.0, 0.0], [0.0, 0.0, spacing], [spacing, 0.0, spacing]];
        for (i, r) in positions.iter().enumerate() {
            let phase = 2.0 * PI / lambda * (d[0] * r[0] + d[1] * r[1] + d[2] * r[2]);
            let expected = c(phase.cos(), phase.sin());
            assert!((v.get(i, 0) - expected).norm() < 1e-12);
            assert!((v.get(i, 0).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_rejects_non_unit_direction() {
        assert!(steering_vector(ArrayGeometry::Linear, 2, [1.0, 1.0, 0.0], 1.0, 0.5).is_err());
        assert!(steering_vector(ArrayGeometry::Planar, 3, [1.0, 0.0, 0.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn ricean_los_limit() {
        let mut rng = SimRng::seeded(1);
        let los = ComplexMatrix::column(vec![c(0.0, 2.0), c(3.0, 0.0)]).unwrap();
        let out = sample_ricean(2, 1, 300.0, &los, 4.0, &mut rng).unwrap();
        assert!((out.get(0, 0) - c(0.0, 2.0)).norm() < 1e-6);
        assert!((out.get(1, 0) - c(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn ricean_rayleigh_variance() {
        let mut rng = SimRng::seeded(2);
        let los = ComplexMatrix::column(vec![c(1.0, 0.0)]).unwrap();
        let n = 100_000;
        let p = 2.5;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_ricean(1, 1, f64::NEG_INFINITY, &los, p, &mut rng).unwrap().get(0, 0).norm_sqr();
        }
        let var = acc / n as f64;
        assert!((var - p).abs() < 0.03 * p, "var {var}");
    }

    #[test]
    fn ricean_power_split_at_10db() {
        let mut rng = SimRng::seeded(3);
        let los = ComplexMatrix::column(vec![c(0.6, 0.8)]).unwrap();
        let (n, p) = (100_000, 0.7);
        let kappa = 10.0;
        let mut total = 0.0;
        let mut mean = c(0.0, 0.0);
        for _ in 0..n {
            let z = sample_ricean(1, 1, 10.0, &los, p, &mut rng).unwrap().get(0, 0);
            total += z.norm_sqr();
            mean += z;
        }
        let power = total / n as f64;
        let mean = mean / n as f64;
        assert!((power - p).abs() < 0.03 * p);
        let los_fraction = mean.norm_sqr() / power;
        let expected = kappa / (kappa + 1.0);
        assert!((los_fraction - expected).abs() < 0.03 * expected);
    }

    #[test]
    fn blocked_direct_link_is_zero() {
        let cfg = ScenarioConfig::desk();
        let mut rng = SimRng::seeded(4);
        let cs = sample_channel_set(&cfg, &mut rng).unwrap();
        assert!(cs.h.is_zero());
        cs.check_dims(4, 16, 1).unwrap();
    }

    #[test]
    fn multi_ris_shapes() {
        let cfg = ScenarioConfig::desk_multi(2);
        let mut rng = SimRng::seeded(5);
        let cs = sample_channel_set(&cfg, &mut rng).unwrap();
        assert_eq!(cs.h1.len(), 2);
        assert_eq!(cs.h2.len(), 2);
        cs.check_dims(4, 16, 2).unwrap();
        assert!(!cs.h.is_zero());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let cfg = ScenarioConfig::desk();
        let a = sample_channel_set(&cfg, &mut SimRng::seeded(9)).unwrap();
        let b = sample_channel_set(&cfg, &mut SimRng::seeded(9)).unwrap();
        let d = sample_channel_set(&cfg, &mut SimRng::seeded(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn los_only_tx_ris_link_is_rank_one() {
        let mut cfg = ScenarioConfig::desk();
        cfg.kappa_h1_db = None;
        let model = ChannelModel::new(&cfg).unwrap();
        let cs = model.sample(&mut SimRng::seeded(6));
        let h1 = &cs.h1[0];
        // every 2x2 minor of a rank-one matrix vanishes
        let minor = h1.get(0, 0) * h1.get(1, 1) - h1.get(0, 1) * h1.get(1, 0);
        assert!(minor.norm() < 1e-12 * h1.get(0, 0).norm_sqr().max(1e-300));
        let cs2 = model.sample(&mut SimRng::seeded(7));
        assert_eq!(cs.h1, cs2.h1);
    }

    #[test]
    fn perturbation_zero_epsilon_is_identity() {
        let h2 = ComplexMatrix::column(vec![c(1.0, -2.0), c(0.5, 0.25)]).unwrap();
        let out = perturb_h2(&h2, 0.0, 1.0 / 3.0, &mut SimRng::seeded(1)).unwrap();
        assert_eq!(out, h2);
    }

    #[test]
    fn perturbation_variance() {
        let h2 = ComplexMatrix::column(vec![c(3.0, 4.0), c(0.0, 0.0)]).unwrap();
        let (eps, alpha) = (0.1, 1.0 / 3.0);
        let mut rng = SimRng::seeded(8);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let out = perturb_h2(&h2, eps, alpha, &mut rng).unwrap();
            acc += (out.get(1, 0) - h2.get(1, 0)).norm_sqr();
        }
        let var = acc / n as f64;
        let expected = eps.powi(4) * alpha * 5.0;
        assert!((var - expected).abs() < 0.03 * expected, "{var} vs {expected}");
    }
}
