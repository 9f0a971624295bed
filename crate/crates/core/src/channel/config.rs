use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Result};

/// Element arrangement of an antenna array or RIS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayGeometry {
    /// Elements along the x axis.
    Linear,
    /// Square grid in the x-z plane, row-major over (z, x).
    Planar,
}

/// Geometry, array sizes and link-budget parameters of a simulated scenario.
///
/// Positions are in meters, powers in dBm, Ricean factors in dB. Angles are
/// never configured directly; they follow from the positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_ris: usize,
    #[serde(default = "default_ris_count")]
    pub ris_count: usize,
    #[serde(default = "default_ris_array")]
    pub ris_array: ArrayGeometry,
    pub tx_position: [f64; 3],
    pub rx_position: [f64; 3],
    pub ris_positions: Vec<[f64; 3]>,
    /// Ricean factor of every RIS-RX link.
    pub kappa_h2_db: f64,
    /// Ricean factor of the TX-RIS links; `None` means pure line of sight.
    #[serde(default)]
    pub kappa_h1_db: Option<f64>,
    /// Ricean factor of the direct TX-RX link.
    #[serde(default = "default_kappa_h")]
    pub kappa_h_db: f64,
    #[serde(default)]
    pub direct_blocked: bool,
    /// Extra attenuation applied on top of the free-space loss of the direct link.
    #[serde(default)]
    pub direct_attenuation_db: f64,
    #[serde(default = "default_wavelength")]
    pub carrier_wavelength: f64,
    /// Apply free-space pathloss per link segment.
    #[serde(default = "default_true")]
    pub pathloss: bool,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Horizon `T` (coherence blocks per episode).
    pub horizon: usize,
    /// Evaluation episodes `T_E`.
    #[serde(default = "default_episodes")]
    pub episodes: usize,
}

fn default_ris_count() -> usize {
    1
}
fn default_ris_array() -> ArrayGeometry {
    ArrayGeometry::Planar
}
fn default_kappa_h() -> f64 {
    10.0
}
fn default_wavelength() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_episodes() -> usize {
    20
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ScenarioConfig {
    /// Single-RIS stochastic setup: TX (0,0,2), RIS (0,3,2), RX (8,10,1.5),
    /// 16 TX antennas, 400 RIS elements, direct link blocked.
    pub fn single_ris_reference() -> Self {
        Self {
            n_tx: 16,
            n_ris: 400,
            ris_count: 1,
            ris_array: ArrayGeometry::Planar,
            tx_position: [0.0, 0.0, 2.0],
            rx_position: [8.0, 10.0, 1.5],
            ris_positions: vec![[0.0, 3.0, 2.0]],
            kappa_h2_db: 10.0,
            kappa_h1_db: Some(10.0),
            kappa_h_db: 10.0,
            direct_blocked: true,
            direct_attenuation_db: 0.0,
            carrier_wavelength: default_wavelength(),
            pathloss: true,
            tx_power_dbm: 30.0,
            noise_dbm: -50.0,
            horizon: 50,
            episodes: 20,
        }
    }

    /// Multi-RIS setup with `k` in {2, 4}: RISs at (3,3,2), (6,6,-2) and,
    /// for four surfaces, (3,3,-2), (6,6,2); RX at (10,10,5); LOS TX-RIS
    /// links; direct link Ricean with 10 dB extra attenuation.
    pub fn multi_ris_reference(k: usize) -> Self {
        let mut ris_positions = vec![[3.0, 3.0, 2.0], [6.0, 6.0, -2.0]];
        if k >= 4 {
            ris_positions.push([3.0, 3.0, -2.0]);
            ris_positions.push([6.0, 6.0, 2.0]);
        }
        ris_positions.truncate(k.max(1));
        Self {
            n_tx: 16,
            n_ris: 400,
            ris_count: ris_positions.len(),
            ris_array: ArrayGeometry::Planar,
            tx_position: [0.0, 0.0, 2.0],
            rx_position: [10.0, 10.0, 5.0],
            ris_positions,
            kappa_h2_db: 10.0,
            kappa_h1_db: None,
            kappa_h_db: 10.0,
            direct_blocked: false,
            direct_attenuation_db: 10.0,
            carrier_wavelength: default_wavelength(),
            pathloss: true,
            tx_power_dbm: 30.0,
            noise_dbm: -50.0,
            horizon: 50,
            episodes: 20,
        }
    }

    /// Desk-scale single-RIS setup: 4 TX antennas, 16 RIS elements.
    pub fn desk() -> Self {
        Self {
            n_tx: 4,
            n_ris: 16,
            ..Self::single_ris_reference()
        }
    }

    /// Desk-scale multi-RIS setup: 4 TX antennas, 16 elements per RIS.
    pub fn desk_multi(k: usize) -> Self {
        Self {
            n_tx: 4,
            n_ris: 16,
            ..Self::multi_ris_reference(k)
        }
    }

    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(invalid_config("scenario.n_tx must be at least 1"));
        }
        if self.n_ris == 0 {
            return Err(invalid_config("scenario.n_ris must be at least 1"));
        }
        if self.ris_array == ArrayGeometry::Planar {
            let side = (self.n_ris as f64).sqrt().round() as usize;
            if side * side != self.n_ris {
                return Err(invalid_config(format!(
                    "scenario.n_ris must be a perfect square for a planar RIS, got {}",
                    self.n_ris
                )));
            }
        }
        if self.ris_count == 0 {
            return Err(invalid_config("scenario.ris_count must be at least 1"));
        }
        if self.ris_positions.len() != self.ris_count {
            return Err(invalid_config(format!(
                "scenario.ris_positions has {} entries but ris_count is {}",
                self.ris_positions.len(),
                self.ris_count
            )));
        }
        if self.horizon == 0 {
            return Err(invalid_config("scenario.horizon must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(invalid_config("scenario.episodes must be at least 1"));
        }
        if !(self.carrier_wavelength > 0.0) {
            return Err(invalid_config("scenario.carrier_wavelength must be positive"));
        }
        let finite = [
            ("scenario.kappa_h2_db", self.kappa_h2_db),
            ("scenario.kappa_h_db", self.kappa_h_db),
            ("scenario.direct_attenuation_db", self.direct_attenuation_db),
            ("scenario.tx_power_dbm", self.tx_power_dbm),
            ("scenario.noise_dbm", self.noise_dbm),
        ];
        for (name, v) in finite {
            if v.is_nan() || v == f64::INFINITY {
                return Err(invalid_config(format!("{name} must be finite, got {v}")));
            }
        }
        let mut points = vec![("tx_position", self.tx_position), ("rx_position", self.rx_position)];
        points.extend(self.ris_positions.iter().map(|p| ("ris_positions", *p)));
        for (i, (na, a)) in points.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(invalid_config(format!("scenario.{na} must be finite")));
            }
            for (nb, b) in &points[i + 1..] {
                if a == b {
                    return Err(invalid_config(format!(
                        "scenario.{na} and scenario.{nb} coincide at {a:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}
