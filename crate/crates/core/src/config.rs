//! Scalar link parameters shared by every stage of the chain.

use serde::{Deserialize, Serialize};

use crate::channel::{self, Geometry};
use crate::error::{Error, Result};
use crate::hopping;

/// Which transmission scheme is run or evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// I of N modes active per hop, the chosen combination carries index bits.
    ImMh,
    /// IM-MH followed by a keyed second-hop mode.
    ImDsmh,
    /// Conventional mode hopping: same hop/jam statistics as IM-MH but only
    /// the signal bits count as transmitted information.
    MhBaseline,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ImMh => "im-mh",
            Scheme::ImDsmh => "im-dsmh",
            Scheme::MhBaseline => "mh-baseline",
        }
    }

    pub fn hop_scheme(self) -> hopping::HopScheme {
        match self {
            Scheme::ImDsmh => hopping::HopScheme::ImDsmh,
            Scheme::ImMh | Scheme::MhBaseline => hopping::HopScheme::ImMh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Csi {
    Perfect,
    Imperfect,
}

impl Csi {
    pub fn as_str(self) -> &'static str {
        match self {
            Csi::Perfect => "perfect",
            Csi::Imperfect => "imperfect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    /// Gray-mapped M-PSK (BPSK for M = 2).
    Psk,
    /// Gray-mapped square M-QAM.
    Qam,
}

/// How the per-mode line-of-sight gain is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LosModel {
    /// Unit magnitude for every mode, phase taken from the UCA propagation
    /// term. Every mode then carries the same average power.
    Unit,
    /// Full UCA expression including the Bessel amplitude and path loss.
    Geometric,
}

/// How the detector learns which slots are jammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JamKnowledge {
    /// Receiver knows the jammed slots and weights them by 1/(σ² + σ²_J).
    Genie,
    /// Every slot is weighted by 1/σ².
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of UCA elements, equal to the number of usable OAM modes (N).
    pub n_modes: usize,
    /// Modes activated per hop (I).
    pub active: usize,
    /// Hops per symbol duration (U).
    pub hops: usize,
    /// Constellation size (M).
    pub order: usize,
    pub modulation: Modulation,
    /// Rician factor ξ. `f64::INFINITY` gives a pure line-of-sight channel.
    pub xi: f64,
    /// Post-de-hop noise variance σ².
    pub noise_var: f64,
    /// Post-de-hop jamming variance σ²_J on a jammed slot.
    pub jam_var: f64,
    /// Channel estimation error variance σ²_ε (0 = perfect CSI).
    pub est_err_var: f64,
    /// Absolute NLoS variance per mode. `None` uses |h_LoS|² of that mode.
    pub nlos_var: Option<f64>,
    pub geometry: Geometry,
    pub los_model: LosModel,
    /// Keep OAM mode zero out of the second-hop selector (IM-DSMH).
    pub exclude_zero_second_mode: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let noise_var = 0.1;
        Self {
            n_modes: 8,
            active: 2,
            hops: 1,
            order: 2,
            modulation: Modulation::Psk,
            xi: 10.0,
            noise_var,
            jam_var: noise_var * db_to_linear(2.0),
            est_err_var: 0.0,
            nlos_var: None,
            geometry: Geometry::default(),
            los_model: LosModel::Unit,
            exclude_zero_second_mode: true,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    pub fn new(n_modes: usize, active: usize, hops: usize) -> Self {
        Self { n_modes, active, hops, ..Self::default() }
    }

    pub fn csi(&self) -> Csi {
        if self.est_err_var > 0.0 {
            Csi::Imperfect
        } else {
            Csi::Perfect
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    /// Line-of-sight gain for `mode` under the configured LoS model.
    pub fn los_gain(&self, mode: i32) -> num_complex::Complex64 {
        match self.los_model {
            LosModel::Geometric => channel::los_gain(&self.geometry, self.n_modes, mode),
            LosModel::Unit => channel::los_phase(&self.geometry, mode),
        }
    }

    /// NLoS variance used for a mode whose LoS gain has power `los_sq`.
    pub fn nlos_var_for(&self, los_sq: f64) -> f64 {
        self.nlos_var.unwrap_or(los_sq)
    }

    /// E[|h|²] averaged over the mode universe; the SNR reference power.
    pub fn mean_channel_power(&self) -> f64 {
        let universe = match hopping::mode_universe(self.n_modes) {
            Ok(u) => u,
            Err(_) => return 1.0,
        };
        let (los_w, nlos_w) = channel::rician_weights(self.xi);
        let total: f64 = universe
            .iter()
            .map(|&l| {
                let los_sq = self.los_gain(l).norm_sqr();
                los_w * los_w * los_sq + nlos_w * nlos_w * self.nlos_var_for(los_sq)
            })
            .sum();
        total / universe.len() as f64
    }

    /// Sets σ² from SNR = E[|h|²]/σ² (unit symbol energy) and σ²_J = JNR·σ².
    pub fn set_snr_db(&mut self, snr_db: f64, jnr_db: f64) {
        self.noise_var = self.mean_channel_power() / db_to_linear(snr_db);
        self.jam_var = self.noise_var * db_to_linear(jnr_db);
    }

    pub fn with_snr_db(mut self, snr_db: f64, jnr_db: f64) -> Self {
        self.set_snr_db(snr_db, jnr_db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidConfig { field, reason });
        if self.n_modes < 2 || !self.n_modes.is_multiple_of(2) {
            return bad("n", format!("number of modes must be even and >= 2, got {}", self.n_modes));
        }
        if self.n_modes > 128 {
            return bad("n", format!("at most 128 modes are supported, got {}", self.n_modes));
        }
        if self.active == 0 || self.active > self.n_modes {
            return bad(
                "i",
                format!("activated modes must lie in 1..={}, got {}", self.n_modes, self.active),
            );
        }
        if self.hops == 0 {
            return bad("u", "at least one hop is required".into());
        }
        crate::phy::Constellation::new(self.modulation, self.order)?;
        if !(self.xi >= 0.0) {
            return bad("xi", format!("Rician factor must be >= 0, got {}", self.xi));
        }
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return bad("noise_var", format!("must be positive and finite, got {}", self.noise_var));
        }
        if !(self.jam_var >= 0.0) || !self.jam_var.is_finite() {
            return bad("jam_var", format!("must be >= 0, got {}", self.jam_var));
        }
        if !(self.est_err_var >= 0.0) {
            return bad("sigma_eps_sq", format!("must be >= 0, got {}", self.est_err_var));
        }
        if let Some(v) = self.nlos_var {
            if !(v > 0.0) {
                return bad("nlos_var", format!("must be positive, got {v}"));
            }
        }
        self.geometry.validate()?;
        if self.est_err_var > 0.0 {
            let universe = hopping::mode_universe(self.n_modes)?;
            for &l in universe.iter() {
                let nlos = self.nlos_var_for(self.los_gain(l).norm_sqr());
                channel::check_estimation_variance(self.est_err_var, nlos, self.xi).map_err(
                    |e| Error::InvalidConfig { field: "sigma_eps_sq", reason: e.to_string() },
                )?;
            }
        }
        Ok(())
    }

    /// Validation plus the IM-DSMH specific constraint I ≤ N − 1.
    pub fn validate_for(&self, scheme: Scheme) -> Result<()> {
        self.validate()?;
        if scheme == Scheme::ImDsmh && self.active + 1 > self.n_modes {
            return Err(Error::InvalidConfig {
                field: "i",
                reason: format!(
                    "IM-DSMH needs at most N - 1 = {} activated modes, got {}",
                    self.n_modes - 1,
                    self.active
                ),
            });
        }
        Ok(())
    }
}
