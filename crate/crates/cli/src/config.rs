//! TOML run configuration with every default resolved.

use std::path::Path;

use anyhow::{bail, Context};
use oamhop::sim::SweepAxis;
use oamhop::{
    Geometry, JamKnowledge, JamVariant, LosModel, Modulation, Scheme, SystemConfig, TrialPlan,
};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Scheme,
    /// Number of OAM modes / UCA elements.
    pub n: usize,
    /// Activated modes per hop.
    pub i: usize,
    /// Hops per symbol duration.
    pub u: usize,
    /// Constellation order.
    pub m: usize,
    pub modulation: Modulation,
    pub xi: f64,
    pub jnr_db: f64,
    /// A single value or an array.
    #[serde(deserialize_with = "one_or_many")]
    pub snr_db: Vec<f64>,
    pub sigma_eps_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlos_var: Option<f64>,
    pub los_model: LosModel,
    pub exclude_zero_second_mode: bool,
    pub variant: JamVariant,
    pub seed: u64,
    pub sim: SimSettings,
    pub geometry: Geometry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub target_errors: u64,
    pub max_trials: u64,
    pub jam_knowledge: JamKnowledge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub simulate: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { target_errors: 200, max_trials: 200_000, jam_knowledge: JamKnowledge::Genie }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImMh,
            n: 8,
            i: 2,
            u: 1,
            m: 2,
            modulation: Modulation::Psk,
            xi: 10.0,
            jnr_db: 2.0,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            sigma_eps_sq: 0.0,
            nlos_var: None,
            los_model: LosModel::Unit,
            exclude_zero_second_mode: true,
            variant: JamVariant::Normalized,
            seed: 1,
            sim: SimSettings::default(),
            geometry: Geometry::default(),
            sweep: None,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Grid {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match Grid::deserialize(d)? {
        Grid::One(x) => vec![x],
        Grid::Many(v) => v,
    })
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Schema checks beyond what the core validates per point.
    pub fn check(&self) -> anyhow::Result<()> {
        if self.snr_db.is_empty() {
            bail!("invalid `snr_db`: grid is empty");
        }
        if let Some(&x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            bail!("invalid `snr_db`: {x} is not finite");
        }
        if !self.jnr_db.is_finite() {
            bail!("invalid `jnr_db`: {} is not finite", self.jnr_db);
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                bail!("invalid `sweep.values`: no values");
            }
            let integral = matches!(sw.axis, SweepAxis::Hops | SweepAxis::Active | SweepAxis::Modes);
            if integral && sw.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                bail!("invalid `sweep.values`: axis `{}` takes positive integers", sw.axis.as_str());
            }
        }
        // Every grid point must resolve to a valid link.
        for &snr in &self.snr_db {
            self.system(snr)?;
        }
        Ok(())
    }

    /// Core configuration at one SNR, validated for the configured scheme.
    pub fn system(&self, snr_db: f64) -> anyhow::Result<SystemConfig> {
        let cfg = SystemConfig {
            n_modes: self.n,
            active: self.i,
            hops: self.u,
            order: self.m,
            modulation: self.modulation,
            xi: self.xi,
            est_err_var: self.sigma_eps_sq,
            nlos_var: self.nlos_var,
            geometry: self.geometry,
            los_model: self.los_model,
            exclude_zero_second_mode: self.exclude_zero_second_mode,
            ..SystemConfig::default()
        }
        .with_snr_db(snr_db, self.jnr_db);
        cfg.validate_for(self.scheme)?;
        Ok(cfg)
    }

    pub fn plan(&self, cfg: SystemConfig) -> anyhow::Result<TrialPlan> {
        let plan = TrialPlan {
            cfg,
            scheme: self.scheme,
            jam_knowledge: self.sim.jam_knowledge,
            target_errors: self.sim.target_errors,
            max_trials: self.sim.max_trials,
            base_seed: self.seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Copy with one sweep coordinate applied.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::SnrDb => c.snr_db = vec![value],
            SweepAxis::Hops => c.u = value as usize,
            SweepAxis::Xi => c.xi = value,
            SweepAxis::Active => c.i = value as usize,
            SweepAxis::Modes => c.n = value as usize,
            SweepAxis::SigmaEpsSq => c.sigma_eps_sq = value,
        }
        c
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the resolved configuration in TOML form.
    pub fn digest(&self) -> anyhow::Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }
}
