//! OAM wireless channel between two coaxial UCAs.
//!
//! Each mode l sees a scalar gain h_l = √(ξ/(1+ξ))·h_LoS + √(1/(1+ξ))·h_NLoS,
//! where h_LoS follows from the UCA geometry through a Bessel function of
//! order l and h_NLoS is circular complex Gaussian. Variances are total
//! complex variances (half per real dimension).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::hopping::HopPattern;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    /// Axial transceiver distance (m).
    pub d: f64,
    /// Transmit UCA radius (m).
    pub r1: f64,
    /// Receive UCA radius (m).
    pub r2: f64,
    /// Carrier wavelength (m).
    pub lambda: f64,
    /// Attenuation β.
    pub beta: f64,
}

impl Default for Geometry {
    /// 6 GHz carrier, d = 100λ, r1 = r2 = 10λ.
    fn default() -> Self {
        let lambda = 0.05;
        Self { d: 100.0 * lambda, r1: 10.0 * lambda, r2: 10.0 * lambda, lambda, beta: 1.0 }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("geometry.d", self.d),
            ("geometry.r1", self.r1),
            ("geometry.r2", self.r2),
            ("geometry.lambda", self.lambda),
            ("geometry.beta", self.beta),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig {
                    field,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    fn slant(&self) -> f64 {
        (self.d * self.d + self.r1 * self.r1 + self.r2 * self.r2).sqrt()
    }

    /// Argument of the Bessel function in the LoS gain.
    pub fn bessel_argument(&self) -> f64 {
        2.0 * PI * self.r1 * self.r2 / (self.lambda * self.slant())
    }
}

/// Bessel function of the first kind J_n(x) for integer order.
///
/// Miller's backward recurrence normalised with J0 + 2ΣJ_2k = 1. Relative
/// accuracy is ~1e-13 for |n| ≤ 64 and 0 ≤ x ≤ 100, except close to zeros of
/// J_n where the error is absolute at the same level. Negative x uses
/// J_n(−x) = (−1)^n J_n(x).
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let parity = |v: f64, k: usize| if k % 2 == 1 { -v } else { v };
    if x < 0.0 {
        return parity(bessel_j(order, -x), n);
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // start well above both the order and the argument
    let mut start = n.max(x.ceil() as usize) + 20 + (2.0 * x.sqrt()) as usize * 4;
    start += start % 2;
    let mut above = 0.0f64;
    let mut current = 1e-300f64;
    let mut target = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        // current now holds J_{k-1} up to scale
        if k - 1 == n {
            target = current;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            target *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += current;
    let value = target / norm;
    if order < 0 {
        parity(value, n)
    } else {
        value
    }
}

/// LoS gain of `mode` between two coaxial N-element UCAs.
pub fn los_gain(geom: &Geometry, n_modes: usize, mode: i32) -> Complex64 {
    let slant = geom.slant();
    let amplitude = geom.beta * geom.lambda * n_modes as f64 / (4.0 * PI * slant);
    amplitude * bessel_j(mode, geom.bessel_argument()) * los_phase(geom, mode)
}

/// Unit-magnitude LoS term j^{−l}·exp(−j2π·slant/λ).
pub fn los_phase(geom: &Geometry, mode: i32) -> Complex64 {
    let j_pow = -PI / 2.0 * mode as f64;
    let path = -2.0 * PI * geom.slant() / geom.lambda;
    Complex64::from_polar(1.0, j_pow + path)
}

/// (√(ξ/(1+ξ)), √(1/(1+ξ))), with ξ = ∞ giving (1, 0).
pub fn rician_weights(xi: f64) -> (f64, f64) {
    if xi.is_infinite() {
        (1.0, 0.0)
    } else {
        ((xi / (1.0 + xi)).sqrt(), (1.0 / (1.0 + xi)).sqrt())
    }
}

/// Circular complex Gaussian sample with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn sample_rician<R: Rng + ?Sized>(
    los: Complex64,
    xi: f64,
    nlos_var: f64,
    rng: &mut R,
) -> Complex64 {
    let (los_w, nlos_w) = rician_weights(xi);
    let nlos = complex_gaussian(rng, nlos_var);
    if nlos_w == 0.0 {
        return los;
    }
    los * los_w + nlos * nlos_w
}

/// One estimated gain: h̃ = h − ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedChannel {
    pub est_gain: Complex64,
    pub error: Complex64,
    pub error_variance: f64,
}

/// Requires σ²_ε < σ²_NLoS/(1+ξ) whenever σ²_ε > 0.
pub fn check_estimation_variance(err_var: f64, nlos_var: f64, xi: f64) -> Result<()> {
    if err_var < 0.0 {
        return Err(Error::EstimationVariance { err_var, limit: 0.0 });
    }
    let limit = if xi.is_infinite() { 0.0 } else { nlos_var / (1.0 + xi) };
    if err_var > 0.0 && err_var >= limit {
        return Err(Error::EstimationVariance { err_var, limit });
    }
    Ok(())
}

/// Subtracts an independent CN(0, err_var) estimation error from `h`.
pub fn apply_estimation_error<R: Rng + ?Sized>(
    h: Complex64,
    err_var: f64,
    nlos_var: f64,
    xi: f64,
    rng: &mut R,
) -> Result<EstimatedChannel> {
    check_estimation_variance(err_var, nlos_var, xi)?;
    let error = if err_var > 0.0 { complex_gaussian(rng, err_var) } else { Complex64::new(0.0, 0.0) };
    Ok(EstimatedChannel { est_gain: h - error, error, error_variance: err_var })
}

/// Per-hop, per-slot channel draw for one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `gains[u][i]`: true gain of slot i at hop u.
    pub gains: Vec<Vec<Complex64>>,
    pub los_part: Vec<Vec<Complex64>>,
    pub nlos_variance: Vec<Vec<f64>>,
    pub rician_factor: f64,
    /// Receiver-side estimates, equal to `gains` under perfect CSI.
    pub estimated: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    /// Draws gains for every active slot of `pattern`, plus estimates when
    /// the configuration has σ²_ε > 0.
    pub fn draw<R: Rng + ?Sized>(
        cfg: &SystemConfig,
        pattern: &HopPattern,
        rng: &mut R,
    ) -> Result<Self> {
        let hops = pattern.hops();
        let mut out = Self {
            gains: Vec::with_capacity(hops),
            los_part: Vec::with_capacity(hops),
            nlos_variance: Vec::with_capacity(hops),
            rician_factor: cfg.xi,
            estimated: Vec::with_capacity(hops),
        };
        for set in &pattern.per_hop_sets {
            let mut g = Vec::with_capacity(set.len());
            let mut los_v = Vec::with_capacity(set.len());
            let mut var_v = Vec::with_capacity(set.len());
            let mut est_v = Vec::with_capacity(set.len());
            for &l in set.iter() {
                let los = cfg.los_gain(l);
                let nlos_var = cfg.nlos_var_for(los.norm_sqr());
                let h = sample_rician(los, cfg.xi, nlos_var, rng);
                let est = if cfg.est_err_var > 0.0 {
                    apply_estimation_error(h, cfg.est_err_var, nlos_var, cfg.xi, rng)?.est_gain
                } else {
                    h
                };
                g.push(h);
                los_v.push(los);
                var_v.push(nlos_var);
                est_v.push(est);
            }
            out.gains.push(g);
            out.los_part.push(los_v);
            out.nlos_variance.push(var_v);
            out.estimated.push(est_v);
        }
        Ok(out)
    }
}
