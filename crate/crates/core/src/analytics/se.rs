use serde::{Deserialize, Serialize};

use crate::config::{Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::hopping::{binomial, bit_budget, log2_exact, HopScheme};

use super::jam::{clean_hop_prob, jam_prob_hops, jam_prob_modes, JamVariant};

/// Spectrum-efficiency bound in bits/s/Hz per symbol duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeResult {
    pub value: f64,
    pub signal_part: f64,
    pub index_part: f64,
}

impl SeResult {
    fn new(signal_part: f64, index_part: f64) -> Self {
        Self { value: signal_part + index_part, signal_part, index_part }
    }
}

/// Upper limit on enumerated jam configurations, 2^{I·U}.
const MAX_JAM_CONFIGS: u128 = 1 << 22;

/// |h|² for every (hop, slot) set to the average channel power.
pub fn mean_gains_sq(cfg: &SystemConfig) -> Vec<Vec<f64>> {
    vec![vec![cfg.mean_channel_power(); cfg.active]; cfg.hops]
}

fn check_shape(cfg: &SystemConfig, gains_sq: &[Vec<f64>]) -> Result<()> {
    if gains_sq.len() != cfg.hops || gains_sq.iter().any(|r| r.len() != cfg.active) {
        return Err(Error::Dimension(format!(
            "expected {} hops of {} slot powers",
            cfg.hops, cfg.active
        )));
    }
    if gains_sq.iter().flatten().any(|&g| !(g >= 0.0)) {
        return Err(Error::Dimension("slot powers must be non-negative".into()));
    }
    Ok(())
}

fn signal_term(acc: &[f64]) -> f64 {
    acc.iter().map(|g| (1.0 + g).log2()).sum()
}

/// IM-MH bound: jam-averaged Σ_i log2(1 + Σ_u γ_{i,u}) plus U·log2 K1,
/// with γ = |h|²/(σ² + σ²_J) on jammed slots and |h|²/σ² otherwise.
///
/// Jammed hops are equally likely to be any U′ of the U hops, and a jammed
/// hop's subset of hit slots follows the overlap law conditioned on at
/// least one hit.
pub fn se_immh(cfg: &SystemConfig, gains_sq: &[Vec<f64>], variant: JamVariant) -> Result<SeResult> {
    check_shape(cfg, gains_sq)?;
    let (n, i, u) = (cfg.n_modes, cfg.active, cfg.hops);
    let configs = 1u128.checked_shl((i * u) as u32).unwrap_or(u128::MAX);
    if i * u >= 128 || configs > MAX_JAM_CONFIGS {
        return Err(Error::JamSpace(configs));
    }
    let p_jammed = 1.0 - clean_hop_prob(n, i);
    let mut mask_weight = vec![0.0; 1 << i];
    if p_jammed > 0.0 {
        for (mask, w) in mask_weight.iter_mut().enumerate().skip(1) {
            let k = (mask as u32).count_ones() as usize;
            *w = jam_prob_modes(n, i, k) / (binomial(i as u64, k as u64)? as f64 * p_jammed);
        }
    }
    let hop_weight = (0..=u)
        .map(|k| Ok(jam_prob_hops(n, i, u, k, variant)? / binomial(u as u64, k as u64)? as f64))
        .collect::<Result<Vec<f64>>>()?;

    struct Walk<'a> {
        gains_sq: &'a [Vec<f64>],
        mask_weight: &'a [f64],
        hop_weight: &'a [f64],
        clean_var: f64,
        jam_var: f64,
    }
    fn walk(w: &Walk, hop: usize, jammed_hops: usize, weight: f64, acc: &mut Vec<f64>) -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        if hop == w.gains_sq.len() {
            return weight * w.hop_weight[jammed_hops] * signal_term(acc);
        }
        let row = &w.gains_sq[hop];
        let mut total = 0.0;
        for (mask, &mw) in w.mask_weight.iter().enumerate() {
            let (next_weight, next_jammed) =
                if mask == 0 { (weight, jammed_hops) } else { (weight * mw, jammed_hops + 1) };
            if next_weight == 0.0 {
                continue;
            }
            for (k, g) in row.iter().enumerate() {
                acc[k] += g / if mask >> k & 1 == 1 { w.jam_var } else { w.clean_var };
            }
            total += walk(w, hop + 1, next_jammed, next_weight, acc);
            for (k, g) in row.iter().enumerate() {
                acc[k] -= g / if mask >> k & 1 == 1 { w.jam_var } else { w.clean_var };
            }
        }
        total
    }
    let w = Walk {
        gains_sq,
        mask_weight: &mask_weight,
        hop_weight: &hop_weight,
        clean_var: cfg.noise_var,
        jam_var: cfg.noise_var + cfg.jam_var,
    };
    let signal = walk(&w, 0, 0, 1.0, &mut vec![0.0; i]);
    let budget = bit_budget(cfg, HopScheme::ImMh)?;
    Ok(SeResult::new(signal, (u as u32 * log2_exact(budget.k1)) as f64))
}

/// IM-DSMH bound: Σ_i log2(1 + Σ_u χ_{i,u}) + U·log2 K2 with χ = |h|²/σ².
pub fn se_dsmh(cfg: &SystemConfig, gains_sq: &[Vec<f64>]) -> Result<SeResult> {
    check_shape(cfg, gains_sq)?;
    let budget = bit_budget(cfg, HopScheme::ImDsmh)?;
    let mut acc = vec![0.0; cfg.active];
    for row in gains_sq {
        for (a, g) in acc.iter_mut().zip(row) {
            *a += g / cfg.noise_var;
        }
    }
    let k2 = budget.k2.expect("DSMH budget carries K2");
    Ok(SeResult::new(signal_term(&acc), (cfg.hops as u32 * log2_exact(k2)) as f64))
}

/// SE bound for `scheme` at the average channel power. The MH baseline
/// carries no index information.
pub fn se_for(cfg: &SystemConfig, scheme: Scheme, variant: JamVariant) -> Result<SeResult> {
    let gains = mean_gains_sq(cfg);
    match scheme {
        Scheme::ImMh => se_immh(cfg, &gains, variant),
        Scheme::ImDsmh => se_dsmh(cfg, &gains),
        Scheme::MhBaseline => {
            let im = se_immh(cfg, &gains, variant)?;
            Ok(SeResult::new(im.signal_part, 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(n: usize, i: usize, u: usize, snr_db: f64) -> SystemConfig {
        SystemConfig::new(n, i, u).with_snr_db(snr_db, 2.0)
    }

    #[test]
    fn zero_gain_leaves_only_index_information() {
        let c = at(8, 2, 2, 10.0);
        let zero = vec![vec![0.0; 2]; 2];
        let im = se_immh(&c, &zero, JamVariant::Normalized).unwrap();
        assert_eq!(im.value, 2.0 * 4.0);
        assert_eq!(im.signal_part, 0.0);
        let ds = se_dsmh(&c, &zero).unwrap();
        assert_eq!(ds.value, 2.0 * log2_exact(bit_budget(&c, HopScheme::ImDsmh).unwrap().k2.unwrap()) as f64);
    }

    #[test]
    fn single_hop_matches_hand_average() {
        let c = at(8, 2, 1, 10.0);
        let g = [[0.8, 1.3]];
        let gains: Vec<Vec<f64>> = g.iter().map(|r| r.to_vec()).collect();
        let got = se_immh(&c, &gains, JamVariant::Normalized).unwrap();
        let (s, j) = (c.noise_var, c.noise_var + c.jam_var);
        let f = |a: f64, b: f64| (1.0 + a).log2() + (1.0 + b).log2();
        let p = |k| jam_prob_modes(8, 2, k);
        let expect = p(0) * f(0.8 / s, 1.3 / s)
            + p(1) / 2.0 * (f(0.8 / j, 1.3 / s) + f(0.8 / s, 1.3 / j))
            + p(2) * f(0.8 / j, 1.3 / j);
        assert!((got.signal_part - expect).abs() < 1e-12);
        assert_eq!(got.index_part, 4.0);
    }

    #[test]
    fn dsmh_dominates_and_index_gap_tracks_approximation() {
        for n in (4..=16).step_by(2) {
            for i in 1..n {
                let c = at(n, i, 1, 10.0);
                let im = se_for(&c, Scheme::ImMh, JamVariant::Normalized).unwrap();
                let ds = se_for(&c, Scheme::ImDsmh, JamVariant::Normalized).unwrap();
                assert!(ds.value >= im.value);
                let gap = ds.index_part - im.index_part;
                assert!((gap - ((n - i) as f64).log2()).abs() < 1.0, "N={n} I={i}: {gap}");
                if i == n - 1 {
                    assert_eq!(ds.index_part, im.index_part);
                }
            }
        }
    }

    #[test]
    fn baseline_has_no_index_part() {
        let c = at(8, 2, 1, 10.0);
        let mh = se_for(&c, Scheme::MhBaseline, JamVariant::Normalized).unwrap();
        let im = se_for(&c, Scheme::ImMh, JamVariant::Normalized).unwrap();
        assert_eq!(mh.index_part, 0.0);
        assert_eq!(mh.signal_part, im.signal_part);
    }
}
