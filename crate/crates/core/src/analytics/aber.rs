use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Csi, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::hopping::{binomial, bit_budget, mode_universe};
use crate::phy::Constellation;

use super::jam::{clean_hop_prob, jam_prob_hops, jam_prob_modes, JamVariant};
use super::pep::{pep_dsmh_imperfect, pep_dsmh_perfect, pep_prop2, slot_factor, PepContext, PepSlot};

/// Largest M^I for which the union bound enumerates symbol pairs.
pub const MAX_CANDIDATES: u128 = 4096;

/// Jam configurations per symbol pair enumerated through the PEP closed
/// form; larger spaces use the per-hop factorisation.
const MAX_ENUMERATED_CONFIGS: u128 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AberResult {
    /// Union-bound value. May exceed one at low SNR.
    pub value: f64,
    /// Ordered (s, ŝ) pairs summed.
    pub terms: u64,
    pub scheme: Scheme,
    pub csi: Csi,
    pub variant: JamVariant,
    pub exceeds_one: bool,
}

impl AberResult {
    /// Value clamped to 1 for reporting.
    pub fn reported(&self) -> f64 {
        self.value.min(1.0)
    }
}

/// (|h_LoS|², NLoS variance) used for every slot of the bound: the average
/// over the mode universe. Exact when every mode has the same LoS power.
pub fn mean_slot_statistics(cfg: &SystemConfig) -> Result<(f64, f64)> {
    let universe = mode_universe(cfg.n_modes)?;
    let (mut los, mut nlos) = (0.0, 0.0);
    for &l in universe.iter() {
        let sq = cfg.los_gain(l).norm_sqr();
        los += sq;
        nlos += cfg.nlos_var_for(sq);
    }
    let n = universe.len() as f64;
    Ok((los / n, nlos / n))
}

/// Weights of the non-empty jam subsets of one hop given that the hop is
/// jammed, indexed by bitmask over the I active slots.
fn jammed_subset_weights(n: usize, active: usize) -> Result<Vec<f64>> {
    let p_jammed = 1.0 - clean_hop_prob(n, active);
    let mut w = vec![0.0; 1 << active];
    if p_jammed <= 0.0 {
        return Ok(w);
    }
    for (mask, wm) in w.iter_mut().enumerate().skip(1) {
        let k = (mask as u32).count_ones() as usize;
        *wm = jam_prob_modes(n, active, k) / (binomial(active as u64, k as u64)? as f64 * p_jammed);
    }
    Ok(w)
}

/// Inputs shared by every pair of one bound evaluation.
struct JamAverager {
    active: usize,
    hops: usize,
    hop_probs: Vec<f64>,
    subset_weights: Vec<f64>,
    est_err_var: f64,
}

impl JamAverager {
    fn new(cfg: &SystemConfig, variant: JamVariant, est_err_var: f64) -> Result<Self> {
        let hop_probs = (0..=cfg.hops)
            .map(|k| jam_prob_hops(cfg.n_modes, cfg.active, cfg.hops, k, variant))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            active: cfg.active,
            hops: cfg.hops,
            hop_probs,
            subset_weights: jammed_subset_weights(cfg.n_modes, cfg.active)?,
            est_err_var,
        })
    }

    fn config_count(&self) -> u128 {
        let per_hop = (1u128 << self.active) - 1;
        (0..=self.hops as u32).map(|k| per_hop.saturating_pow(k)).fold(0u128, u128::saturating_add)
    }

    fn pep(&self, ctx: &PepContext) -> Result<f64> {
        pep_prop2(&PepContext { est_err_var: self.est_err_var, ..ctx.clone() })
    }

    /// Σ_{U′} P(U′|U)·E[PEP | first U′ hops jammed], enumerating every
    /// jam subset of every jammed hop through the closed-form PEP.
    fn enumerate(&self, hop_slots: &[PepSlot], template: &PepContext) -> Result<f64> {
        let i = self.active;
        let mut total = 0.0;
        for (jammed_hops, &p_hops) in self.hop_probs.iter().enumerate() {
            if p_hops == 0.0 {
                continue;
            }
            let per_hop = (1usize << i) - 1;
            let configs = per_hop.pow(jammed_hops as u32);
            let mut acc = 0.0;
            for code in 0..configs {
                let mut weight = 1.0;
                let mut slots = Vec::with_capacity(i * self.hops);
                let mut rest = code;
                for u in 0..self.hops {
                    let mask = if u < jammed_hops {
                        let m = rest % per_hop + 1;
                        rest /= per_hop;
                        weight *= self.subset_weights[m];
                        m
                    } else {
                        0
                    };
                    for (k, s) in hop_slots.iter().enumerate() {
                        slots.push(PepSlot { jammed: mask >> k & 1 == 1, ..*s });
                    }
                }
                if weight == 0.0 {
                    continue;
                }
                acc += weight * self.pep(&PepContext { slots, ..template.clone() })?;
            }
            total += p_hops * acc;
        }
        Ok(total)
    }

    /// Same quantity through the product structure of the closed form:
    /// per-hop expectations of the slot factors, raised to the hop counts.
    fn factorised(&self, hop_slots: &[PepSlot], template: &PepContext) -> Result<f64> {
        let i = self.active;
        let mut total = 0.0;
        for (c, lead) in [(4.0, 1.0 / 12.0), (3.0, 0.25)] {
            let mut clean = vec![0.0; i];
            let mut ratio = vec![0.0; i];
            for (k, s) in hop_slots.iter().enumerate() {
                let f_clean = slot_factor(template, s, c, self.est_err_var, true)?;
                let jammed = PepSlot { jammed: true, ..*s };
                let f_jam = slot_factor(template, &jammed, c, self.est_err_var, true)?;
                clean[k] = f_clean;
                ratio[k] = f_jam / f_clean;
            }
            let clean_prod: f64 = clean.iter().product();
            // Elementary symmetric polynomials of the jammed/clean ratios.
            let mut e = vec![0.0; i + 1];
            e[0] = 1.0;
            for &r in &ratio {
                for k in (1..=i).rev() {
                    e[k] += e[k - 1] * r;
                }
            }
            // Every k-subset of jammed slots carries the same weight.
            let mut jammed_hop = 0.0;
            for (k, ek) in e.iter().enumerate().skip(1) {
                jammed_hop += self.subset_weights[(1usize << k) - 1] * ek;
            }
            jammed_hop *= clean_prod;
            for (u_j, &p_hops) in self.hop_probs.iter().enumerate() {
                total += lead
                    * p_hops
                    * jammed_hop.powi(u_j as i32)
                    * clean_prod.powi((self.hops - u_j) as i32);
            }
        }
        Ok(total)
    }
}

/// Union bound on the average bit error rate.
///
/// Sums N_e(s, ŝ)·PEP(s → ŝ) over ordered symbol-vector pairs and divides by
/// η·M^I, with η the bits carried per codeword (signal bits only for the MH
/// baseline). IM-MH and the baseline average the PEP over jam
/// configurations; IM-DSMH uses the jam-free PEP.
pub fn aber_union_bound(
    cfg: &SystemConfig,
    scheme: Scheme,
    csi: Csi,
    variant: JamVariant,
) -> Result<AberResult> {
    cfg.validate_for(scheme)?;
    let constellation = Constellation::new(cfg.modulation, cfg.order)?;
    let m = constellation.order();
    let candidates = (m as u128).checked_pow(cfg.active as u32).unwrap_or(u128::MAX);
    if candidates > MAX_CANDIDATES {
        return Err(Error::CandidateSpace { candidates, limit: MAX_CANDIDATES });
    }
    let budget = bit_budget(cfg, scheme.hop_scheme())?;
    let eta = match scheme {
        Scheme::ImMh => budget.eta0,
        Scheme::MhBaseline => budget.signal_bits,
        Scheme::ImDsmh => budget.eta1.expect("validated I < N"),
    } as f64;
    let est_err_var = match csi {
        Csi::Perfect => 0.0,
        Csi::Imperfect => cfg.est_err_var,
    };
    let (los_sq, nlos_var) = mean_slot_statistics(cfg)?;
    let template = PepContext {
        slots: Vec::new(),
        xi: cfg.xi,
        noise_var: cfg.noise_var,
        jam_var: cfg.jam_var,
        est_err_var,
    };
    let averager = JamAverager::new(cfg, variant, est_err_var)?;
    let enumerate = averager.config_count() <= MAX_ENUMERATED_CONFIGS;

    let i = cfg.active;
    let count = candidates as usize;
    let labels = |idx: usize| -> Vec<u32> {
        (0..i).map(|k| ((idx / m.pow((i - 1 - k) as u32)) % m) as u32).collect()
    };
    let per_s: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|a| -> Result<f64> {
            let s = labels(a);
            let mut sum = 0.0;
            for b in (0..count).filter(|&b| b != a) {
                let s_hat = labels(b);
                let ne: u32 =
                    s.iter().zip(&s_hat).map(|(&x, &y)| Constellation::bit_distance(x, y)).sum();
                let hop_slots: Vec<PepSlot> = s
                    .iter()
                    .zip(&s_hat)
                    .map(|(&x, &y)| {
                        let (p, q) = (constellation.point(x), constellation.point(y));
                        PepSlot {
                            los_sq,
                            nlos_var,
                            delta_sq: (p - q).norm_sqr(),
                            sym_sq: p.norm_sqr(),
                            jammed: false,
                        }
                    })
                    .collect();
                let pep = match scheme {
                    Scheme::ImDsmh => {
                        let slots = hop_slots.iter().cycle().take(i * cfg.hops).copied().collect();
                        let ctx = PepContext { slots, ..template.clone() };
                        match csi {
                            Csi::Perfect => pep_dsmh_perfect(&ctx),
                            Csi::Imperfect => pep_dsmh_imperfect(&ctx)?,
                        }
                    }
                    Scheme::ImMh | Scheme::MhBaseline if enumerate => {
                        averager.enumerate(&hop_slots, &template)?
                    }
                    Scheme::ImMh | Scheme::MhBaseline => averager.factorised(&hop_slots, &template)?,
                };
                sum += ne as f64 * pep;
            }
            Ok(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    let value = per_s.iter().sum::<f64>() / (eta * candidates as f64);
    Ok(AberResult {
        value,
        terms: (count * (count - 1)) as u64,
        scheme,
        csi,
        variant,
        exceeds_one: value > 1.0,
    })
}
