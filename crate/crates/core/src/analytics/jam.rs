use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopping::binomial;

/// How the probability of U′ jammed hops out of U is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JamVariant {
    /// Binomial law C(U,U′)(1−P₀)^{U′}P₀^{U−U′}.
    #[default]
    Normalized,
    /// Nested sum with the extra C(I, I′) weights on every jammed hop. Does
    /// not sum to one in general; kept for reproduction studies.
    PaperLiteral,
}

impl JamVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            JamVariant::Normalized => "normalized",
            JamVariant::PaperLiteral => "paper-literal",
        }
    }
}

/// Exact hypergeometric weight of `jammed` overlaps as (numerator, denominator).
pub fn jam_prob_modes_exact(n: usize, active: usize, jammed: usize) -> Result<(u128, u128)> {
    let den = binomial(n as u64, active as u64)?;
    if jammed > active || n - active < active - jammed {
        return Ok((0, den));
    }
    let num = binomial(active as u64, jammed as u64)?
        .checked_mul(binomial((n - active) as u64, (active - jammed) as u64)?)
        .ok_or(Error::Overflow { n: n as u64, k: active as u64 })?;
    Ok((num, den))
}

/// P(I′|I) = C(I,I′)C(N−I,I−I′)/C(N,I): probability that a uniformly drawn
/// I-subset of jammed modes hits exactly I′ of the I active modes.
pub fn jam_prob_modes(n: usize, active: usize, jammed: usize) -> f64 {
    match jam_prob_modes_exact(n, active, jammed) {
        Ok((num, den)) => num as f64 / den as f64,
        Err(_) => {
            let ln_c = |a: usize, b: usize| ln_binomial(a as f64, b as f64);
            if jammed > active || n - active < active - jammed {
                return 0.0;
            }
            (ln_c(active, jammed) + ln_c(n - active, active - jammed) - ln_c(n, active)).exp()
        }
    }
}

fn ln_binomial(n: f64, k: f64) -> f64 {
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// P₀: probability that no active mode is jammed at one hop.
pub fn clean_hop_prob(n: usize, active: usize) -> f64 {
    jam_prob_modes(n, active, 0)
}

/// P(U′|U) under the chosen variant.
pub fn jam_prob_hops(
    n: usize,
    active: usize,
    hops: usize,
    jammed_hops: usize,
    variant: JamVariant,
) -> Result<f64> {
    if jammed_hops > hops {
        return Ok(0.0);
    }
    let p0 = clean_hop_prob(n, active);
    let choose = binomial(hops as u64, jammed_hops as u64)? as f64;
    let per_jammed_hop = match variant {
        JamVariant::Normalized => 1.0 - p0,
        JamVariant::PaperLiteral => {
            // The U′-fold sum of products factors into a U′-th power.
            let mut s = 0.0;
            for k in 1..=active {
                s += binomial(active as u64, k as u64)? as f64 * jam_prob_modes(n, active, k);
            }
            s
        }
    };
    Ok(choose * per_jammed_hop.powi(jammed_hops as i32) * p0.powi((hops - jammed_hops) as i32))
}
