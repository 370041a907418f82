use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::rician_weights;
use crate::error::{Error, Result};

use super::q::{q_approx, q_exact};

/// One (slot, hop) term of a pairwise error event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepSlot {
    /// |h_LoS|² of the slot's mode.
    pub los_sq: f64,
    /// Absolute NLoS variance of the slot's mode.
    pub nlos_var: f64,
    /// Δ² = |s − ŝ|².
    pub delta_sq: f64,
    /// |s|² of the transmitted symbol.
    pub sym_sq: f64,
    pub jammed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PepContext {
    /// Every (slot, hop) pair of the codeword, in any order.
    pub slots: Vec<PepSlot>,
    pub xi: f64,
    pub noise_var: f64,
    pub jam_var: f64,
    pub est_err_var: f64,
}

impl PepContext {
    fn base_var(&self, slot: &PepSlot, with_jam: bool) -> f64 {
        if with_jam && slot.jammed {
            self.noise_var + self.jam_var
        } else {
            self.noise_var
        }
    }
}

/// E[exp(t|h|²)] for h = √(ξ/(1+ξ))·h_LoS + √(1/(1+ξ))·CN(0, nlos_var).
pub fn mgf_rician(los_sq: f64, xi: f64, nlos_var: f64, t: f64) -> Result<f64> {
    if xi.is_infinite() {
        return Ok((t * los_sq).exp());
    }
    let den = 1.0 + xi - t * nlos_var;
    if !(den > 0.0) {
        return Err(Error::MgfDomain(den));
    }
    Ok((1.0 + xi) * (xi * los_sq * t / den).exp() / den)
}

/// Argument x of the conditional PEP Q(x) for realised (or estimated) gains,
/// one per entry of `ctx.slots`. Includes σ²_ε|s|² in every denominator.
pub fn cond_pep_argument(ctx: &PepContext, gains: &[Complex64]) -> Result<f64> {
    if gains.len() != ctx.slots.len() {
        return Err(Error::Dimension(format!(
            "{} gains for {} PEP slots",
            gains.len(),
            ctx.slots.len()
        )));
    }
    let mut sum = 0.0;
    for (slot, h) in ctx.slots.iter().zip(gains) {
        let den = ctx.base_var(slot, true) + ctx.est_err_var * slot.sym_sq;
        sum += h.norm_sqr() * slot.delta_sq / (2.0 * den);
    }
    Ok(sum.sqrt())
}

/// Conditional PEP given the true gains, exact Q.
pub fn cond_pep_perfect(ctx: &PepContext, gains: &[Complex64]) -> Result<f64> {
    let perfect = PepContext { est_err_var: 0.0, ..ctx.clone() };
    Ok(q_exact(cond_pep_argument(&perfect, gains)?))
}

/// Conditional PEP given estimated gains, exact Q.
pub fn cond_pep_imperfect(ctx: &PepContext, est_gains: &[Complex64]) -> Result<f64> {
    Ok(q_exact(cond_pep_argument(ctx, est_gains)?))
}

/// Conditional PEP with the two-exponential Q approximation; uses
/// `ctx.est_err_var` as given.
pub fn cond_pep_approx(ctx: &PepContext, gains: &[Complex64]) -> Result<f64> {
    Ok(q_approx(cond_pep_argument(ctx, gains)?))
}

/// Shared two-term closed form. Each slot contributes
/// exp(t·μ²/(1 − t·v)) / (1 − t·v) at t = ρ/4 and t = ρ/3, where μ² is the
/// mean power of the (estimated) gain and v its variance.
pub(crate) fn pep_closed_form(
    ctx: &PepContext,
    rho_sign: f64,
    est_err_var: f64,
    with_jam: bool,
) -> Result<f64> {
    let (los_w, nlos_w) = rician_weights(ctx.xi);
    let (mean_w, var_w) = (los_w * los_w, nlos_w * nlos_w);
    let (mut exp4, mut exp3) = (0.0, 0.0);
    let (mut den4, mut den3) = (1.0, 1.0);
    for slot in &ctx.slots {
        let var = var_w * slot.nlos_var - est_err_var;
        if est_err_var > 0.0 && !(var > 0.0) {
            return Err(Error::EstimationVariance {
                err_var: est_err_var,
                limit: var_w * slot.nlos_var,
            });
        }
        let rho = rho_sign * slot.delta_sq
            / (ctx.base_var(slot, with_jam) + est_err_var * slot.sym_sq);
        for (c, e, d) in [(4.0, &mut exp4, &mut den4), (3.0, &mut exp3, &mut den3)] {
            let t = rho / c;
            let den = 1.0 - t * var;
            if !(den > 0.0) {
                return Err(Error::MgfDomain(den));
            }
            *e += t * mean_w * slot.los_sq / den;
            *d *= den;
        }
    }
    Ok(exp4.exp() / (12.0 * den4) + exp3.exp() / (4.0 * den3))
}

/// One slot's factor exp(t·μ²/(1 − t·v))/(1 − t·v) at t = ρ/`c`.
pub(crate) fn slot_factor(
    ctx: &PepContext,
    slot: &PepSlot,
    c: f64,
    est_err_var: f64,
    with_jam: bool,
) -> Result<f64> {
    let (los_w, nlos_w) = rician_weights(ctx.xi);
    let var = nlos_w * nlos_w * slot.nlos_var - est_err_var;
    if est_err_var > 0.0 && !(var > 0.0) {
        return Err(Error::EstimationVariance { err_var: est_err_var, limit: var + est_err_var });
    }
    let t = -slot.delta_sq / (ctx.base_var(slot, with_jam) + est_err_var * slot.sym_sq) / c;
    let den = 1.0 - t * var;
    Ok((t * los_w * los_w * slot.los_sq / den).exp() / den)
}

/// Channel-averaged PEP under perfect CSI with the given jammed slots.
pub fn pep_prop1(ctx: &PepContext) -> f64 {
    pep_closed_form(ctx, -1.0, 0.0, true).expect("non-positive rho keeps the MGF in its domain")
}

/// Channel-averaged PEP under imperfect CSI: ρ̃ adds σ²_ε|s|² to each
/// denominator and the estimated gain has variance nlos_var/(1+ξ) − σ²_ε.
pub fn pep_prop2(ctx: &PepContext) -> Result<f64> {
    pep_closed_form(ctx, -1.0, ctx.est_err_var, true)
}

/// IM-DSMH PEP under perfect CSI. The second de-hop leaves every slot
/// jam-free, so jam flags in `ctx` are ignored.
pub fn pep_dsmh_perfect(ctx: &PepContext) -> f64 {
    pep_closed_form(ctx, -1.0, 0.0, false).expect("non-positive rho keeps the MGF in its domain")
}

/// IM-DSMH PEP under imperfect CSI, jam flags ignored.
pub fn pep_dsmh_imperfect(ctx: &PepContext) -> Result<f64> {
    pep_closed_form(ctx, -1.0, ctx.est_err_var, false)
}

/// Perfect-CSI PEP assembled as (1/12)ΠM(ρ/4) + (1/4)ΠM(ρ/3) from
/// [`mgf_rician`].
pub fn pep_mgf_assembly(ctx: &PepContext) -> Result<f64> {
    let (mut p4, mut p3) = (1.0, 1.0);
    for slot in &ctx.slots {
        let rho = -slot.delta_sq / ctx.base_var(slot, true);
        p4 *= mgf_rician(slot.los_sq, ctx.xi, slot.nlos_var, rho / 4.0)?;
        p3 *= mgf_rician(slot.los_sq, ctx.xi, slot.nlos_var, rho / 3.0)?;
    }
    Ok(p4 / 12.0 + p3 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, sample_rician};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn slot(delta_sq: f64, jammed: bool) -> PepSlot {
        PepSlot { los_sq: 1.0, nlos_var: 1.0, delta_sq, sym_sq: 1.0, jammed }
    }

    fn ctx(slots: Vec<PepSlot>) -> PepContext {
        PepContext { slots, xi: 10.0, noise_var: 0.1, jam_var: 0.16, est_err_var: 0.0 }
    }

    #[test]
    fn zero_distance_gives_one_third() {
        let c = ctx(vec![slot(0.0, false), slot(0.0, true)]);
        assert!((pep_prop1(&c) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cond_pep_perfect(&c, &[Complex64::new(1.0, 0.0); 2]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mgf_basic_limits() {
        assert!((mgf_rician(0.7, 5.0, 0.7, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mgf_rician(0.7, f64::INFINITY, 0.7, -2.0).unwrap() - (-1.4f64).exp()).abs() < 1e-15);
        let big = mgf_rician(0.7, 1e12, 0.7, -2.0).unwrap();
        assert!((big - (-1.4f64).exp()).abs() < 1e-9);
        assert!(mgf_rician(1.0, 1.0, 1.0, 2.5).is_err());
    }

    #[test]
    fn mgf_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let los = Complex64::from_polar(0.8f64.sqrt(), 0.4);
        let (xi, nlos_var, t) = (3.0, 1.3, -0.6);
        let n = 400_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let h = sample_rician(los, xi, nlos_var, &mut rng);
            let v = (t * h.norm_sqr()).exp();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = mgf_rician(0.8, xi, nlos_var, t).unwrap();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} ({se})");
    }

    #[test]
    fn prop1_equals_mgf_assembly() {
        let c = ctx(vec![slot(4.0, false), slot(2.0, true), slot(0.5, false)]);
        let a = pep_prop1(&c);
        let b = pep_mgf_assembly(&c).unwrap();
        assert!((a / b - 1.0).abs() < 1e-13);
    }

    #[test]
    fn prop1_matches_channel_average_of_conditional_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let c = PepContext { xi: 2.0, noise_var: 0.8, ..ctx(vec![slot(4.0, false), slot(4.0, true)]) };
        let n = 300_000;
        let los = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for _ in 0..n {
            let g: Vec<_> = (0..2).map(|_| sample_rician(los, c.xi, 1.0, &mut rng)).collect();
            acc += cond_pep_approx(&c, &g).unwrap();
        }
        let mc = acc / n as f64;
        assert!((mc / pep_prop1(&c) - 1.0).abs() < 0.01, "{mc} vs {}", pep_prop1(&c));
    }

    #[test]
    fn prop2_reduces_to_prop1_and_grows_with_error() {
        let base = ctx(vec![slot(4.0, false), slot(4.0, true), slot(2.0, false)]);
        assert_eq!(pep_prop2(&base).unwrap(), pep_prop1(&base));
        assert_eq!(pep_dsmh_imperfect(&base).unwrap(), pep_dsmh_perfect(&base));
        let mut last = pep_prop1(&base);
        for k in 1..=40 {
            let c = PepContext { est_err_var: k as f64 * 0.002, ..base.clone() };
            let v = pep_prop2(&c).unwrap();
            assert!(v >= last, "{k}");
            last = v;
        }
        let bad = PepContext { est_err_var: 1.0 / 11.0, ..base };
        assert!(pep_prop2(&bad).is_err());
    }

    #[test]
    fn prop2_matches_average_over_estimated_gains() {
        // Estimated gain drawn with mean √(ξ/(1+ξ))·h_LoS and variance
        // nlos_var/(1+ξ) − σ²_ε, the statistics the closed form assumes.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = PepContext {
            xi: 1.0,
            noise_var: 0.5,
            est_err_var: 0.2,
            ..ctx(vec![slot(4.0, false), slot(4.0, true)])
        };
        let mean = (0.5f64).sqrt();
        let var = 0.5 - 0.2;
        let n = 300_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let g: Vec<_> =
                (0..2).map(|_| Complex64::new(mean, 0.0) + complex_gaussian(&mut rng, var)).collect();
            acc += cond_pep_approx(&c, &g).unwrap();
        }
        let mc = acc / n as f64;
        let cf = pep_prop2(&c).unwrap();
        assert!((mc / cf - 1.0).abs() < 0.01, "{mc} vs {cf}");
    }

    #[test]
    fn bounds_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..500 {
            let slots: Vec<_> = (0..4)
                .map(|_| PepSlot {
                    los_sq: rng.random_range(0.01..4.0),
                    nlos_var: rng.random_range(0.01..4.0),
                    delta_sq: rng.random_range(0.0..4.0),
                    sym_sq: 1.0,
                    jammed: rng.random(),
                })
                .collect();
            let c = PepContext { xi: rng.random_range(0.0..20.0), ..ctx(slots) };
            let p = pep_prop1(&c);
            assert!(p > 0.0 && p <= 1.0 / 3.0 + 1e-15);

            let mut stronger = c.clone();
            stronger.slots[0].los_sq *= 1.5;
            assert!(pep_prop1(&stronger) <= p + 1e-15);

            let louder = PepContext { jam_var: c.jam_var * 3.0, ..c.clone() };
            assert!(pep_prop1(&louder) >= p - 1e-15);

            // Same total power, more of it in the LoS component.
            let mut equal = c.clone();
            for sl in equal.slots.iter_mut() {
                sl.nlos_var = sl.los_sq;
            }
            let richer = PepContext { xi: c.xi + 1.0, ..equal.clone() };
            assert!(pep_prop1(&richer) <= pep_prop1(&equal) + 1e-15);
        }
    }

    #[test]
    fn conditional_pep_decreases_with_gain() {
        let c = ctx(vec![slot(4.0, false), slot(1.0, true)]);
        let g = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
        let g2: Vec<_> = g.iter().map(|h| h * 2.0).collect();
        let a = cond_pep_perfect(&c, &g).unwrap();
        let b = cond_pep_perfect(&c, &g2).unwrap();
        assert!(b < a && a <= 0.5);
    }

    #[test]
    fn conditional_pep_matches_decision_statistic() {
        // Simulate D = metric(ŝ) − metric(s) < 0 directly for fixed gains.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let c = ctx(vec![slot(4.0, false), slot(4.0, true)]);
        let s = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let s_hat = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        let h = [Complex64::new(0.25, 0.05), Complex64::new(0.3, -0.2)];
        let vars = [c.noise_var, c.noise_var + c.jam_var];
        let n = 1_000_000;
        let mut errors = 0u64;
        for _ in 0..n {
            let mut d = 0.0;
            for i in 0..2 {
                let y = h[i] * s[i] + complex_gaussian(&mut rng, vars[i]);
                d += ((y - h[i] * s_hat[i]).norm_sqr() - (y - h[i] * s[i]).norm_sqr()) / vars[i];
            }
            if d < 0.0 {
                errors += 1;
            }
        }
        let p = cond_pep_perfect(&c, &h).unwrap();
        let emp = errors as f64 / n as f64;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((emp - p).abs() < 3.0 * sd, "{emp} vs {p}");
    }
}
