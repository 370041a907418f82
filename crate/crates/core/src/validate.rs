//! Self-contained oracle suite behind `oamhop validate`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytics::{
    cond_pep_approx, jam_prob_modes_exact, pep_closed_form, pep_mgf_assembly, PepContext, PepSlot,
};
use crate::channel::{complex_gaussian, sample_rician};
use crate::hopping::{mode_universe, unrank_subset, ModeSet};
use crate::phy::{dehop_dsmh, JammerDraw};

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Evaluate the closed-form PEP with ρ ≥ 0 instead of ρ ≤ 0.
    FlipRhoSign,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub fault: Option<Fault>,
    pub seed: u64,
    /// Channel draws per Monte Carlo point.
    pub mc_draws: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { fault: None, seed: 2024, mc_draws: 400_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub tolerance: String,
    pub detail: String,
}

fn closed_form(ctx: &PepContext, opts: &ValidateOptions) -> crate::Result<f64> {
    let sign = match opts.fault {
        Some(Fault::FlipRhoSign) => 1.0,
        None => -1.0,
    };
    pep_closed_form(ctx, sign, 0.0, true)
}

fn contexts(xis: &[f64], noises: &[f64]) -> Vec<PepContext> {
    let mut out = Vec::new();
    for &xi in xis {
        for &noise in noises {
            for &(d0, d1, j0, j1) in &[(4.0, 0.0, false, false), (4.0, 4.0, true, false), (2.0, 0.6, true, true)] {
                let slot = |d, j| PepSlot { los_sq: 0.9, nlos_var: 1.1, delta_sq: d, sym_sq: 1.0, jammed: j };
                out.push(PepContext {
                    slots: vec![slot(d0, j0), slot(d1, j1), slot(d0, false)],
                    xi,
                    noise_var: noise,
                    jam_var: noise * 1.58,
                    est_err_var: 0.0,
                });
            }
        }
    }
    out
}

fn check_mgf_assembly(opts: &ValidateOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for ctx in contexts(&[0.0, 1.0, 5.0, 10.0, 40.0], &[0.05, 0.3, 1.0]) {
        match (closed_form(&ctx, opts), pep_mgf_assembly(&ctx)) {
            (Ok(a), Ok(b)) => worst = worst.max((a / b - 1.0).abs()),
            (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
        }
    }
    let passed = failure.is_none() && worst <= 1e-12;
    CheckResult {
        name: "closed-form PEP vs MGF product assembly",
        passed,
        tolerance: "relative error <= 1e-12".into(),
        detail: failure.unwrap_or_else(|| format!("worst relative error {worst:.3e}")),
    }
}

fn check_channel_average(opts: &ValidateOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let los = Complex64::new(0.9f64.sqrt(), 0.0);
    let mut worst: f64 = 0.0;
    let mut failure = None;
    // Moderate-SNR points where the sample variance of the conditional PEP
    // keeps the Monte Carlo error well below the tolerance.
    for ctx in contexts(&[2.0, 10.0], &[0.5, 1.0]).into_iter().step_by(2) {
        let cf = match closed_form(&ctx, opts) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e.to_string());
                continue;
            }
        };
        let mut acc = 0.0;
        let mut gains = vec![Complex64::new(0.0, 0.0); ctx.slots.len()];
        for _ in 0..opts.mc_draws {
            for (g, s) in gains.iter_mut().zip(&ctx.slots) {
                *g = sample_rician(los, ctx.xi, s.nlos_var, &mut rng);
            }
            acc += cond_pep_approx(&ctx, &gains).expect("matching lengths");
        }
        let mc = acc / opts.mc_draws as f64;
        worst = worst.max((cf / mc - 1.0).abs());
    }
    let passed = failure.is_none() && worst < 0.01;
    CheckResult {
        name: "closed-form PEP vs Monte Carlo channel average",
        passed,
        tolerance: "relative error < 1%".into(),
        detail: failure.unwrap_or_else(|| format!("worst relative error {worst:.3e}")),
    }
}

fn check_jam_enumeration() -> CheckResult {
    let mut mismatch = None;
    'outer: for n in (2..=10).step_by(2) {
        let universe: Vec<i32> = (0..n as i32).collect();
        for i in 1..=n {
            let total = crate::hopping::binomial(n as u64, i as u64).unwrap();
            let legit = unrank_subset(&universe, i, 0).unwrap();
            let mut counts = vec![0u128; i + 1];
            for r in 0..total {
                let jam = unrank_subset(&universe, i, r).unwrap();
                counts[jam.iter().filter(|l| legit.contains(l)).count()] += 1;
            }
            for (k, &c) in counts.iter().enumerate() {
                let (num, den) = jam_prob_modes_exact(n, i, k).unwrap();
                if num * total != c * den {
                    mismatch = Some(format!("N={n} I={i} I'={k}: {num}/{den} vs {c}/{total}"));
                    break 'outer;
                }
            }
        }
    }
    CheckResult {
        name: "jam overlap probabilities vs exhaustive enumeration",
        passed: mismatch.is_none(),
        tolerance: "exact rational equality".into(),
        detail: mismatch.unwrap_or_else(|| "N <= 10, all I and I'".into()),
    }
}

fn check_dsmh_cancellation(opts: &ValidateOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xD5);
    let n = 8;
    let universe = mode_universe(n).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..2_000 {
        let i = rng.random_range(1..n);
        let set = ModeSet::new(
            unrank_subset(&universe, i, rng.random_range(0..crate::hopping::binomial(n as u64, i as u64).unwrap())).unwrap(),
            n,
        )
        .unwrap();
        let ls = loop {
            let l = rng.random_range(-(n as i32) / 2 + 1..=n as i32 / 2);
            if l != 0 {
                break l;
            }
        };
        // Adversarial jammer: hits exactly the active modes.
        let jam = JammerDraw {
            jam_sets: vec![set.clone()],
            jam_symbols: vec![(0..i).map(|_| complex_gaussian(&mut rng, 10.0)).collect()],
            kappa: vec![vec![false; i]],
        };
        let left: f64 = dehop_dsmh(&jam.frame(0, n, n), &set, ls)
            .unwrap()
            .iter()
            .map(|v| v.norm_sqr())
            .sum();
        worst = worst.max(left / jam.injected_power(0));
    }
    CheckResult {
        name: "IM-DSMH jam cancellation after double de-hop",
        passed: worst < 1e-20,
        tolerance: "residual/injected < 1e-20".into(),
        detail: format!("worst ratio {worst:.3e} over 2000 trials"),
    }
}

/// Runs every check; the suite passes when all entries pass.
pub fn run_suite(opts: &ValidateOptions) -> Vec<CheckResult> {
    vec![
        check_mgf_assembly(opts),
        check_channel_average(opts),
        check_jam_enumeration(),
        check_dsmh_cancellation(opts),
    ]
}
