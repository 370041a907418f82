//! Monte Carlo BER estimation over the full transmit/receive chain.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{aber_union_bound, se_for, AberResult, JamVariant, SeResult};
use crate::channel::ChannelRealization;
use crate::config::{Csi, JamKnowledge, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::hopping::{bit_budget, generate_pattern, PrngKey};
use crate::phy::{
    channel_pass, dehop, dehop_dsmh, emit, emit_dsmh, mode_gains, ml_detect_imperfect,
    Constellation, DehoppedSignals, DetectorVariances, JammerDraw, SymbolVector,
};

/// Fewest bit errors for a point to count as reliable.
pub const MIN_TARGET_ERRORS: u64 = 100;

/// Trials per scheduling batch. The stopping rule is checked only between
/// batches, so results do not depend on the worker count.
pub const BATCH: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub cfg: SystemConfig,
    pub scheme: Scheme,
    pub jam_knowledge: JamKnowledge,
    pub target_errors: u64,
    pub max_trials: u64,
    pub base_seed: u64,
}

impl TrialPlan {
    pub fn new(cfg: SystemConfig, scheme: Scheme) -> Self {
        Self {
            cfg,
            scheme,
            jam_knowledge: JamKnowledge::Genie,
            target_errors: 200,
            max_trials: 200_000,
            base_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate_for(self.scheme)?;
        if self.target_errors < MIN_TARGET_ERRORS {
            return Err(Error::InvalidConfig {
                field: "target_errors",
                reason: format!("must be at least {MIN_TARGET_ERRORS}, got {}", self.target_errors),
            });
        }
        if self.max_trials == 0 {
            return Err(Error::InvalidConfig { field: "max_trials", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Bits counted per trial: η0, η1, or the signal bits for the baseline.
    pub fn bits_per_trial(&self) -> Result<u64> {
        let b = bit_budget(&self.cfg, self.scheme.hop_scheme())?;
        Ok(match self.scheme {
            Scheme::ImMh => b.eta0,
            Scheme::ImDsmh => b.eta1.expect("validated I < N"),
            Scheme::MhBaseline => b.signal_bits,
        } as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub trials: u64,
    pub ber: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
    /// `target_errors` was reached.
    pub reliable: bool,
    /// IM-DSMH only: largest per-hop ratio of jam power left after both
    /// de-hops to jam power injected.
    pub max_residual_jam_ratio: Option<f64>,
}

impl BerEstimate {
    fn from_counts(bit_errors: u64, bits_total: u64, trials: u64, target: u64) -> Self {
        let ber = if bits_total == 0 { 0.0 } else { bit_errors as f64 / bits_total as f64 };
        let ci95 = if bits_total == 0 {
            0.0
        } else {
            1.96 * (ber * (1.0 - ber) / bits_total as f64).sqrt()
        };
        Self {
            bit_errors,
            bits_total,
            trials,
            ber,
            ci95,
            reliable: bit_errors >= target,
            max_residual_jam_ratio: None,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        ((self.ber - self.ci95).max(0.0), self.ber + self.ci95)
    }

    /// Upper 95% limit below the other estimate's lower limit.
    pub fn clearly_below(&self, other: &BerEstimate) -> bool {
        self.interval().1 < other.interval().0
    }
}

/// Seed of trial `t`: SplitMix64 finaliser over the base seed and index.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    let mut z = base_seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of one codeword transmission.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    /// Largest residual/injected jam power ratio over the hops (IM-DSMH).
    pub residual_jam_ratio: f64,
}

/// Runs trial `t` of `plan` end to end.
pub fn run_trial(plan: &TrialPlan, constellation: &Constellation, t: u64) -> Result<TrialOutcome> {
    let cfg = &plan.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(plan.base_seed, t));
    let mut key = PrngKey::from_seed(rng.next_u64());
    let pattern = generate_pattern(cfg, &mut key, plan.scheme.hop_scheme())?;
    let labels = (0..cfg.active).map(|_| rng.random_range(0..cfg.order as u32)).collect();
    let sym = SymbolVector::from_labels(labels, constellation);
    let chan = ChannelRealization::draw(cfg, &pattern, &mut rng)?;
    let jam = JammerDraw::draw(cfg.n_modes, cfg.active, cfg.jam_var, &pattern, &mut rng)?;

    let mut y = DehoppedSignals::default();
    let mut residual_ratio: f64 = 0.0;
    for (u, set) in pattern.per_hop_sets.iter().enumerate() {
        let gains = mode_gains(cfg.n_modes, set, &chan.gains[u]);
        match pattern.second_mode(u) {
            None => {
                let frame = emit(&sym, set, cfg.n_modes)?;
                let rx = channel_pass(&frame, &gains, &jam, u, cfg.noise_var, &mut rng)?;
                y.push_hop(dehop(&rx, set)?);
            }
            Some(ls) => {
                let frame = emit_dsmh(&sym, set, ls, cfg.n_modes)?;
                let rx = channel_pass(&frame, &gains, &jam, u, cfg.noise_var, &mut rng)?;
                y.push_hop(dehop_dsmh(&rx, set, ls)?);
                let injected = jam.injected_power(u);
                if injected > 0.0 {
                    let jam_only = jam.frame(u, cfg.n_modes, cfg.n_modes);
                    let left: f64 =
                        dehop_dsmh(&jam_only, set, ls)?.iter().map(|v| v.norm_sqr()).sum();
                    residual_ratio = residual_ratio.max(left / injected);
                }
            }
        }
    }
    let kappa = match plan.jam_knowledge {
        JamKnowledge::Genie => jam.kappa.clone(),
        JamKnowledge::Uniform => jam.kappa.iter().map(|r| vec![false; r.len()]).collect(),
    };
    let var = DetectorVariances {
        noise: cfg.noise_var,
        jam: cfg.jam_var,
        est_err: if cfg.csi() == Csi::Imperfect { cfg.est_err_var } else { 0.0 },
    };
    let detected = ml_detect_imperfect(&y, &chan.estimated, &kappa, var, constellation)?;
    Ok(TrialOutcome {
        bit_errors: sym.bit_errors(&detected) as u64,
        residual_jam_ratio: residual_ratio,
    })
}

/// Estimates the BER of one operating point.
///
/// Trials run in fixed batches on the rayon pool; after each batch the run
/// stops once `target_errors` signal-bit errors or `max_trials` trials are
/// reached. Index bits count in the denominator but are never in error.
pub fn run_point(plan: &TrialPlan) -> Result<BerEstimate> {
    plan.validate()?;
    let constellation = Constellation::new(plan.cfg.modulation, plan.cfg.order)?;
    let bits_per_trial = plan.bits_per_trial()?;
    let (mut errors, mut trials) = (0u64, 0u64);
    let mut residual: f64 = 0.0;
    while trials < plan.max_trials && errors < plan.target_errors {
        let end = (trials + BATCH).min(plan.max_trials);
        let outcomes = (trials..end)
            .into_par_iter()
            .map(|t| run_trial(plan, &constellation, t))
            .collect::<Result<Vec<_>>>()?;
        for o in &outcomes {
            errors += o.bit_errors;
            residual = residual.max(o.residual_jam_ratio);
        }
        trials = end;
    }
    let mut est = BerEstimate::from_counts(errors, trials * bits_per_trial, trials, plan.target_errors);
    if plan.scheme == Scheme::ImDsmh {
        est.max_residual_jam_ratio = Some(residual);
    }
    Ok(est)
}

/// Parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "u")]
    Hops,
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "i")]
    Active,
    #[serde(rename = "n")]
    Modes,
    #[serde(rename = "sigma_eps_sq")]
    SigmaEpsSq,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Hops => "u",
            SweepAxis::Xi => "xi",
            SweepAxis::Active => "i",
            SweepAxis::Modes => "n",
            SweepAxis::SigmaEpsSq => "sigma_eps_sq",
        }
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub plan: TrialPlan,
    pub ber: Option<BerEstimate>,
    /// `None` when the candidate space is too large for the union bound.
    pub aber: Option<AberResult>,
    pub se: Option<SeResult>,
}

/// Evaluates each `(axis value, plan)` with the closed forms and, when
/// `simulate` is set, by Monte Carlo.
pub fn sweep(
    points: &[(f64, TrialPlan)],
    axis: SweepAxis,
    variant: JamVariant,
    simulate: bool,
) -> Result<Vec<SweepRow>> {
    if points.is_empty() {
        return Err(Error::InvalidConfig { field: "sweep", reason: "no sweep points".into() });
    }
    let mut rows = Vec::with_capacity(points.len());
    for (value, plan) in points {
        plan.cfg.validate_for(plan.scheme)?;
        let aber = match aber_union_bound(&plan.cfg, plan.scheme, plan.cfg.csi(), variant) {
            Ok(a) => Some(a),
            Err(Error::CandidateSpace { .. }) => None,
            Err(e) => return Err(e),
        };
        let se = match se_for(&plan.cfg, plan.scheme, variant) {
            Ok(s) => Some(s),
            Err(Error::JamSpace(_)) => None,
            Err(e) => return Err(e),
        };
        let ber = if simulate { Some(run_point(plan)?) } else { None };
        rows.push(SweepRow { axis, value: *value, plan: plan.clone(), ber, aber, se });
    }
    Ok(rows)
}

/// Pairs (snr, snr + 10 dB) whose BER ratio exceeds 0.8, i.e. where the
/// curve has flattened into an error floor. Points with zero BER are skipped.
pub fn plateau_pairs(points: &[(f64, f64)]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &(snr, ber) in points {
        if ber <= 0.0 {
            continue;
        }
        if let Some(&(snr2, ber2)) = points.iter().find(|(s, _)| (s - (snr + 10.0)).abs() < 1e-9) {
            if ber2 > 0.0 && ber2 / ber > 0.8 {
                out.push((snr, snr2, ber2 / ber));
            }
        }
    }
    out
}

pub fn has_plateau(points: &[(f64, f64)]) -> bool {
    !plateau_pairs(points).is_empty()
}
