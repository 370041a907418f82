//! Shared fixtures for the criterion benches.

use oamhop::{Scheme, SystemConfig, TrialPlan};

/// N=8, I=2, U=2 at 10 dB SNR and 2 dB JNR.
pub fn reference_config() -> SystemConfig {
    SystemConfig::new(8, 2, 2).with_snr_db(10.0, 2.0)
}

pub fn reference_plan(scheme: Scheme) -> TrialPlan {
    TrialPlan::new(reference_config(), scheme)
}
