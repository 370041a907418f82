use num_complex::Complex64;

use crate::error::{Error, Result};

use super::constellation::{Constellation, SymbolVector};
use super::frame::DehoppedSignals;

/// Noise and jamming levels seen by the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorVariances {
    pub noise: f64,
    pub jam: f64,
    /// σ²_ε; zero under perfect CSI.
    pub est_err: f64,
}

fn check_shape(y: &DehoppedSignals, gains: &[Vec<Complex64>], jammed: &[Vec<bool>]) -> Result<usize> {
    let slots = y.values.first().map_or(0, Vec::len);
    let ok = y.hops() > 0
        && gains.len() == y.hops()
        && jammed.len() == y.hops()
        && y.values.iter().all(|r| r.len() == slots)
        && gains.iter().all(|r| r.len() == slots)
        && jammed.iter().all(|r| r.len() == slots);
    if !ok {
        return Err(Error::Dimension("observations, gains and jam flags disagree in shape".into()));
    }
    Ok(slots)
}

/// Metric Σ_u |y − h·s|² / (σ² [+ σ²_J] + σ²_ε|s|²) summed over hops for
/// every slot and candidate. The metric separates across slots, so each slot
/// is minimised on its own; ties go to the lowest label, which is the same
/// as the lowest index of the joint candidate enumeration.
fn detect(
    y: &DehoppedSignals,
    gains: &[Vec<Complex64>],
    jammed: &[Vec<bool>],
    var: DetectorVariances,
    c: &Constellation,
) -> Result<SymbolVector> {
    let slots = check_shape(y, gains, jammed)?;
    let mut labels = Vec::with_capacity(slots);
    for i in 0..slots {
        let mut best = 0u32;
        let mut best_metric = f64::INFINITY;
        for (label, &s) in c.points().iter().enumerate() {
            let mut metric = 0.0;
            for u in 0..y.hops() {
                let base = if jammed[u][i] { var.noise + var.jam } else { var.noise };
                let den = base + var.est_err * s.norm_sqr();
                let num = (y.values[u][i] - gains[u][i] * s).norm_sqr();
                if den.is_finite() {
                    metric += num / den;
                }
            }
            if metric < best_metric {
                best_metric = metric;
                best = label as u32;
            }
        }
        labels.push(best);
    }
    Ok(SymbolVector::from_labels(labels, c))
}

/// ML detection with known gains and jam indicators.
pub fn ml_detect(
    y: &DehoppedSignals,
    gains: &[Vec<Complex64>],
    jammed: &[Vec<bool>],
    noise_var: f64,
    jam_var: f64,
    c: &Constellation,
) -> Result<SymbolVector> {
    detect(y, gains, jammed, DetectorVariances { noise: noise_var, jam: jam_var, est_err: 0.0 }, c)
}

/// ML detection on estimated gains, with σ²_ε|s|² added to each denominator.
pub fn ml_detect_imperfect(
    y: &DehoppedSignals,
    est_gains: &[Vec<Complex64>],
    jammed: &[Vec<bool>],
    var: DetectorVariances,
    c: &Constellation,
) -> Result<SymbolVector> {
    detect(y, est_gains, jammed, var, c)
}
