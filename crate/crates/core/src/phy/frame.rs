use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::hopping::{HopPattern, ModeSet};

use super::constellation::SymbolVector;

/// Element-domain samples for one hop.
///
/// IM-MH frames hold a single chip of N element samples. IM-DSMH frames hold
/// N chips; the second-hop mode rotates the phase from chip to chip so the
/// receiver can remove it with a second DFT across chips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementFrame {
    pub n_modes: usize,
    pub chips: usize,
    /// Row-major `[chip][element]`.
    pub samples: Vec<Complex64>,
}

impl ElementFrame {
    pub fn zeros(n_modes: usize, chips: usize) -> Self {
        Self { n_modes, chips, samples: vec![Complex64::new(0.0, 0.0); n_modes * chips] }
    }

    pub fn chip(&self, k: usize) -> &[Complex64] {
        &self.samples[k * self.n_modes..(k + 1) * self.n_modes]
    }

    fn chip_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.n_modes;
        &mut self.samples[k * n..(k + 1) * n]
    }

    /// Σ conj(a)·b over all samples.
    pub fn inner(&self, other: &ElementFrame) -> Complex64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    fn add_assign(&mut self, other: &ElementFrame) {
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
    }
}

/// Lookup of exp(j2πk/N).
pub(crate) struct Twiddles {
    table: Vec<Complex64>,
}

impl Twiddles {
    pub(crate) fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|k| {
                if k == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)
                }
            })
            .collect();
        Self { table }
    }

    /// exp(j2π·k/N) for any integer k.
    pub(crate) fn at(&self, k: i64) -> Complex64 {
        self.table[k.rem_euclid(self.table.len() as i64) as usize]
    }
}

fn universe_index(n_modes: usize, mode: i32) -> usize {
    (mode + n_modes as i32 / 2 - 1) as usize
}

fn check_lengths(sym: &SymbolVector, modes: &ModeSet) -> Result<()> {
    if sym.len() != modes.len() {
        return Err(Error::Dimension(format!(
            "{} symbols for {} active modes",
            sym.len(),
            modes.len()
        )));
    }
    Ok(())
}

/// IM-MH synthesis: x_n = Σ_i s_i exp(j2πn l_i/N).
pub fn emit(sym: &SymbolVector, modes: &ModeSet, n_modes: usize) -> Result<ElementFrame> {
    check_lengths(sym, modes)?;
    let tw = Twiddles::new(n_modes);
    let mut frame = ElementFrame::zeros(n_modes, 1);
    for (n, x) in frame.samples.iter_mut().enumerate() {
        for (&s, &l) in sym.symbols.iter().zip(modes.iter()) {
            *x += s * tw.at(n as i64 * l as i64);
        }
    }
    Ok(frame)
}

/// IM-DSMH synthesis over N chips:
/// x[k][n] = exp(j2πk l_s/N) · Σ_i s_i exp(j2π l_i l_s/N) exp(j2πn l_i/N).
pub fn emit_dsmh(
    sym: &SymbolVector,
    modes: &ModeSet,
    second_mode: i32,
    n_modes: usize,
) -> Result<ElementFrame> {
    check_lengths(sym, modes)?;
    let half = n_modes as i32 / 2;
    if second_mode <= -half || second_mode > half {
        return Err(Error::InvalidModeSet(format!(
            "second-hop mode {second_mode} outside the universe of {n_modes} modes"
        )));
    }
    let tw = Twiddles::new(n_modes);
    let mut base = vec![Complex64::new(0.0, 0.0); n_modes];
    for (n, x) in base.iter_mut().enumerate() {
        for (&s, &l) in sym.symbols.iter().zip(modes.iter()) {
            let pre = tw.at(l as i64 * second_mode as i64);
            *x += s * pre * tw.at(n as i64 * l as i64);
        }
    }
    let mut frame = ElementFrame::zeros(n_modes, n_modes);
    for k in 0..n_modes {
        let rot = tw.at(k as i64 * second_mode as i64);
        for (x, b) in frame.chip_mut(k).iter_mut().zip(&base) {
            *x = b * rot;
        }
    }
    Ok(frame)
}

/// Per-mode channel gains indexed by universe position, zero for modes
/// absent from `modes`.
pub fn mode_gains(n_modes: usize, modes: &ModeSet, gains: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n_modes];
    for (&l, &h) in modes.iter().zip(gains) {
        out[universe_index(n_modes, l)] = h;
    }
    out
}

/// Jammer activity for every hop of one codeword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerDraw {
    /// Modes hit by the jammer at each hop.
    pub jam_sets: Vec<ModeSet>,
    /// `jam_symbols[u][j]` is the symbol on `jam_sets[u][j]`.
    pub jam_symbols: Vec<Vec<Complex64>>,
    /// `kappa[u][i]`: whether active slot i at hop u is jammed after de-hopping.
    pub kappa: Vec<Vec<bool>>,
}

impl JammerDraw {
    /// Uniform random I-subset per hop with CN(0, σ²_J) symbols redrawn per hop.
    pub fn draw<R: Rng + ?Sized>(
        n_modes: usize,
        active: usize,
        jam_var: f64,
        pattern: &HopPattern,
        rng: &mut R,
    ) -> Result<Self> {
        let half = n_modes as i32 / 2;
        let mut jam_sets = Vec::with_capacity(pattern.hops());
        let mut jam_symbols = Vec::with_capacity(pattern.hops());
        for _ in 0..pattern.hops() {
            let mut idx = rand::seq::index::sample(rng, n_modes, active).into_vec();
            idx.sort_unstable();
            let modes = idx.into_iter().map(|k| k as i32 - half + 1).collect();
            jam_sets.push(ModeSet::new(modes, n_modes)?);
            jam_symbols.push((0..active).map(|_| complex_gaussian(rng, jam_var)).collect());
        }
        let kappa = genie_kappa(pattern, &jam_sets);
        Ok(Self { jam_sets, jam_symbols, kappa })
    }

    /// A jammer that is silent on every hop.
    pub fn silent(pattern: &HopPattern) -> Self {
        Self {
            jam_sets: Vec::new(),
            jam_symbols: Vec::new(),
            kappa: pattern.per_hop_sets.iter().map(|s| vec![false; s.len()]).collect(),
        }
    }

    pub fn hops(&self) -> usize {
        self.jam_sets.len()
    }

    /// Number of active slots jammed at `hop`.
    pub fn jammed_count(&self, hop: usize) -> usize {
        self.kappa[hop].iter().filter(|&&k| k).count()
    }

    pub fn injected_power(&self, hop: usize) -> f64 {
        self.jam_symbols.get(hop).map_or(0.0, |w| w.iter().map(|x| x.norm_sqr()).sum())
    }

    /// Element-domain jamming for `hop`, constant over the chips of the hop.
    pub fn frame(&self, hop: usize, n_modes: usize, chips: usize) -> ElementFrame {
        let mut frame = ElementFrame::zeros(n_modes, chips);
        let (Some(set), Some(symbols)) = (self.jam_sets.get(hop), self.jam_symbols.get(hop)) else {
            return frame;
        };
        let tw = Twiddles::new(n_modes);
        let mut row = vec![Complex64::new(0.0, 0.0); n_modes];
        for (m, x) in row.iter_mut().enumerate() {
            for (&l, &w) in set.iter().zip(symbols) {
                *x += w * tw.at(m as i64 * l as i64);
            }
        }
        for k in 0..chips {
            frame.chip_mut(k).copy_from_slice(&row);
        }
        frame
    }
}

/// Slot i at hop u is jammed when its mode is in the jam set and, for
/// IM-DSMH, the second-hop mode is zero (otherwise the second de-hop
/// removes the jammer).
pub fn genie_kappa(pattern: &HopPattern, jam_sets: &[ModeSet]) -> Vec<Vec<bool>> {
    pattern
        .per_hop_sets
        .iter()
        .enumerate()
        .map(|(u, set)| {
            let survives = pattern.second_mode(u).is_none_or(|ls| ls == 0);
            set.iter().map(|&l| survives && jam_sets.get(u).is_some_and(|j| j.contains(l))).collect()
        })
        .collect()
}

/// Mode-diagonal channel for one hop plus jamming and element noise.
///
/// Each chip is projected onto the N universe modes, mode l is scaled by
/// `gains[l]`, and the result is resynthesised. Element noise has variance
/// σ²·N·chips so that both de-hop chains leave variance σ² per slot.
pub fn channel_pass<R: Rng + ?Sized>(
    frame: &ElementFrame,
    gains: &[Complex64],
    jam: &JammerDraw,
    hop: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<ElementFrame> {
    let n = frame.n_modes;
    if gains.len() != n {
        return Err(Error::Dimension(format!("{} mode gains for {n} modes", gains.len())));
    }
    let tw = Twiddles::new(n);
    let half = n as i32 / 2;
    let mut out = ElementFrame::zeros(n, frame.chips);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..frame.chips {
        let chip = frame.chip(k);
        for (p, b) in bins.iter_mut().enumerate() {
            let l = p as i64 - half as i64 + 1;
            *b = if gains[p] == Complex64::new(0.0, 0.0) {
                Complex64::new(0.0, 0.0)
            } else {
                let proj: Complex64 =
                    chip.iter().enumerate().map(|(m, x)| x * tw.at(-(m as i64) * l)).sum();
                gains[p] * proj / n as f64
            };
        }
        for (m, y) in out.chip_mut(k).iter_mut().enumerate() {
            for (p, b) in bins.iter().enumerate() {
                if *b != Complex64::new(0.0, 0.0) {
                    let l = p as i64 - half as i64 + 1;
                    *y += b * tw.at(m as i64 * l);
                }
            }
        }
    }
    if hop < jam.hops() {
        out.add_assign(&jam.frame(hop, n, frame.chips));
    }
    if noise_var > 0.0 {
        let elem_var = noise_var * (n * frame.chips) as f64;
        for y in out.samples.iter_mut() {
            *y += complex_gaussian(rng, elem_var);
        }
    }
    Ok(out)
}

/// De-hopped observations, `values[u][i]` for hop u and active slot i.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DehoppedSignals {
    pub values: Vec<Vec<Complex64>>,
}

impl DehoppedSignals {
    pub fn push_hop(&mut self, slots: Vec<Complex64>) {
        self.values.push(slots);
    }

    pub fn hops(&self) -> usize {
        self.values.len()
    }
}

fn project(row: &[Complex64], mode: i32, tw: &Twiddles) -> Complex64 {
    let sum: Complex64 =
        row.iter().enumerate().map(|(m, y)| y * tw.at(-(m as i64) * mode as i64)).sum();
    sum / row.len() as f64
}

/// IM-MH de-hop: y_i = (1/N) Σ_m y_m exp(−j2πm l_i/N).
pub fn dehop(received: &ElementFrame, modes: &ModeSet) -> Result<Vec<Complex64>> {
    if received.chips != 1 {
        return Err(Error::Dimension(format!(
            "IM-MH de-hop expects one chip, frame has {}",
            received.chips
        )));
    }
    let tw = Twiddles::new(received.n_modes);
    Ok(modes.iter().map(|&l| project(received.chip(0), l, &tw)).collect())
}

/// IM-DSMH de-hop: project every chip on l_i, average the chips against
/// exp(−j2πk l_s/N), then remove the selector phase exp(j2π l_i l_s/N).
pub fn dehop_dsmh(
    received: &ElementFrame,
    modes: &ModeSet,
    second_mode: i32,
) -> Result<Vec<Complex64>> {
    let n = received.n_modes;
    if received.chips != n {
        return Err(Error::Dimension(format!(
            "IM-DSMH de-hop expects {n} chips, frame has {}",
            received.chips
        )));
    }
    let tw = Twiddles::new(n);
    let mut out = Vec::with_capacity(modes.len());
    for &l in modes.iter() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let z = project(received.chip(k), l, &tw);
            acc += z * tw.at(-(k as i64) * second_mode as i64);
        }
        out.push(acc / n as f64 * tw.at(-(l as i64) * second_mode as i64));
    }
    Ok(out)
}
