//! Combinatorial machinery behind the hop patterns.
//!
//! Index bits select one of the first `K1` (IM-MH) or `K2` (IM-DSMH)
//! combinations in lexicographic order. Patterns are drawn from a keyed bit
//! source shared by transmitter and receiver, so the receiver never has to
//! detect the index bits.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Strictly ascending set of distinct OAM orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSet(Vec<i32>);

impl ModeSet {
    /// Checks ordering, |l| ≤ N/2 and distinctness modulo N.
    pub fn new(modes: Vec<i32>, n_modes: usize) -> Result<Self> {
        let half = (n_modes / 2) as i32;
        if modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModeSet(format!("{modes:?} is not strictly ascending")));
        }
        if let Some(l) = modes.iter().find(|l| l.abs() > half) {
            return Err(Error::InvalidModeSet(format!("|{l}| exceeds N/2 = {half}")));
        }
        let n = n_modes as i32;
        let mut residues: Vec<i32> = modes.iter().map(|l| l.rem_euclid(n)).collect();
        residues.sort_unstable();
        if residues.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModeSet(format!("{modes:?} aliases modulo N = {n}")));
        }
        Ok(Self(modes))
    }

    fn from_sorted(modes: Vec<i32>) -> Self {
        debug_assert!(modes.windows(2).all(|w| w[0] < w[1]));
        Self(modes)
    }

    pub fn modes(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, i32> {
        self.0.iter()
    }

    pub fn contains(&self, mode: i32) -> bool {
        self.0.binary_search(&mode).is_ok()
    }
}

impl std::ops::Deref for ModeSet {
    type Target = [i32];
    fn deref(&self) -> &[i32] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopScheme {
    ImMh,
    ImDsmh,
}

/// Per-hop activated sets and, for IM-DSMH, the second-hop modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopPattern {
    pub per_hop_sets: Vec<ModeSet>,
    pub second_hop_modes: Option<Vec<i32>>,
}

impl HopPattern {
    pub fn hops(&self) -> usize {
        self.per_hop_sets.len()
    }

    pub fn second_mode(&self, hop: usize) -> Option<i32> {
        self.second_hop_modes.as_ref().map(|m| m[hop])
    }
}

/// Bit accounting for one symbol duration (U hops).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitBudget {
    pub scheme: HopScheme,
    /// η_s = I·log2 M.
    pub signal_bits: u32,
    /// η_x = U·log2 K for the scheme's K.
    pub index_bits: u32,
    /// η_s + η_x.
    pub total_bits: u32,
    /// IM-MH total η0.
    pub eta0: u32,
    /// IM-DSMH total η1, absent when I = N.
    pub eta1: Option<u32>,
    pub k1: u128,
    pub k2: Option<u128>,
    /// η1 − η0 with the floors applied.
    pub delta_eta_exact: Option<i64>,
    /// U·log2(N − I), the floor-free approximation of η1 − η0.
    pub delta_eta_approx: Option<f64>,
}

/// The N modes {−N/2+1, …, N/2}, ascending.
pub fn mode_universe(n_modes: usize) -> Result<ModeSet> {
    if n_modes < 2 || !n_modes.is_multiple_of(2) {
        return Err(Error::InvalidConfig {
            field: "n",
            reason: format!("mode universe needs an even N >= 2, got {n_modes}"),
        });
    }
    let half = (n_modes / 2) as i32;
    Ok(ModeSet::from_sorted((-half + 1..=half).collect()))
}

/// Exact C(n, k) with overflow detection.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 1..=k as u128 {
        // acc * m is divisible by j; split j between the two factors first
        let m = n as u128 - k as u128 + j;
        let g = gcd(acc, j);
        acc = (acc / g)
            .checked_mul(m / (j / g))
            .ok_or(Error::Overflow { n, k })?;
    }
    Ok(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn floor_pow2(x: u128) -> u128 {
    if x == 0 {
        0
    } else {
        1u128 << (127 - x.leading_zeros())
    }
}

pub(crate) fn log2_exact(k: u128) -> u32 {
    debug_assert!(k.is_power_of_two());
    k.trailing_zeros()
}

/// K1 = 2^⌊log2 C(N, I)⌋.
pub fn k1_combinations(n_modes: usize, active: usize) -> Result<u128> {
    if active == 0 || active > n_modes {
        return Err(Error::InvalidConfig {
            field: "i",
            reason: format!("need 1 <= I <= N, got I = {active}, N = {n_modes}"),
        });
    }
    Ok(floor_pow2(binomial(n_modes as u64, active as u64)?))
}

/// K2 = 2^⌊log2(N·C(N−1, I))⌋.
pub fn k2_combinations(n_modes: usize, active: usize) -> Result<u128> {
    if active == 0 || active + 1 > n_modes {
        return Err(Error::InvalidConfig {
            field: "i",
            reason: format!("IM-DSMH needs 1 <= I <= N - 1, got I = {active}, N = {n_modes}"),
        });
    }
    let c = binomial(n_modes as u64 - 1, active as u64)?;
    let count = c
        .checked_mul(n_modes as u128)
        .ok_or(Error::Overflow { n: n_modes as u64 - 1, k: active as u64 })?;
    Ok(floor_pow2(count))
}

/// Lexicographic unranking of a `k`-subset of `universe` (which must be
/// ascending). `rank` must be below C(|universe|, k).
pub fn unrank_subset(universe: &[i32], k: usize, rank: u128) -> Result<Vec<i32>> {
    let n = universe.len();
    let total = binomial(n as u64, k as u64)?;
    if rank >= total {
        return Err(Error::RankOutOfRange { rank, limit: total });
    }
    let mut out = Vec::with_capacity(k);
    let mut rank = rank;
    let mut next = 0usize;
    for slot in 0..k {
        let remaining = (k - slot - 1) as u64;
        let mut c = next;
        loop {
            let block = binomial((n - c - 1) as u64, remaining)?;
            if rank < block {
                break;
            }
            rank -= block;
            c += 1;
        }
        out.push(universe[c]);
        next = c + 1;
    }
    Ok(out)
}

/// Inverse of [`unrank_subset`].
pub fn rank_subset(universe: &[i32], subset: &[i32]) -> Result<u128> {
    let n = universe.len();
    let k = subset.len();
    let mut rank = 0u128;
    let mut next = 0usize;
    for (slot, mode) in subset.iter().enumerate() {
        let pos = universe
            .iter()
            .position(|l| l == mode)
            .filter(|&p| p >= next)
            .ok_or_else(|| Error::InvalidModeSet(format!("{subset:?} not an ascending subset")))?;
        let remaining = (k - slot - 1) as u64;
        for c in next..pos {
            rank += binomial((n - c - 1) as u64, remaining)?;
        }
        next = pos + 1;
    }
    Ok(rank)
}

/// The `rank`-th I-subset of the mode universe, restricted to the first K1.
pub fn unrank_combination(n_modes: usize, active: usize, rank: u128) -> Result<ModeSet> {
    let k1 = k1_combinations(n_modes, active)?;
    if rank >= k1 {
        return Err(Error::RankOutOfRange { rank, limit: k1 });
    }
    let universe = mode_universe(n_modes)?;
    Ok(ModeSet::from_sorted(unrank_subset(&universe, active, rank)?))
}

pub fn rank_combination(n_modes: usize, set: &ModeSet) -> Result<u128> {
    let universe = mode_universe(n_modes)?;
    rank_subset(&universe, set)
}

/// Maps an IM-DSMH index value in [0, K2) to (activated set, second mode).
///
/// The index is split mixed-radix: the low digit picks the selector-B mode,
/// the high digit the I-subset of the remaining N − 1 modes. With mode zero
/// excluded from selector B only N − 1 second modes exist, and the subset
/// digit wraps when (N − 1)·C(N − 1, I) < K2.
pub fn unrank_dsmh(
    n_modes: usize,
    active: usize,
    index: u128,
    exclude_zero: bool,
) -> Result<(ModeSet, i32)> {
    let k2 = k2_combinations(n_modes, active)?;
    if index >= k2 {
        return Err(Error::RankOutOfRange { rank: index, limit: k2 });
    }
    let universe = mode_universe(n_modes)?;
    let selector_b: Vec<i32> =
        universe.iter().copied().filter(|&l| !(exclude_zero && l == 0)).collect();
    let radix = selector_b.len() as u128;
    let second = selector_b[(index % radix) as usize];
    let rest: Vec<i32> = universe.iter().copied().filter(|&l| l != second).collect();
    let subsets = binomial(rest.len() as u64, active as u64)?;
    let sub_rank = (index / radix) % subsets;
    Ok((ModeSet::from_sorted(unrank_subset(&rest, active, sub_rank)?), second))
}

/// Source of key bits shared by both link ends.
pub trait KeyStream {
    /// Next `n` bits (n ≤ 64), most significant first.
    fn take_bits(&mut self, n: u32) -> Result<u64>;
}

/// Finite key from an explicit bit vector.
#[derive(Debug, Clone)]
pub struct FixedKey {
    bits: Vec<bool>,
    pos: usize,
}

impl FixedKey {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl KeyStream for FixedKey {
    fn take_bits(&mut self, n: u32) -> Result<u64> {
        let n = n as usize;
        if self.remaining() < n {
            return Err(Error::KeyExhausted { needed: n as u32, available: self.remaining() });
        }
        let v = self.bits[self.pos..self.pos + n]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        self.pos += n;
        Ok(v)
    }
}

/// Unbounded key stream from a seeded ChaCha generator.
#[derive(Debug, Clone)]
pub struct PrngKey {
    rng: ChaCha8Rng,
}

impl PrngKey {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl KeyStream for PrngKey {
    fn take_bits(&mut self, n: u32) -> Result<u64> {
        if n == 0 {
            return Ok(0);
        }
        let v = self.rng.next_u64();
        Ok(if n >= 64 { v } else { v >> (64 - n) })
    }
}

fn index_bits_per_hop(k: u128) -> Result<u32> {
    let bits = log2_exact(k);
    if bits > 64 {
        return Err(Error::InvalidConfig {
            field: "n",
            reason: format!("{bits} index bits per hop exceed the 64-bit key window"),
        });
    }
    Ok(bits)
}

/// Draws one U-hop pattern from the key stream.
pub fn generate_pattern(
    cfg: &SystemConfig,
    key: &mut dyn KeyStream,
    scheme: HopScheme,
) -> Result<HopPattern> {
    let (n, i) = (cfg.n_modes, cfg.active);
    match scheme {
        HopScheme::ImMh => {
            let bits = index_bits_per_hop(k1_combinations(n, i)?)?;
            let sets = (0..cfg.hops)
                .map(|_| unrank_combination(n, i, key.take_bits(bits)? as u128))
                .collect::<Result<Vec<_>>>()?;
            Ok(HopPattern { per_hop_sets: sets, second_hop_modes: None })
        }
        HopScheme::ImDsmh => {
            let bits = index_bits_per_hop(k2_combinations(n, i)?)?;
            let mut sets = Vec::with_capacity(cfg.hops);
            let mut seconds = Vec::with_capacity(cfg.hops);
            for _ in 0..cfg.hops {
                let index = key.take_bits(bits)? as u128;
                let (set, second) = unrank_dsmh(n, i, index, cfg.exclude_zero_second_mode)?;
                sets.push(set);
                seconds.push(second);
            }
            Ok(HopPattern { per_hop_sets: sets, second_hop_modes: Some(seconds) })
        }
    }
}

pub fn bit_budget(cfg: &SystemConfig, scheme: HopScheme) -> Result<BitBudget> {
    let (n, i, u) = (cfg.n_modes, cfg.active, cfg.hops as u32);
    let signal_bits = i as u32 * cfg.bits_per_symbol();
    let k1 = k1_combinations(n, i)?;
    let k2 = if i < n { Some(k2_combinations(n, i)?) } else { None };
    let eta0 = signal_bits + u * log2_exact(k1);
    let eta1 = k2.map(|k| signal_bits + u * log2_exact(k));
    let index_bits = match scheme {
        HopScheme::ImMh => u * log2_exact(k1),
        HopScheme::ImDsmh => {
            u * log2_exact(k2.ok_or_else(|| Error::InvalidConfig {
                field: "i",
                reason: format!("IM-DSMH needs I <= N - 1, got I = N = {n}"),
            })?)
        }
    };
    Ok(BitBudget {
        scheme,
        signal_bits,
        index_bits,
        total_bits: signal_bits + index_bits,
        eta0,
        eta1,
        k1,
        k2,
        delta_eta_exact: eta1.map(|e1| e1 as i64 - eta0 as i64),
        delta_eta_approx: (i < n).then(|| u as f64 * ((n - i) as f64).log2()),
    })
}
