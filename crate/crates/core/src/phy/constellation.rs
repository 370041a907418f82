use num_complex::Complex64;

use crate::config::Modulation;
use crate::error::{Error, Result};

/// Gray-labelled constellation with unit average energy.
///
/// `points[label]` is the point carrying the bit pattern `label` (MSB first).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
    bits: u32,
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

impl Constellation {
    pub fn new(modulation: Modulation, order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() || order > 1024 {
            return Err(Error::UnsupportedConstellation(order));
        }
        let bits = order.trailing_zeros();
        let mut points = vec![Complex64::new(0.0, 0.0); order];
        match modulation {
            Modulation::Psk => {
                for k in 0..order {
                    let phase = std::f64::consts::TAU * k as f64 / order as f64;
                    points[gray(k)] = Complex64::from_polar(1.0, phase);
                }
                // BPSK: label 0 -> +1, label 1 -> -1 exactly.
                if order == 2 {
                    points = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
                }
            }
            Modulation::Qam => {
                if !bits.is_multiple_of(2) {
                    return Err(Error::UnsupportedConstellation(order));
                }
                let side = 1usize << (bits / 2);
                let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
                let level = |k: usize| (2.0 * k as f64 - (side as f64 - 1.0)) / scale;
                for ki in 0..side {
                    for kq in 0..side {
                        let label = (gray(ki) << (bits / 2)) | gray(kq);
                        points[label] = Complex64::new(level(ki), level(kq));
                    }
                }
            }
        }
        Ok(Self { modulation, points, bits })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    pub fn is_constant_modulus(&self) -> bool {
        self.modulation == Modulation::Psk || self.points.len() == 4
    }

    /// Label of the nearest point.
    pub fn slice(&self, y: Complex64) -> u32 {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best as u32
    }

    /// Number of differing bits between two labels.
    pub fn bit_distance(a: u32, b: u32) -> u32 {
        (a ^ b).count_ones()
    }
}

/// One codeword's I symbols, reused on every hop.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    pub labels: Vec<u32>,
    pub symbols: Vec<Complex64>,
}

impl SymbolVector {
    pub fn from_labels(labels: Vec<u32>, c: &Constellation) -> Self {
        let symbols = labels.iter().map(|&l| c.point(l)).collect();
        Self { labels, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Signal-bit errors against `other`.
    pub fn bit_errors(&self, other: &SymbolVector) -> u32 {
        self.labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| Constellation::bit_distance(a, b))
            .sum()
    }
}

/// Maps a bit string (MSB first per symbol) onto constellation points.
pub fn modulate(bits: &[bool], c: &Constellation) -> Result<SymbolVector> {
    let b = c.bits_per_symbol() as usize;
    if bits.is_empty() || !bits.len().is_multiple_of(b) {
        return Err(Error::Dimension(format!(
            "{} bits is not a positive multiple of {b} bits per symbol",
            bits.len()
        )));
    }
    let labels = bits
        .chunks(b)
        .map(|chunk| chunk.iter().fold(0u32, |acc, &bit| (acc << 1) | bit as u32))
        .collect();
    Ok(SymbolVector::from_labels(labels, c))
}

/// Inverse of [`modulate`]: hard-decides each symbol and unpacks its label.
pub fn demap(symbols: &[Complex64], c: &Constellation) -> Vec<bool> {
    let b = c.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * b as usize);
    for &y in symbols {
        let label = c.slice(y);
        for k in (0..b).rev() {
            out.push((label >> k) & 1 == 1);
        }
    }
    out
}
