//! Gray-labelled square QAM and the max-log bit metric.
//!
//! A `B`-bit label is split in two halves: the first `B/2` bits select the
//! in-phase level, the last `B/2` the quadrature level. Each axis is a
//! binary-reflected Gray coded PAM over the odd integers `-(L-1)..=(L-1)`,
//! scaled so the average symbol energy is one.
//!
//! The bit metric follows the LLR orientation `ln(Pr[x=1] / Pr[x=0])`:
//!
//! ```text
//! lambda_b(z) = min_{a : bit b = 0} |z - a|^2 - min_{a : bit b = 1} |z - a|^2
//! ```
//!
//! so it is positive when the nearest point carries a 1. For an MMSE output
//! the detector scales it by the post-equalization SINR `rho = mu / (1 - mu)`,
//! which is `mu^2 / nu^2` under the MMSE identity `nu^2 = mu (1 - mu)` for the
//! noise-plus-interference variance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub fn constellation(self) -> Constellation {
        Constellation::new(self)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            other => Err(Error::Config(format!("unknown modulation `{other}`"))),
        }
    }
}

impl TryFrom<String> for Modulation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Modulation> for String {
    fn from(m: Modulation) -> String {
        m.to_string()
    }
}

#[inline]
fn gray(m: usize) -> usize {
    m ^ (m >> 1)
}

/// Square Gray-labelled constellation with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    bits_per_symbol: usize,
    axis_bits: usize,
    /// Normalization: points are `scale * (odd integer pair)`.
    scale: f64,
    /// Points indexed by their label.
    points: Vec<C64>,
    /// Axis amplitude (odd integer) indexed by axis label.
    axis_level: Vec<f64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let bits_per_symbol = modulation.bits_per_symbol();
        let axis_bits = bits_per_symbol / 2;
        let levels = 1usize << axis_bits;
        let mut axis_level = vec![0.0; levels];
        for m in 0..levels {
            axis_level[gray(m)] = (2 * m) as f64 - (levels - 1) as f64;
        }
        // mean of the odd squares per axis is (L^2 - 1) / 3
        let energy = 2.0 * ((levels * levels - 1) as f64) / 3.0;
        let scale = 1.0 / energy.sqrt();
        let mask = levels - 1;
        let points = (0..1usize << bits_per_symbol)
            .map(|label| {
                C64::new(
                    scale * axis_level[label >> axis_bits],
                    scale * axis_level[label & mask],
                )
            })
            .collect();
        Constellation {
            modulation,
            bits_per_symbol,
            axis_bits,
            scale,
            points,
            axis_level,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Bit `b` (0 = first transmitted) of `label`.
    #[inline]
    pub fn label_bit(&self, label: usize, b: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - b)) & 1) as u8
    }

    pub fn label_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Maps each run of `B` bits to a constellation point.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks_exact(self.bits_per_symbol)
            .map(|c| self.points[self.label_of(c)])
            .collect())
    }

    /// Hard decision: bits of the nearest constellation point.
    pub fn demap_hard(&self, z: C64) -> Vec<u8> {
        let label = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| (z - a.1).norm_sqr().total_cmp(&(z - b.1).norm_sqr()))
            .map(|(l, _)| l)
            .unwrap_or(0);
        (0..self.bits_per_symbol).map(|b| self.label_bit(label, b)).collect()
    }

    fn check_bit(&self, b: usize) -> Result<()> {
        if b < self.bits_per_symbol {
            Ok(())
        } else {
            Err(Error::BitIndexOutOfRange {
                bit: b,
                bits_per_symbol: self.bits_per_symbol,
            })
        }
    }

    /// Max-log bit metric by exhaustive search over the labelled subsets.
    pub fn lambda_exhaustive(&self, z: C64, b: usize) -> Result<f64> {
        self.check_bit(b)?;
        let mut best = [f64::INFINITY; 2];
        for (label, a) in self.points.iter().enumerate() {
            let d = (z - a).norm_sqr();
            let slot = &mut best[self.label_bit(label, b) as usize];
            if d < *slot {
                *slot = d;
            }
        }
        Ok(best[0] - best[1])
    }

    /// Max-log bit metric through the per-axis piecewise-linear form.
    pub fn lambda_b(&self, z: C64, b: usize) -> Result<f64> {
        self.check_bit(b)?;
        let mut out = [0.0; 6];
        self.lambdas(z, &mut out[..self.bits_per_symbol]);
        Ok(out[b])
    }

    /// All `B` bit metrics of one symbol.
    ///
    /// Bits of a square Gray constellation separate into in-phase and
    /// quadrature groups, each a function of one coordinate only. Within an
    /// axis the leading bit splits negative from positive levels, and the
    /// remaining bits are a Gray-labelled PAM of half the size in the folded
    /// coordinate `L/2 - |x|`.
    pub fn lambdas(&self, z: C64, out: &mut [f64]) {
        assert_eq!(out.len(), self.bits_per_symbol);
        let inv = 1.0 / self.scale;
        let (re, im) = out.split_at_mut(self.axis_bits);
        axis_metrics(z.re * inv, self.axis_bits, re);
        axis_metrics(z.im * inv, self.axis_bits, im);
        let s2 = self.scale * self.scale;
        for v in out.iter_mut() {
            *v *= s2;
        }
    }

    /// Axis amplitude (odd integer) of an axis label; exposed for tests.
    pub fn axis_level(&self, axis_label: usize) -> f64 {
        self.axis_level[axis_label]
    }
}

#[inline]
fn nearest_odd(x: f64) -> f64 {
    2.0 * (0.5 * x).floor() + 1.0
}

/// Unnormalized per-axis metrics: levels at the odd integers of a
/// `2^bits`-PAM, `x` in the same units.
fn axis_metrics(x: f64, bits: usize, out: &mut [f64]) {
    let mut half = (1usize << bits) as f64 / 2.0;
    let mut x = x;
    for slot in out.iter_mut().take(bits) {
        let top = 2.0 * half - 1.0;
        // nearest level carrying a 0 (negative half) and a 1 (positive half)
        let (r0, r1) = if x >= 0.0 {
            (-1.0, nearest_odd(x).clamp(1.0, top))
        } else {
            (nearest_odd(x).clamp(-top, -1.0), 1.0)
        };
        // (x - r0)^2 - (x - r1)^2
        *slot = (r1 - r0) * (2.0 * x - r0 - r1);
        x = half - x.abs();
        half *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    #[test]
    fn unit_energy() {
        for m in ALL {
            let c = m.constellation();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.points().len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qpsk_points_unit_magnitude() {
        let c = Modulation::Qpsk.constellation();
        for p in c.map(&[0, 0, 0, 1, 1, 0, 1, 1]).unwrap() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn qam64_point_set() {
        let c = Modulation::Qam64.constellation();
        let s = 42f64.sqrt();
        let mut expected: Vec<(i64, i64)> = Vec::new();
        for a in [-7, -5, -3, -1, 1, 3, 5, 7] {
            for b in [-7, -5, -3, -1, 1, 3, 5, 7] {
                expected.push((a, b));
            }
        }
        let mut got: Vec<(i64, i64)> = c
            .points()
            .iter()
            .map(|p| ((p.re * s).round() as i64, (p.im * s).round() as i64))
            .collect();
        for p in c.points() {
            assert!((p.re * s - (p.re * s).round()).abs() < 1e-12);
        }
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn gray_adjacency() {
        for m in ALL {
            let c = m.constellation();
            let ab = c.bits_per_symbol() / 2;
            let levels = 1usize << ab;
            // sort axis labels by amplitude; neighbours differ in one bit
            let mut labels: Vec<usize> = (0..levels).collect();
            labels.sort_by(|a, b| c.axis_level(*a).total_cmp(&c.axis_level(*b)));
            for w in labels.windows(2) {
                assert_eq!((w[0] ^ w[1]).count_ones(), 1);
            }
        }
    }

    #[test]
    fn hard_round_trip_all_labels() {
        for m in ALL {
            let c = m.constellation();
            let b = c.bits_per_symbol();
            for label in 0..1usize << b {
                let bits: Vec<u8> = (0..b).map(|k| c.label_bit(label, k)).collect();
                let sym = c.map(&bits).unwrap();
                assert_eq!(c.demap_hard(sym[0]), bits);
            }
        }
    }

    #[test]
    fn map_rejects_ragged_input() {
        let c = Modulation::Qam16.constellation();
        assert!(matches!(c.map(&[0, 1, 1]), Err(Error::BitLength { .. })));
    }

    #[test]
    fn lambda_sign_on_points() {
        let c = Modulation::Qpsk.constellation();
        for label in 0..4 {
            let z = c.points()[label];
            for b in 0..2 {
                let v = c.lambda_b(z, b).unwrap();
                if c.label_bit(label, b) == 1 {
                    assert!(v > 0.0);
                } else {
                    assert!(v < 0.0);
                }
            }
        }
    }

    #[test]
    fn lambda_zero_on_boundary() {
        let c = Modulation::Qpsk.constellation();
        // real axis bit: z on the imaginary axis is equidistant
        assert_eq!(c.lambda_b(C64::new(0.0, 0.3), 0).unwrap(), 0.0);
        let c64 = Modulation::Qam64.constellation();
        let s = 1.0 / 42f64.sqrt();
        // x = 4 (in level units) is the decision boundary of the middle bit
        assert!(c64.lambda_b(C64::new(4.0 * s, 0.0), 1).unwrap().abs() < 1e-15);
        assert!(c64.lambda_exhaustive(C64::new(4.0 * s, 0.0), 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lambda_bit_index_checked() {
        let c = Modulation::Qam16.constellation();
        assert!(c.lambda_b(C64::new(0.0, 0.0), 4).is_err());
        assert!(c.lambda_exhaustive(C64::new(0.0, 0.0), 7).is_err());
    }

    #[test]
    fn fast_path_matches_exhaustive_64qam() {
        let c = Modulation::Qam64.constellation();
        let mut rng = crate::channel::rng_from_seed(4);
        use rand::Rng;
        for _ in 0..10_000 {
            let z = C64::new(rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6));
            for b in 0..6 {
                let fast = c.lambda_b(z, b).unwrap();
                let slow = c.lambda_exhaustive(z, b).unwrap();
                assert!((fast - slow).abs() < 1e-12, "{z} {b}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn axis_separability() {
        let c = Modulation::Qam16.constellation();
        let a = c.lambda_b(C64::new(0.3, -0.9), 0).unwrap();
        let b = c.lambda_b(C64::new(0.3, 0.7), 0).unwrap();
        assert_eq!(a, b);
        let a = c.lambda_b(C64::new(-1.1, 0.2), 3).unwrap();
        let b = c.lambda_b(C64::new(0.4, 0.2), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_and_display() {
        for m in ALL {
            assert_eq!(m.to_string().parse::<Modulation>().unwrap(), m);
        }
        assert!("8psk".parse::<Modulation>().is_err());
    }
}
