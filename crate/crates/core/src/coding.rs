//! Rate-1/2 feed-forward convolutional code with zero-tail termination and a
//! soft-input Viterbi decoder.
//!
//! LLRs use the `ln(Pr[x=1] / Pr[x=0])` orientation, the same one the
//! detectors emit. The decoder maximizes `sum((2c - 1) * llr)` over the
//! trellis and traces back from the all-zero state.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::channel::rng_from_seed;
use crate::error::{Error, Result};

/// LLR magnitudes are clipped here so saturated inputs stay finite.
const LLR_CLIP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvCode {
    constraint_length: usize,
    generators: [u32; 2],
}

impl ConvCode {
    /// Generators are given as integers whose bit `K-1` is the tap on the
    /// current input (the usual octal notation read MSB first).
    pub fn new(constraint_length: usize, g0: u32, g1: u32) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::InvalidCode(format!(
                "constraint length {constraint_length} outside 2..=16"
            )));
        }
        let lead = 1u32 << (constraint_length - 1);
        for g in [g0, g1] {
            if g >= lead << 1 || g & lead == 0 {
                return Err(Error::InvalidCode(format!(
                    "generator {g:o} is not a delay-free polynomial of degree {}",
                    constraint_length - 1
                )));
            }
        }
        Ok(ConvCode {
            constraint_length,
            generators: [g0, g1],
        })
    }

    /// Constraint length 7, generators (133, 171) octal.
    pub fn standard() -> Self {
        ConvCode {
            constraint_length: 7,
            generators: [0o133, 0o171],
        }
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn generators(&self) -> [u32; 2] {
        self.generators
    }

    fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    fn num_states(&self) -> usize {
        1 << self.memory()
    }

    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.memory())
    }

    /// Output pair for shift register contents `reg` (bit `K-1` = newest).
    #[inline]
    fn outputs(&self, reg: u32) -> [u8; 2] {
        [
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        ]
    }

    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        let m = self.memory();
        let mut state = 0u32;
        let mut out = Vec::with_capacity(self.coded_len(info.len()));
        for &u in info.iter().chain(std::iter::repeat_n(&0u8, m)) {
            let reg = ((u as u32 & 1) << m) | state;
            out.extend_from_slice(&self.outputs(reg));
            state = reg >> 1;
        }
        out
    }

    /// Maximum-metric information sequence for a terminated codeword.
    pub fn viterbi_decode_soft(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        let m = self.memory();
        if !llrs.len().is_multiple_of(2) || llrs.len() < 2 * m {
            return Err(Error::MalformedCodeword { len: llrs.len() });
        }
        let steps = llrs.len() / 2;
        let info_len = steps - m;
        let states = self.num_states();
        // next state = (input << (m-1)) | (state >> 1)
        let low_mask = (1u32 << (m - 1)) - 1;
        // signed output per (state, input): +1 for a 1, -1 for a 0
        let mut sign = vec![[[0.0f64; 2]; 2]; states];
        for (s, entry) in sign.iter_mut().enumerate() {
            for u in 0..2u32 {
                let o = self.outputs((u << m) | s as u32);
                entry[u as usize] = [2.0 * o[0] as f64 - 1.0, 2.0 * o[1] as f64 - 1.0];
            }
        }

        let words = states.div_ceil(64);
        let mut decisions = vec![0u64; steps * words];
        let mut metric = vec![f64::NEG_INFINITY; states];
        metric[0] = 0.0;
        let mut next = vec![f64::NEG_INFINITY; states];
        for t in 0..steps {
            let l0 = llrs[2 * t].clamp(-LLR_CLIP, LLR_CLIP);
            let l1 = llrs[2 * t + 1].clamp(-LLR_CLIP, LLR_CLIP);
            let dec = &mut decisions[t * words..(t + 1) * words];
            for (ns, slot) in next.iter_mut().enumerate() {
                let u = ns >> (m - 1);
                let base = ((ns as u32) & low_mask) << 1;
                let mut best = f64::NEG_INFINITY;
                let mut pick = 0usize;
                for b in 0..2u32 {
                    let s = (base | b) as usize;
                    let sg = sign[s][u];
                    let cand = metric[s] + sg[0] * l0 + sg[1] * l1;
                    if cand > best {
                        best = cand;
                        pick = b as usize;
                    }
                }
                *slot = best;
                if pick == 1 {
                    dec[ns / 64] |= 1 << (ns % 64);
                }
            }
            std::mem::swap(&mut metric, &mut next);
        }

        let mut bits = vec![0u8; steps];
        let mut ns = 0usize;
        for t in (0..steps).rev() {
            bits[t] = (ns >> (m - 1)) as u8;
            let b = (decisions[t * words + ns / 64] >> (ns % 64)) & 1;
            ns = ((((ns as u32) & low_mask) << 1) | b as u32) as usize;
        }
        bits.truncate(info_len);
        Ok(bits)
    }
}

impl Default for ConvCode {
    fn default() -> Self {
        Self::standard()
    }
}

/// Channel code selection: uncoded transmission or a rate-1/2 convolutional code.
///
/// Textual form is `uncoded`, `cc` (the standard K=7 code) or
/// `ccK_G0_G1` with octal generators, e.g. `cc7_133_171`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CodeId {
    Uncoded,
    Conv(ConvCode),
}

impl Default for CodeId {
    fn default() -> Self {
        CodeId::Conv(ConvCode::standard())
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeId::Uncoded => f.write_str("uncoded"),
            CodeId::Conv(c) => write!(
                f,
                "cc{}_{:o}_{:o}",
                c.constraint_length, c.generators[0], c.generators[1]
            ),
        }
    }
}

impl FromStr for CodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "uncoded" | "none" => return Ok(CodeId::Uncoded),
            "cc" | "conv" => return Ok(CodeId::default()),
            _ => {}
        }
        let bad = || Error::InvalidCode(format!("cannot parse code `{s}`"));
        let rest = s.strip_prefix("cc").ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let k: usize = parts[0].parse().map_err(|_| bad())?;
        let g0 = u32::from_str_radix(parts[1], 8).map_err(|_| bad())?;
        let g1 = u32::from_str_radix(parts[2], 8).map_err(|_| bad())?;
        Ok(CodeId::Conv(ConvCode::new(k, g0, g1)?))
    }
}

impl TryFrom<String> for CodeId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CodeId> for String {
    fn from(c: CodeId) -> String {
        c.to_string()
    }
}

/// Fixed pseudo-random block interleaver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    /// Seed of the permutation shared by every frame in the harness.
    pub const DEFAULT_SEED: u64 = 0x1A7E_41EA;

    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut rng_from_seed(seed));
        Interleaver { perm }
    }

    pub fn identity(len: usize) -> Self {
        Interleaver {
            perm: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = x[perm[i]]`.
    pub fn interleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.perm.len());
        self.perm.iter().map(|&p| x[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.perm.len());
        let mut out = vec![T::default(); y.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = y[i];
        }
        out
    }
}
