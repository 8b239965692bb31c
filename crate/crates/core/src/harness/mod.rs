//! Monte Carlo BER/FER engine.
//!
//! A frame carries one codeword per user. Each user encodes
//! `bits_per_frame` information bits with the zero-tail convolutional code,
//! interleaves them with a fixed pseudo-random permutation, pads to a whole
//! number of symbols and maps them. The frame's symbol vectors share one
//! channel realization (block fading); a new channel is drawn per frame.
//!
//! Frame `i` draws all of its randomness from `trial_seed(seed, i)`, and the
//! draws do not depend on the SNR, so points and detectors are compared on
//! identical realizations and results do not depend on the worker count.

mod config;
mod output;
mod presets;
mod runner;
mod stats;

pub use config::{Arithmetic, SimConfig, DEFAULT_BITS_PER_FRAME, DEFAULT_TARGET_BIT_ERRORS};
pub use output::{write_csv, write_csv_to, write_gnuplot, CsvRow};
pub use presets::{preset, PresetScale, PRESET_NAMES};
pub use runner::{cost_report, run_point, run_sweep, Execution, BATCH_FRAMES};
pub use stats::{snr_at_ber, wilson_interval};

use crate::coding::CodeId;
use crate::detect::DetectorKind;
use crate::hwmodel::CostReport;
use crate::modem::Modulation;

/// Result of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub detector: DetectorKind,
    pub k: usize,
    pub n_r: usize,
    pub n_t: usize,
    pub modulation: Modulation,
    pub code: CodeId,
    pub zeta_r: f64,
    pub zeta_t: f64,
    pub arithmetic: Arithmetic,
    pub snr_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Fixed-point saturation events (0 for float runs).
    pub saturations: u64,
    pub cost: CostReport,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    /// 95% Wilson interval of the BER.
    pub fn ber_ci95(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits, 1.96)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
