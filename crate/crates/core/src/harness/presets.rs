use std::fmt;
use std::str::FromStr;

use super::config::{Arithmetic, SimConfig};
use crate::channel::KroneckerSpec;
use crate::detect::DetectorKind;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig14"];

/// Run length of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PresetScale {
    /// A few hundred frames per point; smoke runs.
    Quick,
    /// At least 10^5 information bits per point.
    #[default]
    Desk,
    /// At least 10^7 information bits per point.
    Full,
}

impl PresetScale {
    fn apply(self, cfg: &mut SimConfig) {
        let per_frame = (cfg.n_t * cfg.bits_per_frame) as u64;
        let min_bits = match self {
            PresetScale::Quick => 0,
            PresetScale::Desk => 100_000,
            PresetScale::Full => 10_000_000,
        };
        cfg.min_bits = min_bits;
        cfg.frames = match self {
            PresetScale::Quick => 200,
            _ => (min_bits.div_ceil(per_frame) * 20).max(1000),
        };
    }
}

impl fmt::Display for PresetScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetScale::Quick => "quick",
            PresetScale::Desk => "desk",
            PresetScale::Full => "full",
        })
    }
}

impl FromStr for PresetScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(PresetScale::Quick),
            "desk" => Ok(PresetScale::Desk),
            "full" => Ok(PresetScale::Full),
            other => Err(Error::Config(format!("unknown scale `{other}`"))),
        }
    }
}

fn snr_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn curve(n_r: usize, n_t: usize, det: DetectorKind, k: usize, snr: &[f64]) -> SimConfig {
    let mut c = SimConfig::new(n_r, n_t, det, k);
    c.snr_db = snr.to_vec();
    c.seed = 2017;
    c
}

/// Curves reproducing one figure. Neumann baselines use `K + 2` terms for
/// GS with `K` sweeps, which matches their multiplication budget.
pub fn preset(name: &str, scale: PresetScale) -> Result<Vec<SimConfig>> {
    use DetectorKind::*;
    let mut curves = match name {
        "fig1" | "fig2" => {
            let n_r = if name == "fig1" { 128 } else { 64 };
            let snr = if name == "fig1" {
                snr_range(-2.0, 8.0, 1.0)
            } else {
                snr_range(2.0, 16.0, 2.0)
            };
            vec![
                curve(n_r, 16, Igs, 1, &snr),
                curve(n_r, 16, Igs, 2, &snr),
                curve(n_r, 16, Nse, 3, &snr),
                curve(n_r, 16, Nse, 4, &snr),
                curve(n_r, 16, MmseExact, 0, &snr),
            ]
        }
        "fig3" => {
            let snr = snr_range(-2.0, 13.0, 1.0);
            vec![
                curve(64, 8, Igs, 1, &snr),
                curve(64, 8, GsZero, 1, &snr),
                curve(64, 8, GsZero, 2, &snr),
                curve(64, 8, GsDiag, 1, &snr),
                curve(64, 8, GsDiag, 2, &snr),
                curve(64, 8, MmseExact, 0, &snr),
            ]
        }
        "fig4" => {
            let snr = snr_range(0.0, 20.0, 2.0);
            let kr = KroneckerSpec::new(0.4, 0.5)?;
            let mut v = vec![
                curve(128, 16, Igs, 1, &snr),
                curve(128, 16, Igs, 2, &snr),
                curve(128, 16, Nse, 3, &snr),
                curve(128, 16, Nse, 4, &snr),
                curve(128, 16, MmseExact, 0, &snr),
            ];
            for c in &mut v {
                c.kronecker = Some(kr);
            }
            v
        }
        "fig14" => {
            let mut v = Vec::new();
            for (n_r, snr) in [(128, snr_range(-2.0, 2.0, 0.5)), (64, snr_range(1.0, 5.0, 0.5))] {
                for arith in [Arithmetic::Float, Arithmetic::Fixed] {
                    let mut c = curve(n_r, 8, Igs, 1, &snr);
                    c.arithmetic = arith;
                    v.push(c);
                }
            }
            v
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    for c in &mut curves {
        scale.apply(c);
        c.validate()?;
    }
    Ok(curves)
}
