use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::KroneckerSpec;
use crate::coding::CodeId;
use crate::detect::DetectorKind;
use crate::error::{Error, Result};
use crate::fxp::{FxpConfig, FxpOverrides};
use crate::hwmodel::Schedule;
use crate::modem::Modulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Float,
    Fixed,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arithmetic::Float => "float",
            Arithmetic::Fixed => "fixed",
        })
    }
}

impl FromStr for Arithmetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(Arithmetic::Float),
            "fixed" => Ok(Arithmetic::Fixed),
            other => Err(Error::Config(format!("unknown arithmetic `{other}`"))),
        }
    }
}

/// Information bits per user per frame. With the K=7 code this gives 384
/// coded bits, a whole number of symbols for QPSK, 16-QAM and 64-QAM.
pub const DEFAULT_BITS_PER_FRAME: usize = 186;
pub const DEFAULT_TARGET_BIT_ERRORS: u64 = 200;

fn default_bits_per_frame() -> usize {
    DEFAULT_BITS_PER_FRAME
}

fn default_target() -> u64 {
    DEFAULT_TARGET_BIT_ERRORS
}

fn default_modulation() -> Modulation {
    Modulation::Qam64
}

/// One Monte Carlo experiment: a detector on a system, swept over SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_r: usize,
    pub n_t: usize,
    #[serde(default = "default_modulation")]
    pub modulation: Modulation,
    #[serde(default)]
    pub code: CodeId,
    pub detector: DetectorKind,
    /// GS sweeps, or Neumann terms for `nse`.
    #[serde(default)]
    pub k: usize,
    pub snr_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kronecker: Option<KroneckerSpec>,
    /// Frame budget per SNR point.
    pub frames: u64,
    #[serde(default = "default_bits_per_frame")]
    pub bits_per_frame: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    /// Stop a point once this many bit errors are counted; 0 disables.
    #[serde(default = "default_target")]
    pub target_bit_errors: u64,
    /// Never stop a point before this many information bits.
    #[serde(default)]
    pub min_bits: u64,
    #[serde(default)]
    pub schedule: Schedule,
    /// Word lengths for fixed arithmetic that replace the
    /// dimension-dependent defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fxp: Option<FxpOverrides>,
}

impl SimConfig {
    /// Defaults for everything but the system and detector.
    pub fn new(n_r: usize, n_t: usize, detector: DetectorKind, k: usize) -> Self {
        SimConfig {
            n_r,
            n_t,
            modulation: default_modulation(),
            code: CodeId::default(),
            detector,
            k,
            snr_db: vec![0.0],
            kronecker: None,
            frames: 1000,
            bits_per_frame: DEFAULT_BITS_PER_FRAME,
            seed: 0,
            arithmetic: Arithmetic::Float,
            target_bit_errors: DEFAULT_TARGET_BIT_ERRORS,
            min_bits: 0,
            schedule: Schedule::Rescheduled,
            fxp: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_t == 0 || self.n_r < self.n_t {
            return fail(format!("need n_r >= n_t >= 1, got {}x{}", self.n_r, self.n_t));
        }
        if self.frames == 0 {
            return fail("frames must be at least 1".into());
        }
        if self.bits_per_frame == 0 {
            return fail("bits_per_frame must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return fail("snr_db must list at least one point".into());
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return fail(format!("snr point {x} is not finite"));
        }
        if self.detector == DetectorKind::Nse && self.k == 0 {
            return fail("nse needs k >= 1 series terms".into());
        }
        if let Some(kr) = &self.kronecker {
            if (kr.zeta_r() >= 1.0 && self.n_r > 1) || (kr.zeta_t() >= 1.0 && self.n_t > 1) {
                return fail("correlation factor 1 gives a singular channel".into());
            }
        }
        if self.arithmetic == Arithmetic::Fixed {
            if self.detector != DetectorKind::Igs {
                return fail(format!(
                    "fixed arithmetic is modeled for igs only, not {}",
                    self.detector
                ));
            }
            self.fxp_config()?;
        }
        Ok(())
    }

    pub fn fxp_config(&self) -> Result<FxpConfig> {
        let base = FxpConfig::for_dims(self.n_r, self.n_t)?;
        Ok(match &self.fxp {
            Some(o) => base.with_overrides(o),
            None => base,
        })
    }

    pub fn zeta(&self) -> (f64, f64) {
        self.kronecker
            .map(|k| (k.zeta_r(), k.zeta_t()))
            .unwrap_or((0.0, 0.0))
    }

    /// Short label such as `igs K=1 128x8 float`.
    pub fn label(&self) -> String {
        let (zr, zt) = self.zeta();
        let mut s = format!("{} K={} {}x{} {}", self.detector, self.k, self.n_r, self.n_t, self.arithmetic);
        if zr != 0.0 || zt != 0.0 {
            s.push_str(&format!(" zr={zr} zt={zt}"));
        }
        s
    }
}
