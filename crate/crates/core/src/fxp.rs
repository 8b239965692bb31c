//! Bit-accurate fixed-point model of the IGS datapath.
//!
//! Values are carried as `f64` numbers that always lie on the grid of their
//! format (`raw * 2^-frac`). Every product in the datapath has fewer than 53
//! significant bits, so the floating-point arithmetic between quantization
//! points is exact and the model is bit-accurate.
//!
//! Rounding is round-half-to-even with saturation at the format bounds. Each
//! quantization point belongs to a named [`Signal`] whose saturation events
//! are counted in [`SatStats`].
//!
//! The datapath works in a scaled domain: `W~ = c W` and `y~ = c y_mf` with
//! `c = N_t / N_r` (a shift when both are powers of two). The diagonal of
//! `W~` then sits near `N_t`, which is what the offset-flag compression
//! relies on, and the matched filter output sits near the symbol scale times
//! `N_t`. The solution `W~^{-1} y~` is unchanged.
//!
//! Default word lengths for `(N_r, N_t) = (128, 8)`:
//!
//! | signal    | bits | frac | notes                                         |
//! |-----------|------|------|-----------------------------------------------|
//! | `h`, `y`  | 15   | 11,10| channel and receive samples                   |
//! | `n0`      | 15   | 9    | noise variance                                |
//! | `mac`     | 22   | 12   | RGM / MF accumulators (unscaled domain)       |
//! | `gram`    | 15   | 5    | decompressed `W~`; `frac = 8 - log2 N_t`      |
//! | `payload` | 9    | 5    | compressed `W~` entry, range `±N_t`           |
//! | `mf`      | 15   | 9    | scaled matched filter output                  |
//! | `recip`   | 15   | 14   | reciprocal table entries over `[1, 2)`        |
//! | `inv`     | 15   | 13   | `N_t W2^{-1}`                                  |
//! | `gs_mac`  | 22   | 16   | GS accumulators                               |
//! | `state`   | 15   | 12   | `s^(k)`                                       |
//! | `rho`     | 12   | 3    | SINR out of the SCU                           |
//! | `inv_mu`  | 12   | 9    | `1 / mu` out of the SCU                       |
//! | `z`       | 12   | 9    | LCU input                                     |
//! | `llr`     | 10   | 4    | LCU output                                    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::detect::GramSystem;
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::numerics::{check_len, HermitianSplit, C64};

/// Word length and binary point of one signal.
///
/// Serialized as `"s15.10"` (signed, 15 bits, 10 fractional) or `"u12.9"`;
/// a table `{ total_bits, frac_bits, signed }` is accepted as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFormat", into = "String")]
pub struct FxpFormat {
    total_bits: u32,
    frac_bits: u32,
    signed: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFormat {
    Text(String),
    Table {
        total_bits: u32,
        frac_bits: u32,
        #[serde(default = "default_signed")]
        signed: bool,
    },
}

fn default_signed() -> bool {
    true
}

impl TryFrom<RawFormat> for FxpFormat {
    type Error = Error;

    fn try_from(r: RawFormat) -> Result<Self> {
        match r {
            RawFormat::Text(s) => s.parse(),
            RawFormat::Table {
                total_bits,
                frac_bits,
                signed,
            } => FxpFormat::new(total_bits, frac_bits, signed),
        }
    }
}

impl From<FxpFormat> for String {
    fn from(f: FxpFormat) -> String {
        f.to_string()
    }
}

impl FromStr for FxpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("fixed-point format `{s}` is not of the form s15.10 or u12.9"));
        let signed = match s.as_bytes().first() {
            Some(b's') => true,
            Some(b'u') => false,
            _ => return Err(bad()),
        };
        let (total, frac) = s[1..].split_once('.').ok_or_else(bad)?;
        FxpFormat::new(total.parse().map_err(|_| bad())?, frac.parse().map_err(|_| bad())?, signed)
    }
}

impl FxpFormat {
    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if frac_bits == 0 || frac_bits >= total_bits || total_bits > 32 {
            return Err(Error::Config(format!(
                "invalid fixed-point format: {total_bits} bits with {frac_bits} fractional"
            )));
        }
        Ok(FxpFormat {
            total_bits,
            frac_bits,
            signed,
        })
    }

    /// Signed format; panics on an invalid layout, for use with constants.
    pub fn signed(total_bits: u32, frac_bits: u32) -> Self {
        Self::new(total_bits, frac_bits, true).expect("valid fixed-point format")
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_raw(&self) -> i64 {
        if self.signed {
            (1i64 << (self.total_bits - 1)) - 1
        } else {
            (1i64 << self.total_bits) - 1
        }
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.lsb()
    }
}

impl fmt::Display for FxpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.signed { 's' } else { 'u' };
        write!(f, "{s}{}.{}", self.total_bits, self.frac_bits)
    }
}

/// A quantized value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixed {
    pub raw: i64,
    pub fmt: FxpFormat,
    /// The input was outside the representable range.
    pub saturated: bool,
}

impl Fixed {
    pub fn value(&self) -> f64 {
        self.raw as f64 * self.fmt.lsb()
    }
}

/// Round to nearest (ties to even) and saturate. NaN maps to zero and counts
/// as saturated.
pub fn quantize(x: f64, fmt: FxpFormat) -> Fixed {
    if x.is_nan() {
        return Fixed {
            raw: 0,
            fmt,
            saturated: true,
        };
    }
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round_ties_even();
    let (lo, hi) = (fmt.min_raw(), fmt.max_raw());
    let (raw, saturated) = if scaled < lo as f64 {
        (lo, true)
    } else if scaled > hi as f64 {
        (hi, true)
    } else {
        (scaled as i64, false)
    };
    Fixed {
        raw,
        fmt,
        saturated,
    }
}

/// Quantization points of the datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    H,
    Y,
    N0,
    Mac,
    Gram,
    Payload,
    Mf,
    Recip,
    Inv,
    GsMac,
    State,
    Rho,
    InvMu,
    Z,
    Llr,
}

impl Signal {
    pub const ALL: [Signal; 15] = [
        Signal::H,
        Signal::Y,
        Signal::N0,
        Signal::Mac,
        Signal::Gram,
        Signal::Payload,
        Signal::Mf,
        Signal::Recip,
        Signal::Inv,
        Signal::GsMac,
        Signal::State,
        Signal::Rho,
        Signal::InvMu,
        Signal::Z,
        Signal::Llr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::H => "h",
            Signal::Y => "y",
            Signal::N0 => "n0",
            Signal::Mac => "mac",
            Signal::Gram => "gram",
            Signal::Payload => "payload",
            Signal::Mf => "mf",
            Signal::Recip => "recip",
            Signal::Inv => "inv",
            Signal::GsMac => "gs_mac",
            Signal::State => "state",
            Signal::Rho => "rho",
            Signal::InvMu => "inv_mu",
            Signal::Z => "z",
            Signal::Llr => "llr",
        }
    }
}

/// Quantization and saturation counts per signal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SatStats {
    events: [u64; Signal::ALL.len()],
    total: [u64; Signal::ALL.len()],
}

impl SatStats {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, s: Signal, saturated: bool) {
        self.total[s as usize] += 1;
        self.events[s as usize] += saturated as u64;
    }

    pub fn events(&self, s: Signal) -> u64 {
        self.events[s as usize]
    }

    pub fn quantizations(&self, s: Signal) -> u64 {
        self.total[s as usize]
    }

    pub fn total_events(&self) -> u64 {
        self.events.iter().sum()
    }

    pub fn merge(&mut self, other: &SatStats) {
        for i in 0..self.events.len() {
            self.events[i] += other.events[i];
            self.total[i] += other.total[i];
        }
    }
}

/// Word lengths of every datapath signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FxpConfig {
    pub h: FxpFormat,
    pub y: FxpFormat,
    pub n0: FxpFormat,
    pub mac: FxpFormat,
    pub gram: FxpFormat,
    pub payload: FxpFormat,
    pub mf: FxpFormat,
    pub recip: FxpFormat,
    pub inv: FxpFormat,
    pub gs_mac: FxpFormat,
    pub state: FxpFormat,
    pub rho: FxpFormat,
    pub inv_mu: FxpFormat,
    pub z: FxpFormat,
    pub llr: FxpFormat,
}

/// Per-signal replacements for the dimension-dependent defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FxpOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mac: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mf: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recip: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gs_mac: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_mu: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<FxpFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr: Option<FxpFormat>,
}

fn ceil_log2(x: usize) -> u32 {
    x.max(1).next_power_of_two().trailing_zeros()
}

/// Binary point of the `W~` grid: the 9-bit payload spans `±N_t`.
fn gram_frac(n_t: usize) -> Result<u32> {
    let lg = ceil_log2(n_t);
    if lg >= 8 {
        return Err(Error::Config(format!(
            "compressed Gram format needs N_t < 256, got {n_t}"
        )));
    }
    Ok(8 - lg)
}

impl FxpConfig {
    /// Default word lengths with binary points placed for the dynamic range
    /// of an i.i.d. `n_r x n_t` system.
    pub fn for_dims(n_r: usize, n_t: usize) -> Result<Self> {
        if n_t == 0 || n_r < n_t {
            return Err(Error::Config(format!("invalid dimensions {n_r}x{n_t}")));
        }
        let g = gram_frac(n_t)?;
        let lt = ceil_log2(n_t);
        // scaled MF output covers about ±4 N_t, the unscaled accumulators ±4 N_r
        let mf = 14u32.saturating_sub(lt + 2).max(1);
        let mac = 21u32.saturating_sub(ceil_log2(4 * n_r)).max(1);
        let y = 14u32.saturating_sub(ceil_log2(4 * n_t.max(2)) / 2 + 2).max(1);
        Ok(FxpConfig {
            h: FxpFormat::signed(15, 11),
            y: FxpFormat::signed(15, y),
            n0: FxpFormat::signed(15, mf),
            mac: FxpFormat::signed(22, mac),
            gram: FxpFormat::signed(15, g),
            payload: FxpFormat::signed(9, g),
            mf: FxpFormat::signed(15, mf),
            recip: FxpFormat::signed(15, 14),
            inv: FxpFormat::signed(15, 13),
            gs_mac: FxpFormat::signed(22, mf + 7),
            state: FxpFormat::signed(15, 12),
            rho: FxpFormat::signed(12, 3),
            inv_mu: FxpFormat::signed(12, 9),
            z: FxpFormat::signed(12, 9),
            llr: FxpFormat::signed(10, 4),
        })
    }

    /// Replaces the formats named in `o`.
    pub fn with_overrides(mut self, o: &FxpOverrides) -> Self {
        macro_rules! apply {
            ($($f:ident),*) => {$( if let Some(v) = o.$f { self.$f = v; } )*};
        }
        apply!(h, y, n0, mac, gram, payload, mf, recip, inv, gs_mac, state, rho, inv_mu, z, llr);
        self
    }

    pub fn format(&self, s: Signal) -> FxpFormat {
        match s {
            Signal::H => self.h,
            Signal::Y => self.y,
            Signal::N0 => self.n0,
            Signal::Mac => self.mac,
            Signal::Gram => self.gram,
            Signal::Payload => self.payload,
            Signal::Mf => self.mf,
            Signal::Recip => self.recip,
            Signal::Inv => self.inv,
            Signal::GsMac => self.gs_mac,
            Signal::State => self.state,
            Signal::Rho => self.rho,
            Signal::InvMu => self.inv_mu,
            Signal::Z => self.z,
            Signal::Llr => self.llr,
        }
    }
}

/// Offset-flag compressed Gram entry (one real component).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressedEntry {
    pub offset_flag: bool,
    pub payload: Fixed,
}

/// Compress with the default payload format for `n_t`.
pub fn compress_gram(x: f64, n_t: usize) -> CompressedEntry {
    let frac = gram_frac(n_t).expect("N_t below 256");
    compress_gram_with(x, n_t, FxpFormat::signed(9, frac))
}

/// Entries above `N_t / 2` are stored relative to `N_t`.
pub fn compress_gram_with(x: f64, n_t: usize, payload: FxpFormat) -> CompressedEntry {
    let offset_flag = x > n_t as f64 / 2.0;
    let v = if offset_flag { x - n_t as f64 } else { x };
    CompressedEntry {
        offset_flag,
        payload: quantize(v, payload),
    }
}

/// `payload + flag * N_t` on the 15-bit Gram grid.
pub fn decompress_gram(e: CompressedEntry, n_t: usize) -> Fixed {
    let fmt = FxpFormat::signed(15, e.payload.fmt.frac_bits);
    let offset = if e.offset_flag { n_t as f64 } else { 0.0 };
    quantize(e.payload.value() + offset, fmt)
}

/// Reciprocal through a 1024-entry table over the normalized mantissa.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalLut {
    table: Vec<f64>,
}

impl ReciprocalLut {
    pub const ENTRIES: usize = 1024;

    /// Entry `i` holds `1 / m` at the midpoint `m` of bin `i` of `[1, 2)`.
    pub fn new(out: FxpFormat) -> Self {
        let n = Self::ENTRIES as f64;
        let table = (0..Self::ENTRIES)
            .map(|i| quantize(1.0 / (1.0 + (i as f64 + 0.5) / n), out).value())
            .collect();
        ReciprocalLut { table }
    }

    /// `1 / x` for `x > 0`, using a power-of-two normalization; the result
    /// is exact to the table entry times the shift. Non-positive inputs give
    /// `None`.
    pub fn reciprocal(&self, x: f64) -> Option<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return None;
        }
        let e = x.log2().floor();
        let mut m = x * (-e).exp2();
        let mut e = e;
        // guard log2 rounding at exact powers of two
        if m >= 2.0 {
            m /= 2.0;
            e += 1.0;
        } else if m < 1.0 {
            m *= 2.0;
            e -= 1.0;
        }
        let idx = (((m - 1.0) * Self::ENTRIES as f64) as usize).min(Self::ENTRIES - 1);
        Some(self.table[idx] * (-e).exp2())
    }
}

/// A Gram system rescaled by a factor `c`, together with how it was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    pub system: GramSystem,
    pub factor: f64,
    /// `Some(e)` when `factor = 2^-e` and scaling is a pure exponent shift.
    pub shift: Option<i32>,
}

/// Normalize the GS inputs by `1 / n_r`: `W' = W / n_r`, `y' = y_mf / n_r`,
/// `N0' = N0 / n_r`. The GS iterates and the gains are unchanged. When `n_r`
/// is a power of two this is an exponent shift and the sweeps agree bit for
/// bit; otherwise it is a multiplication and agreement is to rounding.
pub fn scale_gs_inputs(g: &GramSystem, n_r: usize) -> ScaledSystem {
    scale_by(g, 1.0 / n_r as f64)
}

fn scale_by(g: &GramSystem, factor: f64) -> ScaledSystem {
    let shift = {
        let e = -factor.log2();
        (e.fract() == 0.0 && factor > 0.0).then_some(e as i32)
    };
    let w = g.split();
    let split = HermitianSplit::new(
        w.d().iter().map(|d| d * factor).collect(),
        w.lower_packed().iter().map(|v| v * factor).collect(),
    )
    .expect("same packed size");
    let y = g.y_mf().iter().map(|v| v * factor).collect();
    ScaledSystem {
        system: GramSystem::new(split, y, g.n0() * factor).expect("same dimension"),
        factor,
        shift,
    }
}

struct Quantizer<'a> {
    cfg: &'a FxpConfig,
    stats: &'a mut SatStats,
}

impl Quantizer<'_> {
    fn q(&mut self, s: Signal, x: f64) -> f64 {
        let f = quantize(x, self.cfg.format(s));
        self.stats.record(s, f.saturated);
        f.value()
    }

    fn qc(&mut self, s: Signal, x: C64) -> C64 {
        C64::new(self.q(s, x.re), self.q(s, x.im))
    }
}

/// Fixed-point IGS detector.
#[derive(Debug, Clone)]
pub struct FixedIgs {
    cfg: FxpConfig,
    k: usize,
    n_r: usize,
    n_t: usize,
    /// Domain scale `c`; `N_t / N_r` by default.
    scale: f64,
    lut: ReciprocalLut,
}

impl FixedIgs {
    pub fn new(cfg: FxpConfig, n_r: usize, n_t: usize, k: usize) -> Result<Self> {
        if n_t == 0 || n_r < n_t {
            return Err(Error::Config(format!("invalid dimensions {n_r}x{n_t}")));
        }
        Ok(FixedIgs {
            lut: ReciprocalLut::new(cfg.recip),
            cfg,
            k,
            n_r,
            n_t,
            scale: n_t as f64 / n_r as f64,
        })
    }

    /// Override the domain scale (1.0 disables the normalization).
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn config(&self) -> &FxpConfig {
        &self.cfg
    }

    /// Per-channel stages: RGM, compression, 2-term inverse and gains.
    pub fn prepare(&self, ch: &ChannelRealization, stats: &mut SatStats) -> Result<FixedPrepared> {
        check_len(self.n_r, ch.n_r())?;
        check_len(self.n_t, ch.n_t())?;
        let n = self.n_t;
        let c = self.scale;
        let mut q = Quantizer {
            cfg: &self.cfg,
            stats,
        };

        let h: Vec<C64> = ch.h.as_slice().iter().map(|v| q.qc(Signal::H, *v)).collect();
        let n0 = q.q(Signal::N0, ch.n0 * c);

        // RGM: lower triangle of H^H H in the MAC register, then scaled and
        // pushed through compression.
        let mut d = vec![0.0; n];
        let mut lower = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let flag_split = |x: f64, q: &mut Quantizer| -> f64 {
            let e = compress_gram_with(x, n, q.cfg.payload);
            q.stats.record(Signal::Payload, e.payload.saturated);
            let dec = decompress_gram(e, n).value();
            q.q(Signal::Gram, dec)
        };
        for i in 0..n {
            for j in 0..=i {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..self.n_r {
                    acc += h[r * n + i].conj() * h[r * n + j];
                }
                let acc = q.qc(Signal::Mac, acc);
                if i == j {
                    d[i] = flag_split(acc.re * c + n0, &mut q);
                } else {
                    let v = acc * c;
                    lower.push(C64::new(flag_split(v.re, &mut q), flag_split(v.im, &mut q)));
                }
            }
        }
        let w = HermitianSplit::new(d, lower)?;

        // ISCU: N_t / d_i from the table, then N_t W2^{-1} one triangle at a time.
        let nt = n as f64;
        let mut d_inv = Vec::with_capacity(n);
        for (index, &value) in w.d().iter().enumerate() {
            let r = self
                .lut
                .reciprocal(value)
                .ok_or(Error::ZeroDiagonal { index, value })?;
            d_inv.push(q.q(Signal::Inv, r * nt));
        }
        let mut inv = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            inv[i * n + i] = C64::new(d_inv[i], 0.0);
            for (j, l) in w.lower_row(i).iter().enumerate() {
                let a = q.qc(Signal::GsMac, l * d_inv[j]);
                let v = q.qc(Signal::Inv, -(a * d_inv[i]) / nt);
                inv[i * n + j] = v;
                inv[j * n + i] = v.conj();
            }
        }

        // SCU: mu_i = 1 - N0~ d_i^{-1}, rho = mu / (1 - mu), 1 / mu.
        let mut rho = Vec::with_capacity(n);
        let mut inv_mu = Vec::with_capacity(n);
        for &di in &d_inv {
            let mu = 1.0 - n0 * di / nt;
            let mu = mu.clamp(crate::detect::GAIN_EPS, 1.0 - crate::detect::GAIN_EPS);
            let one_minus = self.lut.reciprocal(1.0 - mu).unwrap_or(f64::INFINITY);
            rho.push(q.q(Signal::Rho, mu * one_minus));
            inv_mu.push(q.q(Signal::InvMu, self.lut.reciprocal(mu).unwrap_or(f64::INFINITY)));
        }

        Ok(FixedPrepared {
            h,
            w,
            inv,
            d_inv,
            rho,
            inv_mu,
            scale: c,
            k: self.k,
            n_r: self.n_r,
        })
    }
}

/// Fixed-point detector state for one channel realization.
#[derive(Debug, Clone)]
pub struct FixedPrepared {
    h: Vec<C64>,
    w: HermitianSplit,
    /// `N_t W2^{-1}`, row-major.
    inv: Vec<C64>,
    /// `N_t / d_i`.
    d_inv: Vec<f64>,
    rho: Vec<f64>,
    inv_mu: Vec<f64>,
    scale: f64,
    k: usize,
    n_r: usize,
}

impl FixedPrepared {
    /// Decompressed scaled Gram matrix.
    pub fn gram(&self) -> &HermitianSplit {
        &self.w
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Equalized symbols `s^(K)` for one receive vector.
    pub fn equalize(&self, cfg: &FxpConfig, y: &[C64], stats: &mut SatStats) -> Result<Vec<C64>> {
        check_len(self.n_r, y.len())?;
        let n = self.w.dim();
        let nt = n as f64;
        let mut q = Quantizer { cfg, stats };
        let yq: Vec<C64> = y.iter().map(|v| q.qc(Signal::Y, *v)).collect();

        // MF in the MAC register, then scaled
        let mut y_mf = vec![C64::new(0.0, 0.0); n];
        for (r, yr) in yq.iter().enumerate() {
            let row = &self.h[r * n..(r + 1) * n];
            for (acc, h) in y_mf.iter_mut().zip(row) {
                *acc += h.conj() * yr;
            }
        }
        let y_mf: Vec<C64> = y_mf
            .into_iter()
            .map(|v| {
                let m = q.qc(Signal::Mac, v);
                q.qc(Signal::Mf, m * self.scale)
            })
            .collect();

        // s0 = W2^{-1} y~
        let mut s: Vec<C64> = (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc += self.inv[i * n + j] * y_mf[j];
                }
                let acc = q.qc(Signal::GsMac, acc / nt);
                q.qc(Signal::State, acc)
            })
            .collect();

        for _ in 0..self.k {
            // b = y~ - L^H s (old values)
            let mut b: Vec<C64> = y_mf.clone();
            for i in 0..n {
                for j in i + 1..n {
                    b[i] -= self.w.lower(j, i).conj() * s[j];
                }
                b[i] = q.qc(Signal::GsMac, b[i]);
            }
            // forward substitution with reciprocal multiplies
            for i in 0..n {
                let mut acc = b[i];
                for (j, l) in self.w.lower_row(i).iter().enumerate() {
                    acc -= l * s[j];
                }
                let acc = q.qc(Signal::GsMac, acc);
                s[i] = q.qc(Signal::State, acc * self.d_inv[i] / nt);
            }
        }
        Ok(s)
    }

    /// LCU: quantized `z`, max-log metric and scaled LLRs into `out`
    /// (`N_t * B` values).
    pub fn llrs(
        &self,
        cfg: &FxpConfig,
        s: &[C64],
        c: &Constellation,
        stats: &mut SatStats,
        out: &mut [f64],
    ) -> Result<()> {
        let b = c.bits_per_symbol();
        check_len(s.len() * b, out.len())?;
        let mut q = Quantizer { cfg, stats };
        for (i, si) in s.iter().enumerate() {
            let z = q.qc(Signal::Z, si * self.inv_mu[i]);
            let o = &mut out[i * b..(i + 1) * b];
            c.lambdas(z, o);
            for v in o.iter_mut() {
                *v = q.q(Signal::Llr, *v * self.rho[i]);
            }
        }
        Ok(())
    }
}
