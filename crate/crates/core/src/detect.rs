//! Soft-output linear MMSE detection.
//!
//! All detectors share the preprocessing (regularized Gram matrix
//! `W = H^H H + N0 I` and matched filter `y_mf = H^H y`) and the LLR stage;
//! they differ only in how they approximate `W^{-1} y_mf` and the effective
//! channel gains `mu_i = 1 - N0 (W^{-1})_ii`:
//!
//! * Gauss-Seidel sweeps `s <- (D + L)^{-1} (y_mf - L^H s)` from a zero,
//!   diagonal (`D^{-1} y_mf`) or two-term Neumann (`W2^{-1} y_mf`) start.
//!   The last one is the improved GS detector (IGS).
//! * Truncated Neumann series `sum_{k<K} (I - D^{-1} W)^k D^{-1}`.
//! * Exact solve through a Cholesky factorization.
//!
//! Gauss-Seidel variants take their gains from the two-term inverse
//! `W2^{-1} = D^{-1} - D^{-1} E D^{-1}` (its diagonal is `1 / d_i`); Neumann
//! detectors from the diagonal of their own series; the exact detector from
//! `W^{-1}`.
//!
//! Every kernel reports complex multiplications to a [`MulCounter`]. For the
//! IGS core that is `N_t^2` for `W2^{-1}` (lower triangle only), `N_t^2` for
//! the initial solution and `N_t^2` per sweep, plus `N_t` for the gains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::numerics::{
    check_len, cholesky_factor_counted, forward_substitute, solve_lower_adjoint, C64,
    ComplexMatrix, HermitianSplit, MulCounter, NoCount,
};

/// Gains are clamped to `[GAIN_EPS, 1 - GAIN_EPS]` before forming the SINR.
pub const GAIN_EPS: f64 = 1e-6;

/// Regularized Gram matrix in split form together with one matched-filter output.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    split: HermitianSplit,
    y_mf: Vec<C64>,
    n0: f64,
}

impl GramSystem {
    pub fn new(split: HermitianSplit, y_mf: Vec<C64>, n0: f64) -> Result<Self> {
        check_len(split.dim(), y_mf.len())?;
        Ok(GramSystem { split, y_mf, n0 })
    }

    pub fn split(&self) -> &HermitianSplit {
        &self.split
    }

    pub fn y_mf(&self) -> &[C64] {
        &self.y_mf
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn n_t(&self) -> usize {
        self.split.dim()
    }
}

/// `W = H^H H + N0 I`, computing only the lower triangle of the Gram matrix.
pub fn regularized_gram(ch: &ChannelRealization) -> HermitianSplit {
    let h = &ch.h;
    let n_t = h.cols();
    let mut d = vec![ch.n0; n_t];
    let mut lower = vec![C64::new(0.0, 0.0); n_t * n_t.saturating_sub(1) / 2];
    for r in 0..h.rows() {
        let row = h.row(r);
        let mut off = 0;
        for i in 0..n_t {
            let hi = row[i].conj();
            for j in 0..i {
                lower[off + j] += hi * row[j];
            }
            d[i] += row[i].norm_sqr();
            off += i;
        }
    }
    HermitianSplit::new(d, lower).expect("packed size matches by construction")
}

/// `H^H y`.
pub fn matched_filter(ch: &ChannelRealization, y: &[C64]) -> Result<Vec<C64>> {
    ch.h.adjoint_matvec(y)
}

pub fn preprocess(ch: &ChannelRealization, y: &[C64]) -> Result<GramSystem> {
    let y_mf = matched_filter(ch, y)?;
    Ok(GramSystem {
        split: regularized_gram(ch),
        y_mf,
        n0: ch.n0,
    })
}

fn diag_inverse(w: &HermitianSplit, counter: &mut impl MulCounter) -> Result<Vec<f64>> {
    let inv = w
        .d()
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 {
                Ok(1.0 / value)
            } else {
                Err(Error::ZeroDiagonal { index, value })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    counter.add(inv.len() as u64);
    Ok(inv)
}

/// Two-term Neumann approximation `W2^{-1} = D^{-1} - D^{-1} E D^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nse2Inverse {
    w2_inv: ComplexMatrix,
    diag: Vec<f64>,
}

impl Nse2Inverse {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.w2_inv
    }

    /// Diagonal entries `W'_ii`, equal to `1 / d_i`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

pub fn nse2_inverse(g: &GramSystem) -> Result<Nse2Inverse> {
    nse2_inverse_counted(&g.split, &mut NoCount)
}

/// Fills the lower triangle and mirrors it, since `D^{-1} E D^{-1}` is Hermitian.
pub fn nse2_inverse_counted(
    w: &HermitianSplit,
    counter: &mut impl MulCounter,
) -> Result<Nse2Inverse> {
    let n = w.dim();
    let d_inv = diag_inverse(w, counter)?;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(d_inv[i], 0.0);
        for (j, l) in w.lower_row(i).iter().enumerate() {
            let v = -(l * d_inv[j]) * d_inv[i];
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    counter.add((n * n.saturating_sub(1)) as u64);
    Ok(Nse2Inverse {
        w2_inv: m,
        diag: d_inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Zero,
    Diag,
    Nse2,
}

fn dense_matvec(m: &ComplexMatrix, v: &[C64], counter: &mut impl MulCounter) -> Result<Vec<C64>> {
    let out = m.matvec(v)?;
    counter.add((m.rows() * m.cols()) as u64);
    Ok(out)
}

pub fn initial_solution(g: &GramSystem, mode: InitMode) -> Result<Vec<C64>> {
    let n = g.n_t();
    match mode {
        InitMode::Zero => Ok(vec![C64::new(0.0, 0.0); n]),
        InitMode::Diag => {
            let d_inv = diag_inverse(&g.split, &mut NoCount)?;
            Ok(g.y_mf.iter().zip(&d_inv).map(|(y, d)| y * d).collect())
        }
        InitMode::Nse2 => {
            let w2 = nse2_inverse(g)?;
            dense_matvec(&w2.w2_inv, &g.y_mf, &mut NoCount)
        }
    }
}

/// One Gauss-Seidel sweep: forward substitution on `D + L`.
pub fn gs_sweep(
    w: &HermitianSplit,
    y_mf: &[C64],
    s_prev: &[C64],
    counter: &mut impl MulCounter,
) -> Result<Vec<C64>> {
    check_len(w.dim(), s_prev.len())?;
    check_len(w.dim(), y_mf.len())?;
    if let Some((index, &value)) = w.d().iter().enumerate().find(|(_, &v)| v == 0.0) {
        return Err(Error::ZeroDiagonal { index, value });
    }
    let upper = w.upper_matvec(s_prev, counter);
    let b: Vec<C64> = y_mf.iter().zip(&upper).map(|(y, u)| y - u).collect();
    forward_substitute(w, &b, counter)
}

pub fn gs_iterate(g: &GramSystem, s_prev: &[C64]) -> Result<Vec<C64>> {
    gs_sweep(&g.split, &g.y_mf, s_prev, &mut NoCount)
}

/// Linear equalizer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equalizer {
    /// Gauss-Seidel with `iterations` sweeps after the chosen start.
    GaussSeidel { init: InitMode, iterations: usize },
    /// Neumann series with `terms >= 1` terms and `X = D`.
    Neumann { terms: usize },
    /// Cholesky-based exact MMSE.
    Exact,
}

impl Equalizer {
    pub fn igs(iterations: usize) -> Self {
        Equalizer::GaussSeidel {
            init: InitMode::Nse2,
            iterations,
        }
    }

    /// Per-channel work: everything that depends on `W` but not on `y_mf`.
    pub fn prepare<'a>(
        &self,
        w: &'a HermitianSplit,
        n0: f64,
        counter: &mut impl MulCounter,
    ) -> Result<PreparedEqualizer<'a>> {
        let n = w.dim();
        let (kind, mu) = match *self {
            Equalizer::GaussSeidel { init, iterations } => {
                let w2 = match init {
                    InitMode::Nse2 => Some(nse2_inverse_counted(w, counter)?),
                    _ => None,
                };
                let d_inv = match &w2 {
                    Some(w2) => w2.diag.clone(),
                    None => diag_inverse(w, &mut NoCount)?,
                };
                let mu = d_inv.iter().map(|d| 1.0 - n0 * d).collect();
                (
                    Prepared::GaussSeidel {
                        init,
                        iterations,
                        w2,
                        d_inv,
                    },
                    mu,
                )
            }
            Equalizer::Neumann { terms } => {
                if terms == 0 {
                    return Err(Error::Config("Neumann series needs at least one term".into()));
                }
                let a = neumann_inverse(w, terms, counter)?;
                let mu = (0..n).map(|i| 1.0 - n0 * a[(i, i)].re).collect();
                (Prepared::Matrix(a), mu)
            }
            Equalizer::Exact => {
                let c = cholesky_factor_counted(w, counter)?;
                let mut mu = Vec::with_capacity(n);
                for i in 0..n {
                    // (W^{-1})_ii = |C^{-1} e_i|^2
                    let mut e = vec![C64::new(0.0, 0.0); n];
                    e[i] = C64::new(1.0, 0.0);
                    let x = forward_substitute(&c, &e, counter)?;
                    let wii: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                    mu.push(1.0 - n0 * wii);
                }
                (Prepared::Cholesky(c), mu)
            }
        };
        Ok(PreparedEqualizer { w, kind, mu })
    }
}

/// `sum_{k<terms} (I - D^{-1} W)^k D^{-1}`, built as
/// `A_{k+1} = D^{-1} + (I - D^{-1} W) A_k` from the shared two-term inverse.
pub fn neumann_inverse(
    w: &HermitianSplit,
    terms: usize,
    counter: &mut impl MulCounter,
) -> Result<ComplexMatrix> {
    let n = w.dim();
    if terms == 1 {
        let d_inv = diag_inverse(w, counter)?;
        return Ok(ComplexMatrix::diagonal(&d_inv));
    }
    let w2 = nse2_inverse_counted(w, counter)?;
    let d_inv = w2.diag.clone();
    let mut a = w2.w2_inv;
    for _ in 2..terms {
        let mut next = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // -(E A)_ij / d_i, E has zero diagonal
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..n {
                    if l != i {
                        acc += w.entry(i, l) * a[(l, j)];
                    }
                }
                next[(i, j)] = -acc * d_inv[i];
            }
            next[(i, i)] += C64::new(d_inv[i], 0.0);
        }
        counter.add((n * n * n) as u64);
        a = next;
    }
    Ok(a)
}

#[derive(Debug, Clone)]
enum Prepared {
    GaussSeidel {
        init: InitMode,
        iterations: usize,
        w2: Option<Nse2Inverse>,
        d_inv: Vec<f64>,
    },
    Matrix(ComplexMatrix),
    Cholesky(ComplexMatrix),
}

/// An equalizer bound to one channel realization.
#[derive(Debug, Clone)]
pub struct PreparedEqualizer<'a> {
    w: &'a HermitianSplit,
    kind: Prepared,
    mu: Vec<f64>,
}

impl PreparedEqualizer<'_> {
    /// Effective channel gains before clamping.
    pub fn gains(&self) -> &[f64] {
        &self.mu
    }

    pub fn equalize(&self, y_mf: &[C64], counter: &mut impl MulCounter) -> Result<Vec<C64>> {
        check_len(self.w.dim(), y_mf.len())?;
        match &self.kind {
            Prepared::GaussSeidel {
                init,
                iterations,
                w2,
                d_inv,
            } => {
                let mut s = match (init, w2) {
                    (InitMode::Nse2, Some(w2)) => dense_matvec(&w2.w2_inv, y_mf, counter)?,
                    (InitMode::Diag, _) => {
                        counter.add(d_inv.len() as u64);
                        y_mf.iter().zip(d_inv).map(|(y, d)| y * d).collect()
                    }
                    _ => vec![C64::new(0.0, 0.0); y_mf.len()],
                };
                for _ in 0..*iterations {
                    s = gs_sweep(self.w, y_mf, &s, counter)?;
                }
                Ok(s)
            }
            Prepared::Matrix(a) => dense_matvec(a, y_mf, counter),
            Prepared::Cholesky(c) => {
                let u = forward_substitute(c, y_mf, counter)?;
                solve_lower_adjoint(c, &u, counter)
            }
        }
    }
}

/// How gains outside `(0, 1]` are treated by the LLR stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainPolicy {
    /// Report [`Error::GainOutOfRange`].
    Strict,
    /// Clamp silently (non-finite gains map to the lower bound).
    Clamp,
}

/// Clamped gain and SINR `rho = mu / (1 - mu)` of one stream.
pub fn gain_and_sinr(stream: usize, mu: f64, policy: GainPolicy) -> Result<(f64, f64)> {
    if policy == GainPolicy::Strict && !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::GainOutOfRange { stream, mu });
    }
    let m = if mu.is_nan() {
        GAIN_EPS
    } else {
        mu.clamp(GAIN_EPS, 1.0 - GAIN_EPS)
    };
    Ok((m, m / (1.0 - m)))
}

/// Equalizer output and its per-bit LLRs.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub s_hat: Vec<C64>,
    /// `s_hat_i / mu_i`.
    pub z: Vec<C64>,
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
    /// `N_t * B` values, stream-major.
    pub llrs: Vec<f64>,
}

/// Shared LLR stage: `L_ib = rho_i * lambda_b(s_hat_i / mu_i)`.
pub fn soft_output(
    s_hat: Vec<C64>,
    gains: &[f64],
    c: &Constellation,
    policy: GainPolicy,
) -> Result<DetectionResult> {
    check_len(s_hat.len(), gains.len())?;
    let b = c.bits_per_symbol();
    let n = s_hat.len();
    let mut mu = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut llrs = vec![0.0; n * b];
    for i in 0..n {
        let (m, r) = gain_and_sinr(i, gains[i], policy)?;
        let zi = s_hat[i] / m;
        let out = &mut llrs[i * b..(i + 1) * b];
        c.lambdas(zi, out);
        for v in out.iter_mut() {
            *v *= r;
        }
        mu.push(m);
        rho.push(r);
        z.push(zi);
    }
    Ok(DetectionResult {
        s_hat,
        z,
        mu,
        rho,
        llrs,
    })
}

fn detect_with(g: &GramSystem, eq: Equalizer, c: &Constellation) -> Result<DetectionResult> {
    let prepared = eq.prepare(&g.split, g.n0, &mut NoCount)?;
    let s_hat = prepared.equalize(&g.y_mf, &mut NoCount)?;
    soft_output(s_hat, prepared.gains(), c, GainPolicy::Strict)
}

/// IGS: two-term Neumann start, `k` Gauss-Seidel sweeps, approximate gains
/// `1 - N0 W'_ii`.
pub fn igs_detect(g: &GramSystem, k: usize, c: &Constellation) -> Result<DetectionResult> {
    detect_with(g, Equalizer::igs(k), c)
}

pub fn gs_detect(
    g: &GramSystem,
    init: InitMode,
    k: usize,
    c: &Constellation,
) -> Result<DetectionResult> {
    detect_with(g, Equalizer::GaussSeidel { init, iterations: k }, c)
}

pub fn exact_mmse_detect(g: &GramSystem, c: &Constellation) -> Result<DetectionResult> {
    detect_with(g, Equalizer::Exact, c)
}

pub fn nse_detect(g: &GramSystem, k_terms: usize, c: &Constellation) -> Result<DetectionResult> {
    detect_with(g, Equalizer::Neumann { terms: k_terms }, c)
}

/// Complex multiplications of one IGS detection, split into the core
/// (inverse, start, sweeps) and the gain computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IgsMultCount {
    pub core: u64,
    pub gains: u64,
}

/// Runs IGS on `g` with instrumented kernels.
pub fn igs_instrumented(g: &GramSystem, k: usize) -> Result<IgsMultCount> {
    let mut core = 0u64;
    let prepared = Equalizer::igs(k).prepare(&g.split, g.n0, &mut core)?;
    prepared.equalize(&g.y_mf, &mut core)?;
    // mu_i = 1 - N0 * W'_ii
    let gains = prepared.gains().len() as u64;
    Ok(IgsMultCount { core, gains })
}

/// Detector families selectable by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DetectorKind {
    Igs,
    GsZero,
    GsDiag,
    Nse,
    MmseExact,
}

impl DetectorKind {
    /// `k` is the sweep count for Gauss-Seidel detectors and the term count
    /// for the Neumann detector; the exact detector ignores it.
    pub fn equalizer(self, k: usize) -> Equalizer {
        match self {
            DetectorKind::Igs => Equalizer::igs(k),
            DetectorKind::GsZero => Equalizer::GaussSeidel {
                init: InitMode::Zero,
                iterations: k,
            },
            DetectorKind::GsDiag => Equalizer::GaussSeidel {
                init: InitMode::Diag,
                iterations: k,
            },
            DetectorKind::Nse => Equalizer::Neumann { terms: k },
            DetectorKind::MmseExact => Equalizer::Exact,
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Igs => "igs",
            DetectorKind::GsZero => "gs_zero",
            DetectorKind::GsDiag => "gs_diag",
            DetectorKind::Nse => "nse",
            DetectorKind::MmseExact => "mmse_exact",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "igs" => Ok(DetectorKind::Igs),
            "gs_zero" => Ok(DetectorKind::GsZero),
            "gs_diag" => Ok(DetectorKind::GsDiag),
            "nse" => Ok(DetectorKind::Nse),
            "mmse_exact" | "mmse" | "exact" => Ok(DetectorKind::MmseExact),
            other => Err(Error::Config(format!("unknown detector `{other}`"))),
        }
    }
}

impl TryFrom<String> for DetectorKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DetectorKind> for String {
    fn from(d: DetectorKind) -> String {
        d.to_string()
    }
}
