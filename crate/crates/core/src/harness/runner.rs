use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::{Arithmetic, SimConfig};
use super::BerRecord;
use crate::channel::{
    complex_gaussian, gen_iid_with, rng_from_seed, snr_to_n0, trial_seed, ChannelRealization,
    KroneckerRoots,
};
use crate::coding::{CodeId, Interleaver};
use crate::detect::{gain_and_sinr, matched_filter, regularized_gram, DetectorKind, GainPolicy};
use crate::error::Result;
use crate::fxp::{FixedIgs, SatStats};
use crate::hwmodel::{latency_estimate, CostReport};
use crate::modem::Constellation;
use crate::numerics::{HermitianSplit, NoCount, C64};

/// Frames simulated between early-stop checks. Fixed so that results do not
/// depend on the number of worker threads.
pub const BATCH_FRAMES: u64 = 32;

/// How frames are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Frames of a batch run on the rayon pool.
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Everything shared by the frames of one configuration.
struct Plan<'a> {
    cfg: &'a SimConfig,
    constellation: Constellation,
    interleaver: Interleaver,
    kron: Option<KroneckerRoots>,
    fixed: Option<FixedIgs>,
    coded_len: usize,
    /// Channel uses per frame.
    vectors: usize,
}

/// Random draws of one frame. They do not depend on the SNR, so every SNR
/// point and every detector sees the same bits, channels and noise shapes.
struct FrameDraw {
    info: Vec<Vec<u8>>,
    /// Symbols, `vectors x n_t` row-major.
    symbols: Vec<C64>,
    h: crate::numerics::ComplexMatrix,
    /// Unit-variance noise, `vectors x n_r`.
    noise: Vec<C64>,
}

#[derive(Debug, Clone, Default)]
struct FrameOutcome {
    bit_errors: u64,
    frame_error: bool,
    saturations: u64,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let constellation = cfg.modulation.constellation();
        let b = constellation.bits_per_symbol();
        let coded_len = match cfg.code {
            CodeId::Uncoded => cfg.bits_per_frame,
            CodeId::Conv(c) => c.coded_len(cfg.bits_per_frame),
        };
        let vectors = coded_len.div_ceil(b);
        let kron = cfg
            .kronecker
            .map(|k| KroneckerRoots::new(cfg.n_r, cfg.n_t, &k))
            .transpose()?;
        let fixed = match cfg.arithmetic {
            Arithmetic::Float => None,
            Arithmetic::Fixed => Some(FixedIgs::new(cfg.fxp_config()?, cfg.n_r, cfg.n_t, cfg.k)?),
        };
        Ok(Plan {
            cfg,
            constellation,
            interleaver: Interleaver::random(coded_len, Interleaver::DEFAULT_SEED),
            kron,
            fixed,
            coded_len,
            vectors,
        })
    }

    fn draw(&self, frame: u64) -> Result<FrameDraw> {
        let cfg = self.cfg;
        let b = self.constellation.bits_per_symbol();
        let mut rng = rng_from_seed(trial_seed(cfg.seed, frame));
        let mut info = Vec::with_capacity(cfg.n_t);
        let mut streams = Vec::with_capacity(cfg.n_t);
        for _ in 0..cfg.n_t {
            let bits: Vec<u8> = (0..cfg.bits_per_frame).map(|_| rng.random_range(0..2u8)).collect();
            let coded = match cfg.code {
                CodeId::Uncoded => bits.clone(),
                CodeId::Conv(c) => c.encode(&bits),
            };
            let mut tx = self.interleaver.interleave(&coded);
            tx.resize(self.vectors * b, 0);
            streams.push(self.constellation.map(&tx)?);
            info.push(bits);
        }
        let mut symbols = Vec::with_capacity(self.vectors * cfg.n_t);
        for t in 0..self.vectors {
            symbols.extend(streams.iter().map(|s| s[t]));
        }
        let h_w = gen_iid_with(cfg.n_r, cfg.n_t, &mut rng);
        let h = match &self.kron {
            Some(k) => k.apply(&h_w)?,
            None => h_w,
        };
        let noise = (0..self.vectors * cfg.n_r)
            .map(|_| complex_gaussian(&mut rng, 1.0))
            .collect();
        Ok(FrameDraw {
            info,
            symbols,
            h,
            noise,
        })
    }

    fn simulate(&self, frame: u64, n0: f64) -> Result<FrameOutcome> {
        let cfg = self.cfg;
        let (n_t, n_r) = (cfg.n_t, cfg.n_r);
        let b = self.constellation.bits_per_symbol();
        let d = self.draw(frame)?;
        let ch = ChannelRealization::new(d.h, n0)?;
        let sigma = n0.sqrt();

        // LLRs per user in transmit order
        let mut llrs = vec![vec![0.0; self.vectors * b]; n_t];
        let mut buf = vec![0.0; n_t * b];
        let mut saturations = 0;

        let received = |t: usize| -> Result<Vec<C64>> {
            let mut y = ch.h.matvec(&d.symbols[t * n_t..(t + 1) * n_t])?;
            for (yi, w) in y.iter_mut().zip(&d.noise[t * n_r..(t + 1) * n_r]) {
                *yi += w * sigma;
            }
            Ok(y)
        };

        if let Some(fixed) = &self.fixed {
            let mut stats = SatStats::new();
            let prep = fixed.prepare(&ch, &mut stats)?;
            for t in 0..self.vectors {
                let y = received(t)?;
                let s = prep.equalize(fixed.config(), &y, &mut stats)?;
                prep.llrs(fixed.config(), &s, &self.constellation, &mut stats, &mut buf)?;
                scatter(&buf, &mut llrs, t, b);
            }
            saturations = stats.total_events();
        } else {
            let w: HermitianSplit = regularized_gram(&ch);
            let eq = cfg.detector.equalizer(cfg.k).prepare(&w, n0, &mut NoCount)?;
            let gains = eq
                .gains()
                .iter()
                .enumerate()
                .map(|(i, &mu)| gain_and_sinr(i, mu, GainPolicy::Clamp))
                .collect::<Result<Vec<_>>>()?;
            for t in 0..self.vectors {
                let y_mf = matched_filter(&ch, &received(t)?)?;
                let s = eq.equalize(&y_mf, &mut NoCount)?;
                for (i, si) in s.iter().enumerate() {
                    let (mu, rho) = gains[i];
                    let out = &mut buf[i * b..(i + 1) * b];
                    self.constellation.lambdas(si / mu, out);
                    out.iter_mut().for_each(|v| *v *= rho);
                }
                scatter(&buf, &mut llrs, t, b);
            }
        }

        let mut bit_errors = 0u64;
        for (user, l) in llrs.iter().enumerate() {
            let rx = self.interleaver.deinterleave(&l[..self.coded_len]);
            let decided = match cfg.code {
                CodeId::Uncoded => rx.iter().map(|&v| u8::from(v > 0.0)).collect(),
                CodeId::Conv(c) => c.viterbi_decode_soft(&rx)?,
            };
            bit_errors += decided
                .iter()
                .zip(&d.info[user])
                .filter(|(a, b)| a != b)
                .count() as u64;
        }
        Ok(FrameOutcome {
            bit_errors,
            frame_error: bit_errors > 0,
            saturations,
        })
    }
}

fn scatter(buf: &[f64], llrs: &mut [Vec<f64>], t: usize, b: usize) {
    for (i, user) in llrs.iter_mut().enumerate() {
        user[t * b..(t + 1) * b].copy_from_slice(&buf[i * b..(i + 1) * b]);
    }
}

fn run_batch(plan: &Plan, range: std::ops::Range<u64>, n0: f64, exec: Execution) -> Result<Vec<FrameOutcome>> {
    match exec {
        Execution::Sequential => range.map(|f| plan.simulate(f, n0)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => range.into_par_iter().map(|f| plan.simulate(f, n0)).collect(),
    }
}

/// Cost columns: instrumented multiplications of one detection and, for
/// IGS, the latency model.
pub fn cost_report(cfg: &SimConfig) -> Result<CostReport> {
    let n = cfg.n_t;
    let w = HermitianSplit::diagonal(vec![1.0; n]);
    let mut mults = 0u64;
    let eq = cfg.detector.equalizer(cfg.k).prepare(&w, 0.1, &mut mults)?;
    eq.equalize(&vec![C64::new(1.0, 0.0); n], &mut mults)?;
    let mut report = if cfg.detector == DetectorKind::Igs {
        latency_estimate(cfg.n_r, n, cfg.k, cfg.schedule)?
    } else {
        CostReport {
            complex_mults: 0,
            gain_mults: 0,
            latency_cycles: 0,
            per_stage: Default::default(),
        }
    };
    report.complex_mults = mults;
    report.gain_mults = n as u64;
    Ok(report)
}

/// Simulate one SNR point. Frames are taken in index order; the point stops
/// at the first frame boundary where the error target and the bit minimum
/// are both met, or when the frame budget is spent.
pub fn run_point(cfg: &SimConfig, snr_db: f64, exec: Execution) -> Result<BerRecord> {
    let plan = Plan::new(cfg)?;
    run_point_with(&plan, snr_db, exec)
}

fn run_point_with(plan: &Plan, snr_db: f64, exec: Execution) -> Result<BerRecord> {
    let cfg = plan.cfg;
    let n0 = snr_to_n0(cfg.n_t, snr_db);
    let bits_per_frame = (cfg.n_t * cfg.bits_per_frame) as u64;
    let (mut bits, mut bit_errors, mut frames, mut frame_errors, mut saturations) = (0, 0, 0, 0, 0);
    let mut next = 0u64;
    'outer: while next < cfg.frames {
        let end = (next + BATCH_FRAMES).min(cfg.frames);
        for o in run_batch(plan, next..end, n0, exec)? {
            bits += bits_per_frame;
            bit_errors += o.bit_errors;
            frames += 1;
            frame_errors += u64::from(o.frame_error);
            saturations += o.saturations;
            if cfg.target_bit_errors > 0 && bit_errors >= cfg.target_bit_errors && bits >= cfg.min_bits {
                break 'outer;
            }
        }
        next = end;
    }
    let (zeta_r, zeta_t) = cfg.zeta();
    Ok(BerRecord {
        detector: cfg.detector,
        k: cfg.k,
        n_r: cfg.n_r,
        n_t: cfg.n_t,
        modulation: cfg.modulation,
        code: cfg.code,
        zeta_r,
        zeta_t,
        arithmetic: cfg.arithmetic,
        snr_db,
        bits,
        bit_errors,
        frames,
        frame_errors,
        saturations,
        cost: cost_report(cfg)?,
    })
}

/// One record per SNR point, in configuration order.
pub fn run_sweep(cfg: &SimConfig, exec: Execution) -> Result<Vec<BerRecord>> {
    let plan = Plan::new(cfg)?;
    cfg.snr_db
        .iter()
        .map(|&snr| run_point_with(&plan, snr, exec))
        .collect()
}
