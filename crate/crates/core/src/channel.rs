//! Channel realizations: i.i.d. and Kronecker-correlated Rayleigh fading,
//! additive complex Gaussian noise, and the SNR convention.
//!
//! SNR is the average SNR per receive antenna, `N_t * E_s / N0` with unit
//! symbol energy. Every generator is a pure function of its seed; the
//! stream behind a seed is ChaCha8 and Gaussian samples come from
//! `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{check_len, cholesky_factor, C64, ComplexMatrix, HermitianSplit};

/// Seedable generator used for every random stream in the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of trial `index` from a base seed (splitmix64 finalizer).
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One channel use: gains `h` (`n_r x n_t`) and noise variance per complex entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub n0: f64,
}

impl ChannelRealization {
    pub fn new(h: ComplexMatrix, n0: f64) -> Result<Self> {
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::Config(format!("noise variance {n0} must be finite and >= 0")));
        }
        Ok(ChannelRealization { h, n0 })
    }

    pub fn n_r(&self) -> usize {
        self.h.rows()
    }

    pub fn n_t(&self) -> usize {
        self.h.cols()
    }
}

/// Scalar correlation factors of the Kronecker model at the base station
/// (`zeta_r`) and user (`zeta_t`) sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKronecker")]
pub struct KroneckerSpec {
    zeta_r: f64,
    zeta_t: f64,
}

#[derive(Deserialize)]
struct RawKronecker {
    zeta_r: f64,
    zeta_t: f64,
}

impl TryFrom<RawKronecker> for KroneckerSpec {
    type Error = Error;

    fn try_from(raw: RawKronecker) -> Result<Self> {
        KroneckerSpec::new(raw.zeta_r, raw.zeta_t)
    }
}

impl KroneckerSpec {
    pub fn new(zeta_r: f64, zeta_t: f64) -> Result<Self> {
        for z in [zeta_r, zeta_t] {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::InvalidCorrelation(z));
            }
        }
        Ok(KroneckerSpec { zeta_r, zeta_t })
    }

    pub fn zeta_r(&self) -> f64 {
        self.zeta_r
    }

    pub fn zeta_t(&self) -> f64 {
        self.zeta_t
    }
}

/// `N0 = n_t / 10^(snr_db / 10)`.
pub fn snr_to_n0(n_t: usize, snr_db: f64) -> f64 {
    n_t as f64 / 10f64.powf(snr_db / 10.0)
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `n_r x n_t` matrix of i.i.d. CN(0, 1) entries drawn from `rng`.
pub fn gen_iid_with<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng, 1.0))
}

pub fn gen_iid(n_r: usize, n_t: usize, seed: u64) -> ComplexMatrix {
    gen_iid_with(n_r, n_t, &mut rng_from_seed(seed))
}

/// Exponential correlation matrix `R_ij = zeta^|i-j|`.
pub fn exponential_correlation(n: usize, zeta: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| C64::new(zeta.powi(i.abs_diff(j) as i32), 0.0))
}

fn correlation_root(n: usize, zeta: f64) -> Result<Option<ComplexMatrix>> {
    if zeta == 0.0 || n == 1 {
        return Ok(None);
    }
    cholesky_factor(&HermitianSplit::from_dense(&exponential_correlation(n, zeta))?).map(Some)
}

/// Square roots of the receive and transmit correlation matrices, computed
/// once per dimension pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerRoots {
    rr: Option<ComplexMatrix>,
    rt_adj: Option<ComplexMatrix>,
}

impl KroneckerRoots {
    pub fn new(n_r: usize, n_t: usize, spec: &KroneckerSpec) -> Result<Self> {
        Ok(KroneckerRoots {
            rr: correlation_root(n_r, spec.zeta_r)?,
            // real factor, so its transpose is its adjoint
            rt_adj: correlation_root(n_t, spec.zeta_t)?.map(|r| r.adjoint()),
        })
    }

    pub fn apply(&self, h_w: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut h = match &self.rr {
            Some(rr) => rr.matmul(h_w)?,
            None => h_w.clone(),
        };
        if let Some(rt) = &self.rt_adj {
            h = h.matmul(rt)?;
        }
        Ok(h)
    }
}

/// `R_r^{1/2} H_w R_t^{T/2}` with the square roots taken as Cholesky factors
/// of exponential correlation matrices.
pub fn apply_kronecker(h_w: &ComplexMatrix, spec: &KroneckerSpec) -> Result<ComplexMatrix> {
    KroneckerRoots::new(h_w.rows(), h_w.cols(), spec)?.apply(h_w)
}

/// `y = H s + n` with `n` drawn from `rng`.
pub fn transmit_with<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    s: &[C64],
    rng: &mut R,
) -> Result<Vec<C64>> {
    check_len(ch.n_t(), s.len())?;
    let mut y = ch.h.matvec(s)?;
    if ch.n0 > 0.0 {
        for yi in &mut y {
            *yi += complex_gaussian(rng, ch.n0);
        }
    }
    Ok(y)
}

pub fn transmit(ch: &ChannelRealization, s: &[C64], seed: u64) -> Result<Vec<C64>> {
    transmit_with(ch, s, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_n0(16, 0.0), 16.0);
        assert!((snr_to_n0(8, 10.0) - 0.8).abs() < 1e-15);
        assert_eq!(snr_to_n0(1, 0.0), 1.0);
    }

    #[test]
    fn iid_unit_variance() {
        // 1e6 entries
        let h = gen_iid(1000, 1000, 1);
        let mean = h.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn iid_deterministic() {
        assert_eq!(gen_iid(8, 4, 42), gen_iid(8, 4, 42));
        assert_ne!(gen_iid(8, 4, 42), gen_iid(8, 4, 43));
    }

    #[test]
    fn iid_columns_asymptotically_orthogonal() {
        let mut acc = 0.0;
        let trials = 200;
        for t in 0..trials {
            let h = gen_iid(128, 2, 100 + t);
            let c0 = h.column(0);
            let c1 = h.column(1);
            let ip: C64 = c0.iter().zip(&c1).map(|(a, b)| a.conj() * b).sum();
            acc += ip.norm() / 128.0;
        }
        assert!(acc / (trials as f64) < 0.1);
        // mean of the inner product itself, not its modulus
        let mut sum = C64::new(0.0, 0.0);
        for t in 0..trials {
            let h = gen_iid(128, 2, 900 + t);
            let ip: C64 = h.column(0).iter().zip(&h.column(1)).map(|(a, b)| a.conj() * b).sum();
            sum += ip / 128.0;
        }
        assert!((sum / trials as f64).norm() < 0.05);
    }

    #[test]
    fn kronecker_identity_cases() {
        let h = gen_iid(6, 3, 3);
        let spec = KroneckerSpec::new(0.0, 0.0).unwrap();
        assert_eq!(apply_kronecker(&h, &spec).unwrap(), h);

        let h1 = gen_iid(1, 1, 4);
        for z in [0.0, 0.3, 0.9, 1.0] {
            let spec = KroneckerSpec::new(z, z).unwrap();
            assert_eq!(apply_kronecker(&h1, &spec).unwrap(), h1);
        }
    }

    #[test]
    fn kronecker_rejects_out_of_range() {
        assert!(KroneckerSpec::new(-0.1, 0.0).is_err());
        assert!(KroneckerSpec::new(0.0, 1.5).is_err());
        // fully correlated rows make R singular
        let spec = KroneckerSpec::new(1.0, 0.0).unwrap();
        assert!(apply_kronecker(&gen_iid(4, 2, 1), &spec).is_err());
    }

    #[test]
    fn kronecker_column_correlation() {
        let spec = KroneckerSpec::new(0.0, 0.5).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        let trials = 10_000;
        let n_r = 16;
        for t in 0..trials {
            let h = apply_kronecker(&gen_iid(n_r, 2, 5_000 + t), &spec).unwrap();
            let ip: C64 = h.column(0).iter().zip(&h.column(1)).map(|(a, b)| a.conj() * b).sum();
            acc += ip;
        }
        let corr = acc.re / (trials as f64 * n_r as f64);
        assert!((corr - 0.5).abs() < 0.05, "{corr}");
    }

    #[test]
    fn kronecker_continuous_near_one() {
        let h = gen_iid(4, 4, 8);
        let a = apply_kronecker(&h, &KroneckerSpec::new(0.99, 0.99).unwrap()).unwrap();
        let b = apply_kronecker(&h, &KroneckerSpec::new(0.999, 0.999).unwrap()).unwrap();
        assert!(a.is_finite() && b.is_finite());
        assert!(a.max_abs_diff(&b) < 0.5);
    }

    #[test]
    fn noiseless_transmit() {
        let h = gen_iid(5, 3, 9);
        let ch = ChannelRealization::new(h.clone(), 0.0).unwrap();
        let s = vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(0.5, 0.5)];
        assert_eq!(transmit(&ch, &s, 1).unwrap(), h.matvec(&s).unwrap());

        let id = ChannelRealization::new(ComplexMatrix::identity(3), 0.0).unwrap();
        let e1 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(transmit(&id, &e1, 2).unwrap(), e1);
        assert!(transmit(&id, &e1[..2], 2).is_err());
    }

    #[test]
    fn noise_variance_estimate() {
        let n = 1_000_000;
        let ch = ChannelRealization::new(ComplexMatrix::zeros(n, 1), 0.37).unwrap();
        let y = transmit(&ch, &[C64::new(0.0, 0.0)], 77).unwrap();
        let var = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var / 0.37 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn received_energy() {
        let mut rng = rng_from_seed(10);
        let mut acc = 0.0;
        let trials = 2000;
        for _ in 0..trials {
            let h = gen_iid_with(32, 4, &mut rng);
            let s: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            acc += h.matvec(&s).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let per_antenna = acc / (trials as f64 * 32.0);
        // E|h_r^T s|^2 = N_t * E_s
        assert!((per_antenna / 4.0 - 1.0).abs() < 0.05, "{per_antenna}");
    }

    #[test]
    fn trial_seeds_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| trial_seed(1, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_eq!(trial_seed(5, 3), trial_seed(5, 3));
    }
}
