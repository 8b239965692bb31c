//! Randomized invariants over the public API.

use igs_core::channel::{gen_iid, rng_from_seed, snr_to_n0, transmit, ChannelRealization};
use igs_core::coding::{ConvCode, Interleaver};
use igs_core::detect::{
    igs_detect, igs_instrumented, initial_solution, nse_detect, preprocess, GramSystem, InitMode,
};
use igs_core::fxp::{compress_gram, decompress_gram, quantize, FxpFormat};
use igs_core::hwmodel::{count_mults, latency_estimate, Schedule, CRITICAL_PATH};
use igs_core::modem::{Constellation, Modulation};
use igs_core::numerics::{cholesky_factor, hermitian_matvec, inf_norm, solve_lower, sub, C64, ComplexMatrix};
use proptest::prelude::*;
use rand::Rng;

fn modulation() -> impl Strategy<Value = Modulation> {
    prop_oneof![Just(Modulation::Qpsk), Just(Modulation::Qam16), Just(Modulation::Qam64)]
}

fn system(n_r: usize, n_t: usize, snr_db: f64, seed: u64) -> GramSystem {
    let ch = ChannelRealization::new(gen_iid(n_r, n_t, seed), snr_to_n0(n_t, snr_db)).unwrap();
    let mut rng = rng_from_seed(seed ^ 0xABCD);
    let s: Vec<C64> = (0..n_t)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let y = transmit(&ch, &s, seed.wrapping_add(1)).unwrap();
    preprocess(&ch, &y).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=8).prop_flat_map(|n_t| (n_t..=4 * n_t + 8).prop_map(move |n_r| (n_r, n_t)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn regularized_gram_is_positive_definite((n_r, n_t) in dims(), snr in -5.0f64..30.0, seed: u64) {
        let g = system(n_r, n_t, snr, seed);
        let w = g.split();
        prop_assert!(w.d().iter().all(|&d| d >= g.n0()));
        let dense = w.to_dense();
        prop_assert!(dense.max_abs_diff(&dense.adjoint()) == 0.0);
        let c = cholesky_factor(w).unwrap();
        let back = c.matmul(&c.adjoint()).unwrap();
        prop_assert!(back.max_abs_diff(&dense) < 1e-9 * w.max_abs_diag());
    }

    #[test]
    fn lower_solve_recovers_rhs(n in 1usize..12, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let c = ComplexMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
            std::cmp::Ordering::Equal => C64::new(2.0 + rng.random::<f64>(), 0.0),
            std::cmp::Ordering::Greater => C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.5,
        });
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let x = solve_lower(&c, &b).unwrap();
        prop_assert!(inf_norm(&sub(&c.matvec(&x).unwrap(), &b)) < 1e-10);
    }

    #[test]
    fn gains_lie_in_unit_interval((n_r, n_t) in dims(), snr in -5.0f64..25.0, k in 0usize..4, seed: u64) {
        let g = system(n_r.max(2 * n_t), n_t, snr, seed);
        let r = igs_detect(&g, k, &Modulation::Qam16.constellation()).unwrap();
        for (&mu, &rho) in r.mu.iter().zip(&r.rho) {
            prop_assert!(mu > 0.0 && mu < 1.0);
            prop_assert!(rho > 0.0);
            prop_assert!((rho - mu / (1.0 - mu)).abs() <= 1e-12 * rho.max(1.0));
        }
    }

    #[test]
    fn two_term_neumann_is_the_igs_start((n_r, n_t) in dims(), snr in 0.0f64..20.0, seed: u64) {
        let g = system(n_r, n_t, snr, seed);
        let nse = nse_detect(&g, 2, &Modulation::Qpsk.constellation()).unwrap();
        prop_assert_eq!(nse.s_hat, initial_solution(&g, InitMode::Nse2).unwrap());
    }

    #[test]
    fn many_sweeps_solve_the_mmse_system(n_t in 1usize..8, seed: u64) {
        let g = system(8 * n_t, n_t, 10.0, seed);
        let s = igs_detect(&g, 60, &Modulation::Qpsk.constellation()).unwrap().s_hat;
        let r = sub(&hermitian_matvec(g.split(), &s).unwrap(), g.y_mf());
        prop_assert!(inf_norm(&r) < 1e-8 * (1.0 + inf_norm(g.y_mf())));
    }

    #[test]
    fn instrumented_count_matches_closed_form(n_t in 1usize..12, k in 0usize..6, seed: u64) {
        let g = system(2 * n_t, n_t, 5.0, seed);
        let m = igs_instrumented(&g, k).unwrap();
        let c = count_mults(n_t, k);
        prop_assert_eq!((m.core, m.gains), (c.core, c.gains));
        prop_assert_eq!(c.core, ((k + 2) * n_t * n_t) as u64);
    }

    #[test]
    fn latency_is_the_critical_path_sum(n_t in 1usize..64, extra in 0usize..200, k in 0usize..8, base in any::<bool>()) {
        let schedule = if base { Schedule::Baseline } else { Schedule::Rescheduled };
        let r = latency_estimate(n_t + extra, n_t, k, schedule).unwrap();
        let sum: u64 = CRITICAL_PATH.iter().map(|s| r.per_stage[*s]).sum();
        prop_assert_eq!(r.latency_cycles, sum);
        let next = latency_estimate(n_t + extra, n_t, k + 1, schedule).unwrap();
        prop_assert_eq!(next.latency_cycles - r.latency_cycles, r.per_stage["gs_iteration"]);
    }

    #[test]
    fn map_then_hard_demap_is_identity(m in modulation(), seed: u64) {
        let c = Constellation::new(m);
        let b = c.bits_per_symbol();
        let mut rng = rng_from_seed(seed);
        let bits: Vec<u8> = (0..b * 16).map(|_| rng.random_range(0..2u8)).collect();
        let syms = c.map(&bits).unwrap();
        let back: Vec<u8> = syms.iter().flat_map(|&s| c.demap_hard(s)).collect();
        prop_assert_eq!(back, bits);
    }

    #[test]
    fn bit_metric_sign_is_the_hard_decision(m in modulation(), re in -1.6f64..1.6, im in -1.6f64..1.6) {
        let c = Constellation::new(m);
        let z = C64::new(re, im);
        let hard = c.demap_hard(z);
        let mut l = vec![0.0; c.bits_per_symbol()];
        c.lambdas(z, &mut l);
        for (bit, (&v, &h)) in l.iter().zip(&hard).enumerate() {
            prop_assert!((v - c.lambda_exhaustive(z, bit).unwrap()).abs() < 1e-12);
            // positive favours bit 1; skip points on a decision boundary
            if v.abs() > 1e-9 {
                prop_assert_eq!(v > 0.0, h == 1);
            }
        }
    }

    #[test]
    fn axis_bits_depend_on_one_coordinate(m in modulation(), re in -1.5f64..1.5, im in -1.5f64..1.5, d in -1.0f64..1.0) {
        let c = Constellation::new(m);
        let half = c.bits_per_symbol() / 2;
        let mut a = vec![0.0; 2 * half];
        let mut b = a.clone();
        c.lambdas(C64::new(re, im), &mut a);
        c.lambdas(C64::new(re, im + d), &mut b);
        prop_assert_eq!(&a[..half], &b[..half]);
        c.lambdas(C64::new(re + d, im), &mut b);
        prop_assert_eq!(&a[half..], &b[half..]);
    }

    #[test]
    fn viterbi_inverts_noiseless_encoding(bits in prop::collection::vec(0u8..2, 1..200), scale in 0.01f64..100.0) {
        let code = ConvCode::standard();
        let coded = code.encode(&bits);
        prop_assert_eq!(coded.len(), 2 * (bits.len() + code.constraint_length() - 1));
        let llrs: Vec<f64> = coded.iter().map(|&b| if b == 1 { scale } else { -scale }).collect();
        prop_assert_eq!(code.viterbi_decode_soft(&llrs).unwrap(), bits);
    }

    #[test]
    fn viterbi_ignores_positive_llr_scaling(len in 1usize..80, seed: u64, scale in 0.001f64..1000.0) {
        let code = ConvCode::standard();
        let mut rng = rng_from_seed(seed);
        let llrs: Vec<f64> = (0..code.coded_len(len)).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let scaled: Vec<f64> = llrs.iter().map(|v| v * scale).collect();
        prop_assert_eq!(code.viterbi_decode_soft(&llrs).unwrap(), code.viterbi_decode_soft(&scaled).unwrap());
    }

    #[test]
    fn interleaver_round_trips(len in 0usize..500, seed: u64) {
        let il = Interleaver::random(len, seed);
        let x: Vec<u32> = (0..len as u32).collect();
        prop_assert_eq!(il.deinterleave(&il.interleave(&x)), x);
    }

    #[test]
    fn quantize_is_nearest_and_idempotent(total in 2u32..=32, frac_seed in any::<u32>(), x in -1e4f64..1e4) {
        let frac = 1 + frac_seed % (total - 1);
        let fmt = FxpFormat::new(total, frac, true).unwrap();
        let q = quantize(x, fmt);
        prop_assert_eq!(quantize(q.value(), fmt).raw, q.raw);
        prop_assert!(!quantize(q.value(), fmt).saturated);
        if q.saturated {
            prop_assert!(x > fmt.max_value() || x < fmt.min_value());
        } else {
            prop_assert!((q.value() - x).abs() <= fmt.lsb() / 2.0);
        }
    }

    #[test]
    fn compression_matches_direct_quantization(log_nt in 0u32..7, u in 0.0f64..1.0) {
        let n_t = 1usize << log_nt;
        let nt = n_t as f64;
        // both clusters: around 0 and around N_t
        let x = -nt / 2.0 + 2.0 * nt * u;
        let e = compress_gram(x, n_t);
        prop_assume!(!e.payload.saturated);
        let direct = quantize(x, FxpFormat::signed(15, e.payload.fmt.frac_bits()));
        prop_assert_eq!(decompress_gram(e, n_t).raw, direct.raw);
    }
}
