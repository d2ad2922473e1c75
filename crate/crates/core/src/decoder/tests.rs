use super::*;
use crate::codegen::{sample_random, Encoder};
use crate::ensemble::InnerEnsemble;
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn chain() -> SparseParityCheck {
    SparseParityCheck::from_edges(2, 3, [(0, 0), (0, 1), (1, 1), (1, 2)]).unwrap()
}

/// Cycle-free code: a star of checks hanging off column 0 plus a tail.
fn tree() -> SparseParityCheck {
    SparseParityCheck::from_edges(
        4,
        9,
        [
            (0, 0), (0, 1), (0, 2),
            (1, 0), (1, 3), (1, 4),
            (2, 4), (2, 5), (2, 6),
            (3, 2), (3, 7), (3, 8),
        ],
    )
    .unwrap()
}

fn sp(iters: usize) -> DecodeConfig {
    DecodeConfig {
        max_iters: iters,
        early_stop: false,
        ..DecodeConfig::default()
    }
}

fn noisy(n: usize, seed: u64, index: u64, sd: f64) -> Vec<f64> {
    let mut r = rng::keyed(seed, rng::stream::FRAME, index);
    let d = Normal::new(1.0, sd).unwrap();
    (0..n).map(|_| 2.0 * d.sample(&mut r) / (sd * sd)).collect()
}

#[test]
fn noiseless_frame_converges_in_one_iteration() {
    let h = sample_random(&InnerEnsemble::from_node(vec![0.0, 0.0, 0.0, 1.0], 6.0).unwrap(), 60, 1)
        .unwrap();
    for algorithm in [Algorithm::SumProduct, Algorithm::OffsetMinSum] {
        let cfg = DecodeConfig {
            algorithm,
            ..DecodeConfig::default()
        };
        let out = decode(&h, &vec![20.0; 60], &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.bits.iter().all(|&b| b == 0));
    }
}

#[test]
fn three_bit_chain_matches_map() {
    let h = chain();
    let llrs = [1.0, -0.5, 1.0];
    let out = decode(&h, &llrs, &sp(5)).unwrap();
    assert_eq!(out.bits, vec![0, 0, 0]);
    assert!(out.converged);
    assert_eq!(bitwise_map(&h, &llrs).unwrap(), out.bits);
    // Each degree-two check forwards its other input unchanged.
    let dec_post = {
        let mut d = Decoder::new(Arc::new(TannerGraph::new(&h)), sp(5)).unwrap();
        d.decode(&llrs).unwrap();
        d.posteriors()[1]
    };
    assert!((dec_post - 1.5).abs() < 1e-12);
}

#[test]
fn tree_decisions_equal_map() {
    let h = tree();
    for f in 0..300 {
        let llrs = noisy(9, 4, f, 1.0);
        let out = decode(&h, &llrs, &sp(6)).unwrap();
        assert_eq!(out.bits, bitwise_map(&h, &llrs).unwrap(), "frame {f}");
        let layered = DecodeConfig {
            schedule: Schedule::Layered,
            ..sp(6)
        };
        assert_eq!(decode(&h, &llrs, &layered).unwrap().bits, out.bits, "frame {f}");
    }
}

#[test]
fn zero_iterations_are_hard_decisions() {
    let llrs = [0.3, -2.0, 1.0];
    let out = decode(&chain(), &llrs, &sp(0)).unwrap();
    assert_eq!(out.bits, vec![0, 1, 0]);
    assert_eq!(out.iterations, 0);
    assert!(!out.converged);
}

#[test]
fn length_mismatch_is_an_error() {
    assert!(matches!(
        decode(&chain(), &[1.0, 1.0], &sp(1)),
        Err(Error::Dimension { expected: 3, got: 2 })
    ));
    let bad = DecodeConfig {
        offset: -0.1,
        ..DecodeConfig::default()
    };
    assert!(decode(&chain(), &[1.0; 3], &bad).is_err());
}

#[test]
fn offset_zero_is_plain_min_sum() {
    let mut out = Vec::new();
    let cfg = DecodeConfig {
        algorithm: Algorithm::OffsetMinSum,
        offset: 0.0,
        ..DecodeConfig::default()
    };
    check_update(cfg, &[1.5, -0.25, 3.0], &mut out);
    assert_eq!(out, vec![-0.25, 1.5, -0.25]);
    let cfg = DecodeConfig { offset: 0.5, ..cfg };
    check_update(cfg, &[1.5, -0.25, 3.0], &mut out);
    assert_eq!(out, vec![-0.0, 1.0, -0.0]);
}

#[test]
fn sum_product_kernel_matches_pairwise_boxplus() {
    let mut out = Vec::new();
    let input = [0.7, -1.2, 2.5, 0.0, 4.0];
    check_update(sp(1), &input, &mut out);
    for k in 0..input.len() {
        let others = input.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x);
        let want = crate::llr::boxplus_all(others);
        assert!((out[k] - want).abs() < 1e-12, "{k}");
    }
}

fn small_code() -> SparseParityCheck {
    let e = InnerEnsemble::from_node(vec![0.0, 0.1, 0.0, 0.5, 0.4], 12.0).unwrap();
    sample_random(&e, 600, 9).unwrap()
}

#[test]
fn sign_symmetry_under_codeword_flip() {
    let h = small_code();
    let enc = Encoder::new(&h);
    let mut r = rng::keyed(2, rng::stream::FRAME, 0);
    for algorithm in [Algorithm::SumProduct, Algorithm::OffsetMinSum] {
        for schedule in [Schedule::Flooding, Schedule::Layered] {
            let cfg = DecodeConfig {
                algorithm,
                schedule,
                max_iters: 12,
                ..DecodeConfig::default()
            };
            for f in 0..5 {
                let llrs = noisy(h.n_cols(), 11, f, 0.8);
                let msg: Vec<u8> = (0..enc.k()).map(|_| r.random::<u8>() & 1).collect();
                let x = enc.encode(&h, &msg).unwrap();
                let flipped: Vec<f64> =
                    llrs.iter().zip(&x).map(|(&l, &b)| if b == 1 { -l } else { l }).collect();
                let a = decode(&h, &llrs, &cfg).unwrap();
                let b = decode(&h, &flipped, &cfg).unwrap();
                let relative: Vec<u8> = b.bits.iter().zip(&x).map(|(p, q)| p ^ q).collect();
                assert_eq!(a.bits, relative);
                assert_eq!(a.iterations, b.iterations);
            }
        }
    }
}

#[test]
fn early_stop_changes_only_iteration_counts() {
    let h = small_code();
    for schedule in [Schedule::Flooding, Schedule::Layered] {
        let long = DecodeConfig {
            schedule,
            max_iters: 30,
            early_stop: false,
            ..DecodeConfig::default()
        };
        let short = DecodeConfig {
            early_stop: true,
            ..long
        };
        for f in 0..40 {
            let llrs = noisy(h.n_cols(), 12, f, 0.75);
            let a = decode(&h, &llrs, &long).unwrap();
            let b = decode(&h, &llrs, &short).unwrap();
            if b.converged {
                assert_eq!(a.bits, b.bits, "frame {f}");
                assert!(b.iterations <= a.iterations);
            }
        }
    }
}

#[test]
fn greedy_layers_decode_like_flooding_on_easy_frames() {
    let h = small_code();
    let flood = DecodeConfig {
        max_iters: 40,
        ..DecodeConfig::default()
    };
    let layered = DecodeConfig {
        schedule: Schedule::Layered,
        ..flood
    };
    let mut fewer = 0;
    for f in 0..20 {
        let llrs = noisy(h.n_cols(), 13, f, 0.55);
        let a = decode(&h, &llrs, &flood).unwrap();
        let b = decode(&h, &llrs, &layered).unwrap();
        if a.converged && b.converged {
            assert_eq!(a.bits, b.bits);
            fewer += usize::from(b.iterations <= a.iterations);
        }
    }
    assert!(fewer >= 15, "{fewer}");
}

#[test]
fn trace_starts_at_channel_error() {
    let h = small_code();
    let cfg = DecodeConfig {
        max_iters: 5,
        trace: true,
        early_stop: false,
        ..DecodeConfig::default()
    };
    let llrs = noisy(h.n_cols(), 14, 0, 0.8);
    let out = decode(&h, &llrs, &cfg).unwrap();
    let t = out.trace.unwrap();
    assert_eq!(t.len(), 6);
    let g = TannerGraph::new(&h);
    let wrong = g
        .traced
        .iter()
        .filter(|&&e| llrs[g.edge_col[e as usize] as usize] < 0.0)
        .count() as f64
        / g.traced.len() as f64;
    assert_eq!(t[0], wrong);
}

#[test]
fn simulation_is_worker_invariant() {
    let h = small_code();
    let stop = StopRule {
        min_frames: 20,
        min_errors: 50,
        max_frames: 200,
        ..StopRule::default()
    };
    let cfg = DecodeConfig::default();
    let a = simulate_ber(&h, 4.0, &cfg, &stop, 3, 1).unwrap();
    let b = simulate_ber(&h, 4.0, &cfg, &stop, 3, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.frames >= 20);
    assert!(a.errors >= 50 || a.frames == 200);
    assert_eq!(a.bits, a.frames * a.info_bits as u64);
    assert!((a.ber - a.errors as f64 / a.bits as f64).abs() < 1e-18);
}

#[test]
fn no_decoding_gives_channel_ber() {
    let h = small_code();
    let cfg = DecodeConfig {
        max_iters: 0,
        ..DecodeConfig::default()
    };
    let rep = simulate_ber(&h, 3.0, &cfg, &StopRule::frames(300), 5, 2).unwrap();
    let sd = (rep.p0 * (1.0 - rep.p0) / rep.bits as f64).sqrt();
    assert!((rep.ber - rep.p0).abs() < 3.0 * sd, "{} vs {}", rep.ber, rep.p0);
    let trace = iteration_trace(&h, 3.0, &DecodeConfig { max_iters: 0, ..cfg }, 300, 5, 2).unwrap();
    assert_eq!(trace.len(), 1);
}

#[test]
fn ber_csv_layout() {
    let h = small_code();
    let rep = simulate_ber(&h, 5.0, &DecodeConfig::default(), &StopRule::frames(2), 1, 1).unwrap();
    let mut buf = Vec::new();
    write_ber_csv(&mut buf, &[rep.clone(), rep]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,frames,bits,errors,ber,ci95,algorithm,schedule,iters");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("sum-product,flooding"));
}

#[test]
fn offset_sweep_runs_every_offset() {
    let h = small_code();
    let reps = offset_sweep(
        &h,
        4.0,
        &DecodeConfig::default(),
        &[0.3, 0.5, 0.7],
        &StopRule::frames(4),
        1,
        1,
    )
    .unwrap();
    assert_eq!(reps.len(), 3);
    assert!(reps.iter().all(|r| r.config.algorithm == Algorithm::OffsetMinSum));
    assert_eq!(reps[2].config.offset, 0.7);
}
