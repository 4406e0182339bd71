//! Entropy implementations vs direct-enumeration oracles, envelope
//! extremality by exhaustive search, and the bound-curve scalings.

use rng_audit_core::entropy::{
    apriori_bound, blockwise_entropy, epsilon_to_sigma, min_entropy_conditional,
    one_flip_envelope, shannon_conditional, shannon_unconditional, EntropyKind,
};
use rng_audit_core::math::normal_upper_tail;
use rng_audit_core::stats::{tuple_counts, tuple_counts_in_range, TupleCounts, TupleMode};
use rng_audit_core::{sources, BitStream, SourceConfig, SourceKind};

/// Direct definition-level entropy evaluation, 0 log 0 = 0.
fn oracle_entropies(tc: &TupleCounts) -> (f64, f64) {
    let h2 = |a: u64, b: u64| -> f64 {
        let t = (a + b) as f64;
        let mut h = 0.0;
        for c in [a, b] {
            if c > 0 {
                let p = c as f64 / t;
                h -= p * p.log2();
            }
        }
        h
    };
    let (s0, s1) = (tc.c00 + tc.c01, tc.c10 + tc.c11);
    let total = (s0 + s1) as f64;
    let sh = (s0 as f64 / total) * h2(tc.c00, tc.c01) + (s1 as f64 / total) * h2(tc.c10, tc.c11);
    let guess = (tc.c00.max(tc.c01) + tc.c10.max(tc.c11)) as f64 / total;
    (sh, -guess.log2())
}

fn oracle_unconditional(zeros: u64, ones: u64) -> f64 {
    let t = (zeros + ones) as f64;
    let mut h = 0.0;
    for c in [zeros, ones] {
        if c > 0 {
            let p = c as f64 / t;
            h -= p * p.log2();
        }
    }
    h
}

#[test]
fn equations_match_enumeration_oracle_on_all_short_strings() {
    for len in 2..=12usize {
        for v in 0u32..(1 << len) {
            let bits: String = (0..len)
                .map(|i| if (v >> (len - 1 - i)) & 1 == 1 { '1' } else { '0' })
                .collect();
            let s = BitStream::from_ascii(&bits).unwrap();
            let ones = s.ones();
            let h = shannon_unconditional(len as u64 - ones, ones).unwrap();
            assert!(
                (h - oracle_unconditional(len as u64 - ones, ones)).abs() < 1e-12,
                "uncond {bits}"
            );
            let tc = tuple_counts(&s, TupleMode::Overlapping).unwrap();
            let (s0, s1) = tc.row_sums();
            if s0 == 0 || s1 == 0 {
                assert!(shannon_conditional(&tc).is_err());
                continue;
            }
            let (want_sh, want_min) = oracle_entropies(&tc);
            assert!(
                (shannon_conditional(&tc).unwrap() - want_sh).abs() < 1e-12,
                "shannon {bits}"
            );
            assert!(
                (min_entropy_conditional(&tc).unwrap() - want_min).abs() < 1e-12,
                "min {bits}"
            );
        }
    }
}

#[test]
fn blockwise_matches_oracle_on_random_stream_blocks() {
    let s = sources::generate_bits(&SourceConfig::new(SourceKind::Fair, 99, 4096)).unwrap();
    for size in 2..=16usize {
        let points = blockwise_entropy(&s, &[size]).unwrap();
        for p in &points {
            let start = (p.block_index * p.block_size) as usize;
            let ones = s.ones_in_range(start, size);
            assert!(
                (p.h_shannon_uncond - oracle_unconditional(size as u64 - ones, ones)).abs()
                    < 1e-12
            );
            let tc = tuple_counts_in_range(&s, start, size).unwrap();
            let zero_cell =
                tc.c00 == 0 || tc.c01 == 0 || tc.c10 == 0 || tc.c11 == 0;
            if zero_cell {
                assert!(p.degenerate, "block {start}+{size} should be degenerate");
                assert_eq!(p.h_shannon_cond, 0.0);
                assert_eq!(p.h_min_cond, 0.0);
            } else {
                let (want_sh, want_min) = oracle_entropies(&tc);
                assert!((p.h_shannon_cond - want_sh).abs() < 1e-12);
                assert!((p.h_min_cond - want_min).abs() < 1e-12);
            }
        }
    }
}

/// Realizability of a tuple-count vector as an actual bit string is what the
/// envelope is extremal over; exhaustive search over strings is the oracle.
#[test]
fn envelope_is_second_highest_over_all_strings_up_to_14() {
    for n in (4..=14usize).step_by(2) {
        let mut best_sh: f64 = 0.0;
        let mut best_min: f64 = 0.0;
        for v in 0u32..(1 << n) {
            let bits: String = (0..n)
                .map(|i| if (v >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' })
                .collect();
            let s = BitStream::from_ascii(&bits).unwrap();
            let tc = tuple_counts(&s, TupleMode::Overlapping).unwrap();
            let (sh, mn) = oracle_entropies(&tc);
            if sh < 1.0 - 1e-9 {
                best_sh = best_sh.max(sh);
            }
            if mn < 1.0 - 1e-9 {
                best_min = best_min.max(mn);
            }
        }
        let env_sh = one_flip_envelope(n, EntropyKind::ShannonCond).unwrap();
        let env_min = one_flip_envelope(n, EntropyKind::MinCond).unwrap();
        assert!(
            (env_sh - (1.0 - best_sh)).abs() < 1e-10,
            "n={n}: envelope {env_sh} vs exhaustive {}",
            1.0 - best_sh
        );
        assert!(
            (env_min - (1.0 - best_min)).abs() < 1e-10,
            "n={n}: envelope {env_min} vs exhaustive {}",
            1.0 - best_min
        );
    }
}

#[test]
fn forbidden_region_holds_exhaustively_at_n10() {
    let env_sh = one_flip_envelope(10, EntropyKind::ShannonCond).unwrap();
    let env_min = one_flip_envelope(10, EntropyKind::MinCond).unwrap();
    for v in 0u32..(1 << 10) {
        let bits: String = (0..10)
            .map(|i| if (v >> (9 - i)) & 1 == 1 { '1' } else { '0' })
            .collect();
        let s = BitStream::from_ascii(&bits).unwrap();
        let p = &blockwise_entropy(&s, &[10]).unwrap()[0];
        if !p.degenerate {
            assert!(p.deficit_shannon_cond >= env_sh - 1e-12, "{bits}");
            assert!(p.deficit_min_cond >= env_min - 1e-12, "{bits}");
        }
    }
}

#[test]
fn conditional_reduces_to_unconditional_when_rows_agree() {
    // p(x|y) identical across y: H(X|Y) = H(X-marginal of the successor)
    for (a, b, scale) in [(3u64, 7u64, 5u64), (1, 1, 9), (2, 5, 4)] {
        let tc = TupleCounts {
            mode: TupleMode::Overlapping,
            c00: a * scale,
            c01: b * scale,
            c10: a,
            c11: b,
        };
        let h = shannon_conditional(&tc).unwrap();
        let want = oracle_unconditional(a, b);
        assert!((h - want).abs() < 1e-12, "{a}/{b}: {h} vs {want}");
    }
}

#[test]
fn envelope_log_log_slopes() {
    // regression of log10(deficit) on log10(N) over N = 1e2..1e6
    let slope = |kind: EntropyKind| -> f64 {
        let ns = [100usize, 1_000, 10_000, 100_000, 1_000_000];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let d = one_flip_envelope(n, kind).unwrap();
                ((n as f64).log10(), d.log10())
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let s_min = slope(EntropyKind::MinCond);
    let s_sh = slope(EntropyKind::ShannonCond);
    assert!((s_min + 1.0).abs() < 0.02, "min envelope slope {s_min}");
    assert!((s_sh + 2.0).abs() < 0.02, "shannon envelope slope {s_sh}");
}

#[test]
fn tail_probability_round_trip_at_2_pow_minus_100() {
    let eps = 2f64.powi(-100);
    let m = epsilon_to_sigma(eps).unwrap();
    let tail = normal_upper_tail(m);
    assert!(tail / eps < 2.0 && eps / tail < 2.0, "m={m} tail={tail:e}");
    assert!((m - 11.5).abs() < 0.2, "{m}");
}

#[test]
fn large_sample_bound_values() {
    let n = 225_000_000u64;
    // 11.5 sigma: entropy in [0.995, 0.9995]
    let d = apriori_bound(n, 11.5, EntropyKind::MinCond).unwrap();
    assert!((0.995..=0.9995).contains(&(1.0 - d)), "{}", 1.0 - d);
    // 1 sigma: 1 - H within a factor of 5 of 5e-4
    let d1 = apriori_bound(n, 1.0, EntropyKind::MinCond).unwrap();
    assert!(d1 < 5e-4 * 5.0 && d1 > 5e-4 / 5.0, "{d1:e}");
}
