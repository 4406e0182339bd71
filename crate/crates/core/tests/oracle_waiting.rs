//! Waiting-time checks against an absorbing Markov chain oracle built over
//! raw history states (the last up-to-(L-1) bits), solved exactly over
//! rationals. Independent of the correlation-polynomial implementation and
//! of the KMP automaton used by the empirical scan.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use rng_audit_core::stats::{
    waiting_time_moments, waiting_time_theoretical, waiting_times_empirical, PatternSpec,
};
use rng_audit_core::{sources, SourceConfig, SourceKind};

fn big(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Solves `a x = b` exactly by Gauss-Jordan elimination over rationals.
#[allow(clippy::needless_range_loop)]
fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col].clone();
        for c in 0..n {
            a[col][c] /= d.clone();
        }
        b[col] /= d;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let v = a[col][c].clone() * f.clone();
                    a[r][c] -= v;
                }
                let v = b[col].clone() * f;
                b[r] -= v;
            }
        }
    }
    b
}

/// Exact (mean, second moment) of the first-occurrence time of `pattern`,
/// from the chain whose state is the literal history window.
fn oracle_moments(pattern: &[bool]) -> (BigRational, BigRational) {
    let len = pattern.len();
    // States: all bit strings of length 0..=len-1 (the most recent bits).
    let mut index = HashMap::new();
    let mut states: Vec<Vec<bool>> = vec![];
    for l in 0..len {
        for v in 0..(1u32 << l) {
            let s: Vec<bool> = (0..l).map(|i| (v >> (l - 1 - i)) & 1 == 1).collect();
            index.insert(s.clone(), states.len());
            states.push(s);
        }
    }
    let n = states.len();
    let half = BigRational::new(1.into(), 2.into());
    // step(s, b) -> None when absorbed, else next state id
    let step = |s: &[bool], bit: bool| -> Option<usize> {
        let mut h = s.to_vec();
        h.push(bit);
        if h.len() == len && h == pattern {
            return None;
        }
        if h.len() == len {
            h.remove(0);
        }
        Some(index[&h])
    };
    // (I - Q) m1 = 1
    let mut a = vec![vec![BigRational::zero(); n]; n];
    let mut rhs = vec![big(1); n];
    for (i, s) in states.iter().enumerate() {
        a[i][i] = BigRational::one();
        for bit in [false, true] {
            if let Some(j) = step(s, bit) {
                a[i][j] -= half.clone();
            }
        }
    }
    let m1 = solve_rational(a.clone(), rhs.clone());
    // (I - Q) m2 = 1 + 2 Q m1
    for (i, s) in states.iter().enumerate() {
        for bit in [false, true] {
            if let Some(j) = step(s, bit) {
                rhs[i] += m1[j].clone(); // 2 * (1/2) * m1[j]
            }
        }
    }
    let m2 = solve_rational(a, rhs);
    (m1[0].clone(), m2[0].clone())
}

#[test]
fn correlation_polynomial_matches_chain_oracle_exactly() {
    // every pattern of length 1..=6: exact rational equality
    for len in 1..=6usize {
        for v in 0..(1u32 << len) {
            let bits: Vec<bool> = (0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect();
            let pattern = PatternSpec::new(bits.clone()).unwrap();
            let theory = waiting_time_theoretical(&pattern);
            let (mean, _) = oracle_moments(&bits);
            assert_eq!(
                mean,
                BigRational::from_integer((theory as i64).into()),
                "pattern {pattern}"
            );
        }
    }
}

#[test]
fn automaton_moments_match_chain_oracle() {
    for len in 1..=6usize {
        for v in 0..(1u32 << len) {
            let bits: Vec<bool> = (0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect();
            let pattern = PatternSpec::new(bits.clone()).unwrap();
            let (mean, var) = waiting_time_moments(&pattern);
            let (m1, m2) = oracle_moments(&bits);
            let m1f = rational_to_f64(&m1);
            let varf = rational_to_f64(&m2) - m1f * m1f;
            assert!((mean - m1f).abs() < 1e-6 * m1f, "pattern {pattern}: {mean} vs {m1f}");
            assert!(
                (var - varf).abs() < 1e-6 * varf.max(1.0),
                "pattern {pattern}: {var} vs {varf}"
            );
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}

#[test]
fn two_bit_patterns_have_exact_means_4_and_6() {
    for (text, want) in [("01", 4u128), ("10", 4), ("00", 6), ("11", 6)] {
        let p = PatternSpec::parse(text).unwrap();
        assert_eq!(waiting_time_theoretical(&p), want);
    }
}

#[test]
fn empirical_waiting_times_on_fair_simulation() {
    let s = sources::generate_bits(&SourceConfig::new(SourceKind::Fair, 20260809, 10_000_000))
        .unwrap();
    for (text, mean, var) in [("01", 4.0, 4.0), ("10", 4.0, 4.0), ("00", 6.0, 22.0), ("11", 6.0, 22.0)]
    {
        let pattern = PatternSpec::parse(text).unwrap();
        let est = waiting_times_empirical(&s, &pattern).unwrap();
        let se = (var / est.gaps as f64).sqrt();
        assert!(
            (est.mean_gap - mean).abs() < 5.0 * se,
            "{text}: mean {} vs {mean}, 5se = {}",
            est.mean_gap,
            5.0 * se
        );
        // coarse guide tolerances on top of the 5 SE band
        let guide = if mean == 4.0 { 0.02 } else { 0.03 };
        assert!((est.mean_gap - mean).abs() < guide, "{text}: {}", est.mean_gap);
    }
}
