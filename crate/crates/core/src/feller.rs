//! Coin-tossing run constants: exact no-run counting via the generalized
//! (k-step) Fibonacci recurrence, the asymptotic constants `alpha_k` and
//! `beta_k`, and extraction of `alpha` from empirical data by sliding-window
//! scanning.
//!
//! `p(n, k)` is the probability that `n` fair tosses contain no run of `k`
//! ones (or, in [`RunMode::EitherSymbol`], no run of `k` equal symbols);
//! asymptotically `p(n, k) * alpha_k^(n+1) -> beta_k`.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_bigint::BigUint;

use crate::{BitStream, Error, Result};

/// Which runs count: runs of ones only (the classical constants) or runs of
/// either symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RunMode {
    #[default]
    OnesOnly,
    EitherSymbol,
}

/// The asymptotic constants for run length `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FellerConstants {
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
}

/// One row of the ideal-vs-extracted comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FellerRow {
    pub k: u32,
    pub alpha_ideal: f64,
    /// Absent when no qualifying window was observed ("not measurable").
    #[cfg_attr(
        feature = "serde",
        serde(skip_serializing_if = "Option::is_none", default)
    )]
    pub alpha_extracted: Option<f64>,
    /// `(alpha_ideal - alpha_extracted) / alpha_ideal`.
    #[cfg_attr(
        feature = "serde",
        serde(skip_serializing_if = "Option::is_none", default)
    )]
    pub relative_change: Option<f64>,
    pub windows_scanned: u64,
    pub no_run_windows: u64,
}

/// Number of length-`n` binary strings with no run of `k` consecutive ones,
/// exact. Satisfies `a_n = a_{n-1} + ... + a_{n-k}` with `a_n = 2^n` for
/// `n < k`.
pub fn count_no_run(n: usize, k: usize) -> BigUint {
    assert!(k >= 1, "run length must be >= 1");
    if n < k {
        return BigUint::from(1u8) << n;
    }
    // ring buffer of the last k values, seeded with 2^0 .. 2^(k-1)
    let mut window: Vec<BigUint> = (0..k).map(|i| BigUint::from(1u8) << i).collect();
    let mut current = BigUint::default();
    for _ in k..=n {
        current = window.iter().sum();
        window.rotate_left(1);
        window[k - 1] = current.clone();
    }
    current
}

/// Number of length-`n` binary strings with no run of `k` equal symbols:
/// `2 * C(n)` where `C` counts compositions of `n` into parts `1..k-1`.
pub fn count_no_run_either(n: usize, k: usize) -> BigUint {
    assert!(k >= 1, "run length must be >= 1");
    if n == 0 {
        return BigUint::from(1u8);
    }
    let parts = k - 1;
    if parts == 0 {
        return BigUint::default();
    }
    let mut c: Vec<BigUint> = Vec::with_capacity(n + 1);
    c.push(BigUint::from(1u8));
    for i in 1..=n {
        let lo = i.saturating_sub(parts);
        c.push(c[lo..i].iter().sum());
    }
    &c[n] << 1
}

/// Exact `p(n, k) = count / 2^n`, with a float view that stays accurate for
/// `n` far beyond the range where `2^n` fits in an `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoRunProbability {
    numerator: BigUint,
    tosses: usize,
}

impl NoRunProbability {
    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn tosses(&self) -> usize {
        self.tosses
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        if bits == 0 {
            return 0.0;
        }
        let shift = bits.saturating_sub(53);
        let top = (&self.numerator >> shift)
            .iter_u64_digits()
            .next()
            .unwrap_or(0);
        libm::scalbn(top as f64, (shift as i64 - self.tosses as i64) as i32)
    }
}

/// `p(n, k)` for the given mode, exact.
pub fn p_no_run(n: usize, k: usize, mode: RunMode) -> NoRunProbability {
    let numerator = match mode {
        RunMode::OnesOnly => count_no_run(n, k),
        RunMode::EitherSymbol => count_no_run_either(n, k),
    };
    NoRunProbability { numerator, tosses: n }
}

/// `x^k` by repeated squaring.
fn powi(x: f64, mut k: u32) -> f64 {
    let mut base = x;
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

/// Root in (1, 2) of `x^k = x^{k-1} + ... + 1`, by bisection on the
/// equivalent polynomial `x^k (x - 2) + 1`, converged to machine precision.
fn fibonacci_root(k: u32) -> f64 {
    debug_assert!(k >= 2);
    let g = |x: f64| powi(x, k) * (x - 2.0) + 1.0;
    let (mut lo, mut hi) = (1.5, 2.0);
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Ideal constants for runs of ones: `alpha = 2 / r_k` with `r_k` the
/// dominant root of the k-step Fibonacci recurrence, and
/// `beta = (2 - alpha) / (k + 1 - k alpha)`.
pub fn alpha_ideal(k: u32) -> Result<FellerConstants> {
    if !(2..=64).contains(&k) {
        return Err(Error::InvalidArgument("run length k must be in 2..=64"));
    }
    let r = fibonacci_root(k);
    let alpha = 2.0 / r;
    let beta = (2.0 - alpha) / ((k + 1) as f64 - k as f64 * alpha);
    Ok(FellerConstants { k, alpha, beta })
}

/// Ideal constants for runs of either symbol. The recurrence order drops by
/// one (`alpha` is the ones-only constant of `k - 1`); `beta` is taken from
/// the scaled-recurrence limit since the ones-only closed form does not
/// carry over.
pub fn alpha_ideal_either(k: u32) -> Result<FellerConstants> {
    if !(2..=64).contains(&k) {
        return Err(Error::InvalidArgument("run length k must be in 2..=64"));
    }
    if k == 2 {
        // only the two alternating strings survive: p = 2^(1-n), alpha = 2
        return Ok(FellerConstants { k, alpha: 2.0, beta: 4.0 });
    }
    let r = fibonacci_root(k - 1);
    let alpha = 2.0 / r;
    // C(n)/r^n -> A; iterate the scaled recurrence until stationary.
    let parts = (k - 1) as usize;
    let rinv: Vec<f64> = (1..=parts).map(|j| powi(1.0 / r, j as u32)).collect();
    let mut window = alloc::vec![0.0f64; parts];
    window[parts - 1] = 1.0; // C(0) = 1, scaled
    let mut value = 1.0;
    for _ in 0..4096 {
        let next: f64 = (0..parts).map(|j| window[parts - 1 - j] * rinv[j]).sum();
        window.rotate_left(1);
        window[parts - 1] = next;
        if (next - value).abs() <= 1e-16 * value.abs() {
            value = next;
            break;
        }
        value = next;
    }
    let beta = 4.0 * value / r;
    Ok(FellerConstants { k, alpha, beta })
}

/// Residuals `p(n, k) alpha^{n+1} - beta` for each requested `n` (ones-only
/// mode); their magnitude decays geometrically as `n` grows.
pub fn verify_asymptotics(k: u32, n_list: &[usize]) -> Result<Vec<f64>> {
    let c = alpha_ideal(k)?;
    Ok(n_list
        .iter()
        .map(|&n| {
            let p = p_no_run(n, k as usize, RunMode::OnesOnly).to_f64();
            p * libm::exp((n as f64 + 1.0) * libm::log(c.alpha)) - c.beta
        })
        .collect())
}

/// No-run window counts for every `k` in `k_min..=k_max` in one linear pass
/// over all sliding windows of length `window`.
///
/// Returns `(windows_scanned, counts)` where `counts[i]` is the number of
/// window offsets containing no run of `k_min + i` ones (or equal symbols).
pub fn sliding_no_run_counts(
    stream: &BitStream,
    window: usize,
    k_min: u32,
    k_max: u32,
    mode: RunMode,
) -> Result<(u64, Vec<u64>)> {
    if window == 0 || window > stream.len() {
        return Err(Error::InvalidArgument(
            "window must be 1..=stream length",
        ));
    }
    if k_min < 2 || k_min > k_max || k_max > 64 {
        return Err(Error::InvalidArgument("need 2 <= k_min <= k_max <= 64"));
    }
    let nk = (k_max - k_min + 1) as usize;
    // last_end[i]: latest position where a run of (k_min + i) ended; the
    // window starting at s contains that run iff last_end >= s + k - 1.
    let mut last_end = alloc::vec![-1i64; nk];
    let mut counts = alloc::vec![0u64; nk];
    let mut run: u32 = 0;
    let mut prev = false;
    let n = stream.len();
    for (j, &w) in stream.words().iter().enumerate() {
        let base = j * 64;
        let word_bits = (n - base).min(64);
        for t in 0..word_bits {
            let bit = (w >> (63 - t)) & 1 == 1;
            let e = base + t;
            match mode {
                RunMode::OnesOnly => run = if bit { run + 1 } else { 0 },
                RunMode::EitherSymbol => {
                    run = if e > 0 && bit == prev { run + 1 } else { 1 };
                    prev = bit;
                }
            }
            let reach = run.min(k_max);
            let mut k = k_min;
            while k <= reach {
                last_end[(k - k_min) as usize] = e as i64;
                k += 1;
            }
            if e + 1 >= window {
                let s = (e + 1 - window) as i64;
                for i in 0..nk {
                    if last_end[i] < s + (k_min as usize + i) as i64 - 1 {
                        counts[i] += 1;
                    }
                }
            }
        }
    }
    Ok(((n - window + 1) as u64, counts))
}

fn extracted_row(
    k: u32,
    window: usize,
    windows: u64,
    no_run: u64,
    ideal: FellerConstants,
) -> FellerRow {
    let (alpha_extracted, relative_change) = if no_run == 0 {
        (None, None)
    } else {
        let p_hat = no_run as f64 / windows as f64;
        let a = libm::exp(libm::log(ideal.beta / p_hat) / (window as f64 + 1.0));
        (Some(a), Some((ideal.alpha - a) / ideal.alpha))
    };
    FellerRow {
        k,
        alpha_ideal: ideal.alpha,
        alpha_extracted,
        relative_change,
        windows_scanned: windows,
        no_run_windows: no_run,
    }
}

/// Extracts `alpha` for a single run length from sliding windows of length
/// `window`: `alpha_hat = (beta_k / p_hat)^(1/(window+1))` with the ideal
/// `beta_k`. Rows with zero qualifying windows are marked not measurable.
pub fn alpha_extracted(
    stream: &BitStream,
    window: usize,
    k: u32,
    mode: RunMode,
) -> Result<FellerRow> {
    let ideal = match mode {
        RunMode::OnesOnly => alpha_ideal(k)?,
        RunMode::EitherSymbol => alpha_ideal_either(k)?,
    };
    let (windows, counts) = sliding_no_run_counts(stream, window, k, k, mode)?;
    Ok(extracted_row(k, window, windows, counts[0], ideal))
}

/// One [`FellerRow`] per `k` in `k_min..=k_max`, sharing a single scan.
pub fn feller_table(
    stream: &BitStream,
    window: usize,
    k_min: u32,
    k_max: u32,
    mode: RunMode,
) -> Result<Vec<FellerRow>> {
    let (windows, counts) = sliding_no_run_counts(stream, window, k_min, k_max, mode)?;
    (k_min..=k_max)
        .map(|k| {
            let ideal = match mode {
                RunMode::OnesOnly => alpha_ideal(k)?,
                RunMode::EitherSymbol => alpha_ideal_either(k)?,
            };
            Ok(extracted_row(
                k,
                window,
                windows,
                counts[(k - k_min) as usize],
                ideal,
            ))
        })
        .collect()
}

/// Propagated relative standard error of an extracted alpha: the binomial
/// error of `p_hat` over the effectively independent windows
/// (stream length / window, conservative since sliding windows correlate),
/// carried through the `1/(window+1)` root:
/// `d(alpha)/alpha = d(p)/p / (window + 1)`.
pub fn relative_alpha_standard_error(
    p_hat: f64,
    effective_windows: f64,
    window: usize,
) -> f64 {
    libm::sqrt(p_hat * (1.0 - p_hat) / effective_windows) / p_hat / (window as f64 + 1.0)
}

/// `beta_2` from the defining limit rather than the closed form; used as a
/// cross-check of the closed form.
pub fn beta_from_limit(k: u32, n: usize) -> Result<f64> {
    let c = alpha_ideal(k)?;
    let p = p_no_run(n, k as usize, RunMode::OnesOnly).to_f64();
    Ok(p * libm::exp((n as f64 + 1.0) * libm::log(c.alpha)))
}

/// Log-2 of `p(n, k)`; convenience for order-of-magnitude assertions.
pub fn log2_p_no_run(n: usize, k: usize, mode: RunMode) -> f64 {
    let p = p_no_run(n, k, mode);
    let bits = p.numerator().bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(53);
    let top = (p.numerator() >> shift).iter_u64_digits().next().unwrap_or(0);
    libm::log(top as f64) / LN_2 + shift as f64 - n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_small_cases() {
        assert_eq!(count_no_run(2, 2), BigUint::from(3u8)); // 00 01 10
        assert_eq!(count_no_run(5, 1), BigUint::from(1u8)); // only 00000
        assert_eq!(count_no_run(0, 3), BigUint::from(1u8));
        // k=2 gives the Fibonacci numbers: F(10) = 144
        assert_eq!(count_no_run(10, 2), BigUint::from(144u8));
    }

    fn brute_force(n: usize, k: usize, mode: RunMode) -> u64 {
        let mut ok = 0u64;
        for s in 0u64..(1 << n) {
            let mut run = 0u32;
            let mut prev = 2u64;
            let mut worst = 0u32;
            for i in 0..n {
                let b = (s >> i) & 1;
                let hit = match mode {
                    RunMode::OnesOnly => b == 1,
                    RunMode::EitherSymbol => true,
                };
                if hit && (mode == RunMode::OnesOnly || b == prev) {
                    run += 1;
                } else if hit {
                    run = 1;
                } else {
                    run = 0;
                }
                prev = b;
                worst = worst.max(run);
            }
            if (worst as usize) < k {
                ok += 1;
            }
        }
        ok
    }

    #[test]
    fn count_matches_exhaustive_enumeration() {
        for k in 1..=5 {
            for n in 0..=10 {
                assert_eq!(
                    count_no_run(n, k),
                    BigUint::from(brute_force(n, k, RunMode::OnesOnly)),
                    "ones n={n} k={k}"
                );
                assert_eq!(
                    count_no_run_either(n, k),
                    BigUint::from(brute_force(n, k, RunMode::EitherSymbol)),
                    "either n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn probability_views() {
        let p = p_no_run(2, 2, RunMode::OnesOnly);
        assert_eq!(p.to_f64(), 0.75);
        // run cannot fit: p = 1
        assert_eq!(p_no_run(3, 4, RunMode::OnesOnly).to_f64(), 1.0);
        // large n stays finite and sane
        let p = p_no_run(2000, 4, RunMode::OnesOnly).to_f64();
        assert!(p > 0.0 && p < 1e-20);
    }

    #[test]
    fn alpha_ideal_table_values() {
        assert!((alpha_ideal(2).unwrap().alpha - 1.23606798).abs() < 5e-9);
        assert!((alpha_ideal(4).unwrap().alpha - 1.03758013).abs() < 5e-9);
        assert!((alpha_ideal(15).unwrap().alpha - 1.00001526).abs() < 5e-9);
        assert!(alpha_ideal(1).is_err());
        assert!(alpha_ideal(65).is_err());
    }

    #[test]
    fn root_satisfies_recurrence() {
        for k in 2..=64 {
            let r = fibonacci_root(k);
            let lhs = powi(r, k);
            let rhs: f64 = (0..k).map(|i| powi(r, i)).sum();
            assert!((lhs - rhs).abs() < 1e-12 * lhs, "k={k}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn beta_closed_form_matches_limit() {
        let closed = alpha_ideal(2).unwrap().beta;
        let limit = beta_from_limit(2, 300).unwrap();
        assert!((closed - limit).abs() < 1e-9, "{closed} vs {limit}");
    }

    #[test]
    fn either_mode_alpha_beta_consistency() {
        // k=2: p(n) = 2^(1-n) so p * 2^(n+1) = 4 exactly
        let c = alpha_ideal_either(2).unwrap();
        assert_eq!((c.alpha, c.beta), (2.0, 4.0));
        // k>=3: check the DP limit against the computed constants
        for k in [3u32, 4, 6] {
            let c = alpha_ideal_either(k).unwrap();
            let n = 400;
            let p = p_no_run(n, k as usize, RunMode::EitherSymbol).to_f64();
            let lim = p * libm::exp((n as f64 + 1.0) * libm::log(c.alpha));
            assert!((lim - c.beta).abs() < 1e-8, "k={k}: {lim} vs {}", c.beta);
        }
    }

    #[test]
    fn all_zero_stream_alpha_is_beta_root() {
        let zeros = BitStream::from_ascii(&"0".repeat(600)).unwrap();
        let row = alpha_extracted(&zeros, 400, 5, RunMode::OnesOnly).unwrap();
        assert_eq!(row.no_run_windows, row.windows_scanned);
        let beta = alpha_ideal(5).unwrap().beta;
        let expect = libm::exp(libm::log(beta) / 401.0);
        assert!((row.alpha_extracted.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn sliding_counts_reject_bad_arguments() {
        let s = BitStream::from_ascii("0101").unwrap();
        assert!(sliding_no_run_counts(&s, 5, 2, 3, RunMode::OnesOnly).is_err());
        assert!(sliding_no_run_counts(&s, 2, 1, 3, RunMode::OnesOnly).is_err());
        assert!(sliding_no_run_counts(&s, 0, 2, 3, RunMode::OnesOnly).is_err());
    }

    #[test]
    fn sliding_counts_tiny_example() {
        // stream 110111, window 3: windows 110,101,011,111
        let s = BitStream::from_ascii("110111").unwrap();
        let (w, counts) = sliding_no_run_counts(&s, 3, 2, 3, RunMode::OnesOnly).unwrap();
        assert_eq!(w, 4);
        assert_eq!(counts[0], 1); // only 101 has no 11
        assert_eq!(counts[1], 3); // only 111 has a 111
    }
}
