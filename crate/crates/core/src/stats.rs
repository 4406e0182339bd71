//! Exact counting statistics over bit streams.
//!
//! All counts are accumulated as integers (word-at-a-time popcounts where it
//! matters); floating point enters only when ratios are formed at the end,
//! so results are independent of traversal or partitioning order.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{BitStream, Error, Result};

/// Balance of ones vs zeros, with the finite-sample width
/// `sigma_single = sqrt(n p (1-p)) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BalanceStats {
    pub n: u64,
    pub ones: u64,
    pub p1: f64,
    pub sigma_single: f64,
}

/// How 2-bit tuples are paired up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TupleMode {
    /// Every adjacent pair `(i, i+1)`: `n - 1` tuples.
    Overlapping,
    /// Non-overlapping pairs `(2i, 2i+1)`: `floor(n / 2)` tuples.
    Disjoint,
}

/// Exact counts of the four 2-bit outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TupleCounts {
    pub mode: TupleMode,
    pub c00: u64,
    pub c01: u64,
    pub c10: u64,
    pub c11: u64,
}

impl TupleCounts {
    pub fn total(&self) -> u64 {
        self.c00 + self.c01 + self.c10 + self.c11
    }

    /// Tuples whose first bit is 0 / 1.
    pub fn row_sums(&self) -> (u64, u64) {
        (self.c00 + self.c01, self.c10 + self.c11)
    }
}

/// The four conditional probabilities `p(x|y)` plus the fair-coin width
/// `sigma_cond = 1 / sqrt(2 N)` for the sample size `N` they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionalProbs {
    pub p_0_given_0: f64,
    pub p_1_given_0: f64,
    pub p_0_given_1: f64,
    pub p_1_given_1: f64,
    pub sigma_cond: f64,
}

/// A bit pattern of length 1..=64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    bits: Vec<bool>,
}

impl PatternSpec {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() || bits.len() > 64 {
            return Err(Error::InvalidArgument("pattern length must be 1..=64"));
        }
        Ok(Self { bits })
    }

    /// Parses a pattern from `'0'`/`'1'` text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for (offset, ch) in text.char_indices() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c => return Err(Error::Format { offset, found: c }),
            }
        }
        Self::new(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[allow(clippy::len_without_is_empty)] // patterns are never empty
    pub fn len(&self) -> usize {
        self.bits.len()
    }
}

impl core::fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// Counts ones and forms the balance statistics.
pub fn balance(stream: &BitStream) -> Result<BalanceStats> {
    if stream.is_empty() {
        return Err(Error::InvalidArgument("balance requires a non-empty stream"));
    }
    let n = stream.len() as u64;
    let ones = stream.ones();
    let p1 = ones as f64 / n as f64;
    let sigma_single = libm::sqrt(n as f64 * p1 * (1.0 - p1)) / n as f64;
    Ok(BalanceStats { n, ones, p1, sigma_single })
}

/// Per-block balance plus the predicted fair-coin width for that block size.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockBalance {
    pub block_size: u64,
    /// `p1` of each full block, in stream order.
    pub p1: Vec<f64>,
    /// `sigma_single` of a fair coin at this block size: `1 / (2 sqrt(B))`.
    /// A prediction, not a fit.
    pub predicted_sigma_single: f64,
}

pub fn block_balance(stream: &BitStream, block_size: usize) -> Result<BlockBalance> {
    if block_size == 0 {
        return Err(Error::InvalidArgument("block_size must be >= 1"));
    }
    let blocks = stream.len() / block_size;
    if blocks == 0 {
        return Err(Error::InvalidArgument("need at least one full block"));
    }
    let p1 = (0..blocks)
        .map(|i| stream.ones_in_range(i * block_size, block_size) as f64 / block_size as f64)
        .collect();
    Ok(BlockBalance {
        block_size: block_size as u64,
        p1,
        predicted_sigma_single: 0.5 / libm::sqrt(block_size as f64),
    })
}

/// Overlapping tuple counts over `bits[start .. start + count]`.
///
/// Word-level: `c11` comes from the pair-indicator popcount, the rest follow
/// from the ones count and the boundary bits.
pub fn tuple_counts_in_range(stream: &BitStream, start: usize, count: usize) -> Result<TupleCounts> {
    if count < 2 {
        return Err(Error::InvalidArgument("tuple counts require >= 2 bits"));
    }
    let ones = stream.ones_in_range(start, count);
    let c11 = stream.pairs11_in_range(start, count);
    let first = u64::from(stream.get(start));
    let last = u64::from(stream.get(start + count - 1));
    let c01 = (ones - first) - c11;
    let c10 = (ones - last) - c11;
    let c00 = (count as u64 - 1) - c01 - c10 - c11;
    Ok(TupleCounts { mode: TupleMode::Overlapping, c00, c01, c10, c11 })
}

/// Exact 2-bit tuple counts for the whole stream.
pub fn tuple_counts(stream: &BitStream, mode: TupleMode) -> Result<TupleCounts> {
    match mode {
        TupleMode::Overlapping => tuple_counts_in_range(stream, 0, stream.len()),
        TupleMode::Disjoint => disjoint_tuple_counts(stream),
    }
}

fn disjoint_tuple_counts(stream: &BitStream) -> Result<TupleCounts> {
    let n = stream.len();
    if n < 2 {
        return Err(Error::InvalidArgument("tuple counts require >= 2 bits"));
    }
    let pairs = (n / 2) as u64;
    let valid_bits = n & !1; // pairs never straddle a word boundary
    // Stream position 2i sits at an odd word bit position (63, 61, ...).
    const EVEN_POS: u64 = 0xAAAA_AAAA_AAAA_AAAA;
    let mut c11 = 0u64;
    let mut c01 = 0u64;
    let mut c10 = 0u64;
    for (j, &w) in stream.words().iter().enumerate() {
        let word_bits = valid_bits.saturating_sub(j * 64).min(64);
        if word_bits == 0 {
            break;
        }
        let mut mask = EVEN_POS;
        if word_bits < 64 {
            mask &= !0u64 << (64 - word_bits);
        }
        let follow = w << 1; // aligns bit (p+1) under bit p
        c11 += u64::from((w & follow & mask).count_ones());
        c01 += u64::from((!w & follow & mask).count_ones());
        c10 += u64::from((w & !follow & mask).count_ones());
    }
    let c00 = pairs - c11 - c01 - c10;
    Ok(TupleCounts { mode: TupleMode::Disjoint, c00, c01, c10, c11 })
}

/// Conditional probabilities from overlapping tuple counts.
///
/// `p(0|y)` is computed as `1 - p(1|y)`, which keeps each row summing to
/// exactly 1.0 in floating point.
pub fn conditional_probs(stream: &BitStream) -> Result<ConditionalProbs> {
    let tc = tuple_counts(stream, TupleMode::Overlapping)?;
    let (s0, s1) = tc.row_sums();
    if s0 == 0 || s1 == 0 {
        return Err(Error::DegenerateStream(
            "a conditioning symbol never occurs; conditional probabilities undefined",
        ));
    }
    let p_1_given_0 = tc.c01 as f64 / s0 as f64;
    let p_1_given_1 = tc.c11 as f64 / s1 as f64;
    Ok(ConditionalProbs {
        p_0_given_0: 1.0 - p_1_given_0,
        p_1_given_0,
        p_0_given_1: 1.0 - p_1_given_1,
        p_1_given_1,
        sigma_cond: sigma_cond(stream.len() as u64),
    })
}

/// Fair-coin width of a conditional probability at sample size `n`:
/// `1 / sqrt(2 n)`. Depends only on `n`, never on the data.
pub fn sigma_cond(n: u64) -> f64 {
    1.0 / libm::sqrt(2.0 * n as f64)
}

/// Sample autocorrelation of the +-1 mapped stream for lags `0..=max_lag`.
///
/// `rho(h) = sum x_i x_{i+h} / (n - h)` with `x in {-1, +1}`; lag 0 is
/// exactly 1 and a perfectly alternating stream gives exactly -1 at lag 1.
pub fn autocorrelation(stream: &BitStream, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= stream.len() {
        return Err(Error::InvalidArgument("max_lag must be < stream length"));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let pairs = (stream.len() - lag) as f64;
        let mism = stream.mismatches_at_lag(lag) as f64;
        out.push(1.0 - 2.0 * mism / pairs);
    }
    Ok(out)
}

/// Expected number of fair tosses until the pattern first occurs: the sum of
/// `2^j` over all self-overlap lengths `j` (prefix of length `j` equal to
/// the suffix of length `j`), including `j = len`.
pub fn waiting_time_theoretical(pattern: &PatternSpec) -> u128 {
    let bits = pattern.bits();
    let len = bits.len();
    let mut sum = 0u128;
    for j in 1..=len {
        if bits[..j] == bits[len - j..] {
            sum += 1u128 << j;
        }
    }
    sum
}

/// KMP transition table over match states `0..len`; `table[2s + bit]` is the
/// next state. Reaching state `len` is a match.
fn pattern_automaton(pattern: &PatternSpec) -> Vec<usize> {
    let bits = pattern.bits();
    let len = bits.len();
    let mut fail = alloc::vec![0usize; len];
    let mut k = 0;
    for i in 1..len {
        while k > 0 && bits[i] != bits[k] {
            k = fail[k - 1];
        }
        if bits[i] == bits[k] {
            k += 1;
        }
        fail[i] = k;
    }
    let mut table = alloc::vec![0usize; 2 * len];
    for s in 0..len {
        for b in 0..2 {
            let bit = b == 1;
            let mut k = s;
            while k > 0 && bits[k] != bit {
                k = fail[k - 1];
            }
            if bits[k] == bit {
                k += 1;
            }
            table[2 * s + b] = k;
        }
    }
    table
}

/// Exact mean and variance of the first-occurrence time of `pattern` in
/// fair i.i.d. tosses, by first-step analysis on the pattern automaton.
pub fn waiting_time_moments(pattern: &PatternSpec) -> (f64, f64) {
    let len = pattern.len();
    let table = pattern_automaton(pattern);
    // (I - Q) m1 = 1 ; (I - Q) m2 = 1 + 2 Q m1, absorbing at state len.
    let build = |rhs: &[f64]| -> Vec<f64> {
        let mut a = alloc::vec![0.0f64; len * (len + 1)];
        for s in 0..len {
            a[s * (len + 1) + s] = 1.0;
            for b in 0..2 {
                let t = table[2 * s + b];
                if t < len {
                    a[s * (len + 1) + t] -= 0.5;
                }
            }
            a[s * (len + 1) + len] = rhs[s];
        }
        solve_dense(&mut a, len)
    };
    let m1 = build(&alloc::vec![1.0; len]);
    let mut rhs2 = alloc::vec![1.0f64; len];
    for s in 0..len {
        for b in 0..2 {
            let t = table[2 * s + b];
            if t < len {
                rhs2[s] += m1[t]; // 2 * 0.5 * m1[t]
            }
        }
    }
    let m2 = build(&rhs2);
    (m1[0], m2[0] - m1[0] * m1[0])
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` augmented
/// system stored row-major.
fn solve_dense(a: &mut [f64], n: usize) -> Vec<f64> {
    let cols = n + 1;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * cols + col]
                    .abs()
                    .partial_cmp(&a[j * cols + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for c in 0..cols {
                a.swap(pivot * cols + c, col * cols + c);
            }
        }
        let d = a[col * cols + col];
        for r in col + 1..n {
            let f = a[r * cols + col] / d;
            if f != 0.0 {
                for c in col..cols {
                    a[r * cols + c] -= f * a[col * cols + c];
                }
            }
        }
    }
    let mut x = alloc::vec![0.0f64; n];
    for r in (0..n).rev() {
        let mut v = a[r * cols + n];
        for c in r + 1..n {
            v -= a[r * cols + c] * x[c];
        }
        x[r] = v / a[r * cols + r];
    }
    x
}

/// Result of the non-overlapping (renewal) waiting-time scan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaitingTimeEstimate {
    pub pattern: String,
    /// Matches found by the renewal scan.
    pub occurrences: u64,
    /// Inter-occurrence distances used (`occurrences - 1`).
    pub gaps: u64,
    /// Mean distance in tosses between successive match start positions.
    pub mean_gap: f64,
}

/// Renewal scan: after each match, scanning resumes after the match end.
/// The mean of the start-to-start distances estimates the waiting time.
pub fn waiting_times_empirical(
    stream: &BitStream,
    pattern: &PatternSpec,
) -> Result<WaitingTimeEstimate> {
    let len = pattern.len();
    let table = pattern_automaton(pattern);
    let mut state = 0usize;
    let mut occurrences = 0u64;
    let mut prev_start: Option<usize> = None;
    let mut gap_sum = 0u64;
    let mut gaps = 0u64;
    let n = stream.len();
    for (j, &w) in stream.words().iter().enumerate() {
        let base = j * 64;
        let word_bits = (n - base).min(64);
        for k in 0..word_bits {
            let bit = ((w >> (63 - k)) & 1) as usize;
            state = table[2 * state + bit];
            if state == len {
                let start = base + k + 1 - len;
                if let Some(p) = prev_start {
                    gap_sum += (start - p) as u64;
                    gaps += 1;
                }
                prev_start = Some(start);
                occurrences += 1;
                state = 0;
            }
        }
    }
    if occurrences < 2 {
        return Err(Error::InsufficientData { needed: 2, got: occurrences });
    }
    Ok(WaitingTimeEstimate {
        pattern: alloc::format!("{pattern}"),
        occurrences,
        gaps,
        mean_gap: gap_sum as f64 / gaps as f64,
    })
}

/// Non-overlapping block frequencies of all `2^m` words.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BorelFrequencies {
    pub m: u32,
    pub block_count: u64,
    /// `counts[w]` = occurrences of the `m`-bit word `w` (lexicographic).
    pub counts: Vec<u64>,
    /// `max_w |counts[w] / blocks - 2^-m|`.
    pub max_deviation: f64,
    /// Borel-normality criterion scale `sqrt(log2(n) / n)` for the full
    /// stream length `n`; reported for information, not enforced.
    pub criterion_threshold: f64,
}

impl BorelFrequencies {
    /// Largest per-word z-score: `|freq - 2^-m| / sqrt(p (1-p) / blocks)`.
    pub fn max_sigma_distance(&self) -> f64 {
        let p = 1.0 / (1u64 << self.m) as f64;
        let sigma = libm::sqrt(p * (1.0 - p) / self.block_count as f64);
        let mut max_z = 0.0f64;
        for &c in &self.counts {
            let z = (c as f64 / self.block_count as f64 - p).abs() / sigma;
            if z > max_z {
                max_z = z;
            }
        }
        max_z
    }
}

pub fn borel_block_frequencies(stream: &BitStream, m: u32) -> Result<BorelFrequencies> {
    if m == 0 || m > 16 {
        return Err(Error::InvalidArgument("block length m must be 1..=16"));
    }
    let n = stream.len();
    let blocks = n / m as usize;
    if blocks == 0 {
        return Err(Error::InvalidArgument("need at least one full block"));
    }
    let mut counts = alloc::vec![0u64; 1usize << m];
    if m == 1 {
        let ones = stream.ones();
        counts[1] = ones;
        counts[0] = n as u64 - ones;
    } else {
        for i in 0..blocks {
            counts[stream.extract(i * m as usize, m as usize) as usize] += 1;
        }
    }
    let ideal = 1.0 / (1u64 << m) as f64;
    let mut max_deviation = 0.0f64;
    for &c in &counts {
        let dev = (c as f64 / blocks as f64 - ideal).abs();
        if dev > max_deviation {
            max_deviation = dev;
        }
    }
    Ok(BorelFrequencies {
        m,
        block_count: blocks as u64,
        counts,
        max_deviation,
        criterion_threshold: libm::sqrt(libm::log2(n as f64) / n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> BitStream {
        BitStream::from_ascii(text).unwrap()
    }

    #[test]
    fn balance_basics() {
        let b = balance(&s("0101")).unwrap();
        assert_eq!(b.p1, 0.5);
        assert_eq!(b.ones, 2);
        let b = balance(&s(&"01".repeat(50))).unwrap();
        assert_eq!(b.n, 100);
        assert!((b.sigma_single - 0.05).abs() < 1e-15);
        assert!(balance(&s("")).is_err());
    }

    #[test]
    fn block_balance_basics() {
        let all_ones = s(&"1".repeat(20));
        let bb = block_balance(&all_ones, 5).unwrap();
        assert_eq!(bb.p1, alloc::vec![1.0; 4]);
        let bb = block_balance(&s(&"01".repeat(100)), 50).unwrap();
        assert!((bb.predicted_sigma_single - 0.070710678).abs() < 1e-8);
        assert!(block_balance(&s("0101"), 5).is_err());
    }

    #[test]
    fn tuple_counts_examples() {
        let tc = tuple_counts(&s("0101"), TupleMode::Overlapping).unwrap();
        assert_eq!((tc.c00, tc.c01, tc.c10, tc.c11), (0, 2, 1, 0));
        assert_eq!(tc.total(), 3);
        let tc = tuple_counts(&s("0101"), TupleMode::Disjoint).unwrap();
        assert_eq!((tc.c00, tc.c01, tc.c10, tc.c11), (0, 2, 0, 0));
        assert!(tuple_counts(&s("1"), TupleMode::Overlapping).is_err());
    }

    #[test]
    fn disjoint_ignores_odd_tail_bit() {
        // 5 bits: pairs (01)(11), trailing 1 discarded
        let tc = tuple_counts(&s("01111"), TupleMode::Disjoint).unwrap();
        assert_eq!((tc.c00, tc.c01, tc.c10, tc.c11), (0, 1, 0, 1));
        assert_eq!(tc.total(), 2);
    }

    #[test]
    fn conditional_probs_alternating() {
        let cp = conditional_probs(&s(&"01".repeat(20))).unwrap();
        assert_eq!(cp.p_1_given_0, 1.0);
        assert_eq!(cp.p_0_given_1, 1.0);
        assert_eq!(cp.p_0_given_0 + cp.p_1_given_0, 1.0);
        assert_eq!(cp.p_0_given_1 + cp.p_1_given_1, 1.0);
    }

    #[test]
    fn conditional_probs_degenerate() {
        assert!(matches!(
            conditional_probs(&s("11111")),
            Err(Error::DegenerateStream(_))
        ));
    }

    #[test]
    fn sigma_cond_depends_only_on_n() {
        assert_eq!(sigma_cond(50), 0.1);
        let a = conditional_probs(&s(&"01".repeat(25))).unwrap();
        let b = conditional_probs(&s(&"0011".repeat(13).as_str()[..50])).unwrap();
        assert_eq!(a.sigma_cond, b.sigma_cond);
    }

    #[test]
    fn autocorrelation_basics() {
        let alt = s(&"01".repeat(64));
        let ac = autocorrelation(&alt, 3).unwrap();
        assert_eq!(ac[0], 1.0);
        assert_eq!(ac[1], -1.0);
        assert_eq!(ac[2], 1.0);
        assert!(autocorrelation(&s("01"), 2).is_err());
    }

    #[test]
    fn waiting_time_theoretical_values() {
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("01").unwrap()), 4);
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("10").unwrap()), 4);
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("11").unwrap()), 6);
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("00").unwrap()), 6);
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("111").unwrap()), 14);
        assert_eq!(waiting_time_theoretical(&PatternSpec::parse("1").unwrap()), 2);
    }

    #[test]
    fn waiting_time_moments_two_bit_patterns() {
        let (mean, var) = waiting_time_moments(&PatternSpec::parse("01").unwrap());
        assert!((mean - 4.0).abs() < 1e-9 && (var - 4.0).abs() < 1e-9, "{mean} {var}");
        let (mean, var) = waiting_time_moments(&PatternSpec::parse("11").unwrap());
        assert!((mean - 6.0).abs() < 1e-9 && (var - 22.0).abs() < 1e-9, "{mean} {var}");
    }

    #[test]
    fn waiting_empirical_hand_traceable() {
        let est = waiting_times_empirical(&s("110110"), &PatternSpec::parse("11").unwrap())
            .unwrap();
        assert_eq!(est.occurrences, 2);
        assert_eq!(est.gaps, 1);
        assert_eq!(est.mean_gap, 3.0);
    }

    #[test]
    fn waiting_empirical_renewal_no_overlap() {
        // "1111": an overlapping scan would see 3 matches of "11"; the
        // renewal scan sees 2 with a start-to-start gap of 2
        let est = waiting_times_empirical(&s("1111"), &PatternSpec::parse("11").unwrap())
            .unwrap();
        assert_eq!(est.occurrences, 2);
        assert_eq!(est.mean_gap, 2.0);
    }

    #[test]
    fn waiting_empirical_insufficient() {
        assert!(matches!(
            waiting_times_empirical(&s("0100"), &PatternSpec::parse("11").unwrap()),
            Err(Error::InsufficientData { needed: 2, got: 0 })
        ));
    }

    #[test]
    fn borel_examples() {
        let bf = borel_block_frequencies(&s("00011011"), 2).unwrap();
        assert_eq!(bf.counts, alloc::vec![1, 1, 1, 1]);
        assert_eq!(bf.max_deviation, 0.0);
        // m = 1 reduces to balance
        let stream = s("0011101");
        let bf = borel_block_frequencies(&stream, 1).unwrap();
        let b = balance(&stream).unwrap();
        assert_eq!(bf.counts[1], b.ones);
        assert!(borel_block_frequencies(&stream, 0).is_err());
        assert!(borel_block_frequencies(&stream, 17).is_err());
        assert!(borel_block_frequencies(&s("1"), 2).is_err());
    }

    #[test]
    fn pattern_spec_validation() {
        assert!(PatternSpec::parse("").is_err());
        assert!(PatternSpec::parse(&"1".repeat(65)).is_err());
        assert!(PatternSpec::parse("01a").is_err());
        assert_eq!(PatternSpec::parse("0110").unwrap().len(), 4);
    }
}
