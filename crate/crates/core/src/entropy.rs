//! Shannon and min-entropy of bit streams, blockwise scatter, and the
//! a-priori finite-size bound curves.
//!
//! Entropies are per bit. The conditional variants work on overlapping
//! 2-bit tuple counts: the conditioning event is the previous bit. All
//! quantities are computed in "deficit" space (`1 - H`) so that values like
//! `1 - H ~ 1e-12` near the one-flip envelope keep full precision; `H`
//! itself is derived from the deficit.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::math::binary_entropy_deficit;
use crate::stats::{tuple_counts_in_range, TupleCounts};
use crate::{BitStream, Error, Result};

/// Which conditional entropy a bound or envelope refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EntropyKind {
    ShannonCond,
    MinCond,
}

/// Row deviation `delta = p(1|y) - 1/2`, exact in f64 for counts < 2^52.
#[inline]
fn row_delta(c_y0: u64, c_y1: u64) -> f64 {
    (c_y1 as f64 - c_y0 as f64) / (2.0 * (c_y0 + c_y1) as f64)
}

/// Unconditional Shannon entropy of a two-outcome count pair, bits/bit.
pub fn shannon_unconditional(count0: u64, count1: u64) -> Result<f64> {
    let total = count0 + count1;
    if total == 0 {
        return Err(Error::InvalidArgument("entropy requires at least one count"));
    }
    Ok(1.0 - binary_entropy_deficit(row_delta(count0, count1)))
}

fn require_both_rows(tc: &TupleCounts) -> Result<(u64, u64)> {
    let (s0, s1) = tc.row_sums();
    if s0 == 0 || s1 == 0 {
        return Err(Error::DegenerateStream(
            "a conditioning symbol never occurs; conditional entropy undefined",
        ));
    }
    Ok((s0, s1))
}

/// Deficit `1 - H_Sh(X|Y)` from overlapping tuple counts.
pub fn shannon_conditional_deficit(tc: &TupleCounts) -> Result<f64> {
    let (s0, s1) = require_both_rows(tc)?;
    let total = (s0 + s1) as f64;
    let d0 = binary_entropy_deficit(row_delta(tc.c00, tc.c01));
    let d1 = binary_entropy_deficit(row_delta(tc.c10, tc.c11));
    Ok((s0 as f64 / total) * d0 + (s1 as f64 / total) * d1)
}

/// Conditional Shannon entropy `H_Sh(X|Y) = sum_y p(y) H(X|Y=y)`, bits/bit.
pub fn shannon_conditional(tc: &TupleCounts) -> Result<f64> {
    Ok(1.0 - shannon_conditional_deficit(tc)?)
}

/// Deficit `1 - H_inf(X|Y)`. With integer counts,
/// `sum_y p(y) max_x p(x|y) = 1/2 (1 + (|c00-c01| + |c10-c11|) / total)`,
/// so the deficit is `log2(1 + imbalance / total)` computed via `log1p`.
pub fn min_entropy_conditional_deficit(tc: &TupleCounts) -> Result<f64> {
    let (s0, s1) = require_both_rows(tc)?;
    let imbalance = tc.c00.abs_diff(tc.c01) + tc.c10.abs_diff(tc.c11);
    Ok(libm::log1p(imbalance as f64 / (s0 + s1) as f64) / LN_2)
}

/// Conditional min-entropy `-log2(sum_y p(y) max_x p(x|y))`, bits/bit.
pub fn min_entropy_conditional(tc: &TupleCounts) -> Result<f64> {
    Ok(1.0 - min_entropy_conditional_deficit(tc)?)
}

/// Blockwise entropies of one block of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyPoint {
    pub block_size: u64,
    pub block_index: u64,
    pub h_shannon_uncond: f64,
    pub h_shannon_cond: f64,
    pub h_min_cond: f64,
    pub deficit_shannon_uncond: f64,
    pub deficit_shannon_cond: f64,
    pub deficit_min_cond: f64,
    /// Set when a conditioning symbol is absent or some conditional
    /// probability is exactly 0 or 1; such blocks record `H = 0`.
    pub degenerate: bool,
}

/// Per-block entropies for every requested block size.
///
/// Non-overlapping blocks; the remainder of each size is discarded.
/// Degenerate blocks (a conditioning symbol absent, or a conditional
/// probability of exactly 0 or 1) record zero conditional entropies and are
/// flagged rather than dropped.
pub fn blockwise_entropy(stream: &BitStream, block_sizes: &[usize]) -> Result<Vec<EntropyPoint>> {
    let mut out = Vec::new();
    for &size in block_sizes {
        if size < 2 {
            return Err(Error::InvalidArgument("block sizes must be >= 2"));
        }
        let blocks = stream.len() / size;
        if blocks == 0 {
            return Err(Error::InvalidArgument(
                "need at least one full block per requested size",
            ));
        }
        for b in 0..blocks {
            let start = b * size;
            let tc = tuple_counts_in_range(stream, start, size)?;
            let ones = stream.ones_in_range(start, size);
            let d_uncond = binary_entropy_deficit(row_delta(size as u64 - ones, ones));
            let (s0, s1) = tc.row_sums();
            let degenerate = s0 == 0
                || s1 == 0
                || tc.c00 == 0
                || tc.c01 == 0
                || tc.c10 == 0
                || tc.c11 == 0;
            let (d_sh, d_min) = if degenerate {
                (1.0, 1.0)
            } else {
                (
                    shannon_conditional_deficit(&tc)?,
                    min_entropy_conditional_deficit(&tc)?,
                )
            };
            out.push(EntropyPoint {
                block_size: size as u64,
                block_index: b as u64,
                h_shannon_uncond: 1.0 - d_uncond,
                h_shannon_cond: 1.0 - d_sh,
                h_min_cond: 1.0 - d_min,
                deficit_shannon_uncond: d_uncond,
                deficit_shannon_cond: d_sh,
                deficit_min_cond: d_min,
                degenerate,
            });
        }
    }
    Ok(out)
}

/// The second-highest achievable entropy for a length-`n` block, returned
/// as a deficit `1 - H`: the lower edge of the forbidden gap below perfect
/// entropy.
///
/// Realizable tuple counts must satisfy `|c01 - c10| <= 1`, and with `n - 1`
/// (odd) tuples the four counts cannot all balance, so the best
/// configuration keeps one row balanced and the other off by one, with the
/// uneven row as large as the cross-count constraint allows: row size `n/2`
/// for `n = 2 (mod 4)`, `n/2 + 1` for `n = 0 (mod 4)`. For min-entropy the
/// count imbalance is at least 1, giving exactly `log2(1 + 1/(n-1))`.
pub fn one_flip_envelope(n: usize, kind: EntropyKind) -> Result<f64> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidArgument(
            "one-flip envelope is defined for even n >= 4",
        ));
    }
    Ok(match kind {
        EntropyKind::MinCond => libm::log1p(1.0 / (n as f64 - 1.0)) / LN_2,
        EntropyKind::ShannonCond => {
            let uneven = if n % 4 == 2 { n / 2 } else { n / 2 + 1 };
            let weight = uneven as f64 / (n as f64 - 1.0);
            weight * binary_entropy_deficit(1.0 / (2.0 * uneven as f64))
        }
    })
}

/// A-priori bound from perturbing the fair-coin conditional probability by
/// `delta = m_sigma / sqrt(2 n)` and evaluating the exact entropy there.
/// Returns the deficit `1 - H`.
pub fn apriori_bound(n: u64, m_sigma: f64, kind: EntropyKind) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("sample size must be >= 2"));
    }
    if m_sigma.is_nan() || m_sigma <= 0.0 {
        return Err(Error::InvalidArgument("m_sigma must be > 0"));
    }
    let delta = m_sigma / libm::sqrt(2.0 * n as f64);
    if delta >= 0.5 {
        return Err(Error::OutOfDomain(alloc::format!(
            "m_sigma = {m_sigma} pushes the perturbed probability past 1 at n = {n}"
        )));
    }
    Ok(match kind {
        EntropyKind::ShannonCond => binary_entropy_deficit(delta),
        EntropyKind::MinCond => libm::log1p(2.0 * delta) / LN_2,
    })
}

/// First-order version of [`apriori_bound`], exposed for comparison.
pub fn apriori_bound_linearized(n: u64, m_sigma: f64, kind: EntropyKind) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("sample size must be >= 2"));
    }
    let delta = m_sigma / libm::sqrt(2.0 * n as f64);
    Ok(match kind {
        EntropyKind::ShannonCond => 2.0 * delta * delta / LN_2,
        EntropyKind::MinCond => 2.0 * delta / LN_2,
    })
}

/// Inverts [`apriori_bound`] in `m_sigma`: how many sigma a given deficit
/// corresponds to at sample size `n`. Deficits of 1 or more map to the
/// domain edge `delta = 1/2`.
pub fn sigma_equivalent(n: u64, deficit: f64, kind: EntropyKind) -> f64 {
    let scale = libm::sqrt(2.0 * n as f64);
    if deficit <= 0.0 {
        return 0.0;
    }
    if deficit >= 1.0 {
        return 0.5 * scale;
    }
    let delta = match kind {
        EntropyKind::MinCond => 0.5 * libm::expm1(deficit * LN_2),
        EntropyKind::ShannonCond => {
            let (mut lo, mut hi) = (0.0f64, 0.5f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if binary_entropy_deficit(mid) < deficit {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    delta * scale
}

/// Gaussian-tail translation of an outlier probability into a sigma count.
pub fn epsilon_to_sigma(epsilon: f64) -> Result<f64> {
    crate::math::normal_upper_quantile(epsilon)
}

/// An outlier probability with its sigma equivalent.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsilonBound {
    pub epsilon: f64,
    pub m_sigma: f64,
}

impl EpsilonBound {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Self { epsilon, m_sigma: epsilon_to_sigma(epsilon)? })
    }
}

/// Which bound family a curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundVariant {
    OneFlipEnvelope,
    MSigmaBound,
}

/// One point of a bound curve: block size and entropy deficit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub n: u64,
    pub one_minus_h: f64,
}

/// A bound/envelope curve sampled at a set of block sizes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundCurve {
    pub kind: EntropyKind,
    pub variant: BoundVariant,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub m_sigma: Option<f64>,
    pub points: Vec<CurvePoint>,
}

/// Samples a bound curve over `block_sizes`, skipping sizes where the bound
/// is out of domain (an m-sigma bound at too-small `n`).
pub fn bound_curve(
    kind: EntropyKind,
    variant: BoundVariant,
    m_sigma: Option<f64>,
    block_sizes: &[usize],
) -> Result<BoundCurve> {
    let mut points = Vec::new();
    for &n in block_sizes {
        let value = match variant {
            BoundVariant::OneFlipEnvelope => match one_flip_envelope(n, kind) {
                Ok(v) => v,
                Err(Error::InvalidArgument(_)) => continue,
                Err(e) => return Err(e),
            },
            BoundVariant::MSigmaBound => {
                let m = m_sigma.ok_or(Error::InvalidArgument(
                    "m_sigma bound curves need an m_sigma value",
                ))?;
                match apriori_bound(n as u64, m, kind) {
                    Ok(v) => v,
                    Err(Error::OutOfDomain(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        };
        points.push(CurvePoint { n: n as u64, one_minus_h: value });
    }
    Ok(BoundCurve { kind, variant, m_sigma, points })
}
