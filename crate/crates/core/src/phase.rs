//! Phase traces and threshold conversion of phase measurements to bits.
//!
//! Each trace entry pairs a control reading (taken with the source gated
//! off, as an independence check) with a toss reading (the measurement that
//! carries the bit). Only the toss phase determines the bit; control phases
//! are carried along for diagnostic statistics.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bitstream::{Builder, Origin};
use crate::{BitStream, Error, Result};

/// One paired (control, toss) phase measurement, phases in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseSample {
    pub index: u64,
    pub control_phase: f64,
    pub toss_phase: f64,
}

/// A validated sequence of phase measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    entries: Vec<PhaseSample>,
}

impl PhaseTrace {
    /// Validates that phases lie in `(-pi, pi]` and indices strictly increase.
    pub fn new(entries: Vec<PhaseSample>) -> Result<Self> {
        let mut prev: Option<u64> = None;
        for e in &entries {
            if !(e.control_phase > -PI && e.control_phase <= PI)
                || !(e.toss_phase > -PI && e.toss_phase <= PI)
            {
                return Err(Error::OutOfDomain(alloc::format!(
                    "phase out of (-pi, pi] at index {}",
                    e.index
                )));
            }
            if let Some(p) = prev {
                if e.index <= p {
                    return Err(Error::InvalidArgument(
                        "trace indices must be strictly increasing",
                    ));
                }
            }
            prev = Some(e.index);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PhaseSample] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Threshold used to turn toss phases into bits.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdConfig {
    /// Phases above this value map to 1, below to 0.
    pub threshold_phase: f64,
    /// Required separation between the two clusters, in cluster widths.
    /// Not enforced here; reported so callers can check it.
    pub min_separation_sigmas: f64,
    /// Half-width around the threshold inside which a toss is ambiguous.
    pub guard_band: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            threshold_phase: 0.0,
            min_separation_sigmas: 400.0,
            guard_band: 0.1,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_separation_sigmas.is_nan() || self.min_separation_sigmas <= 0.0 {
            return Err(Error::InvalidArgument("min_separation_sigmas must be > 0"));
        }
        if self.guard_band.is_nan() || self.guard_band < 0.0 {
            return Err(Error::InvalidArgument("guard_band must be >= 0"));
        }
        Ok(())
    }
}

/// Result of converting a phase trace into bits.
///
/// `cluster_centers[b]` is the mean toss phase of the class that mapped to
/// bit `b` (`NaN` if that class is empty). `cluster_width_sigma` is the
/// pooled per-class standard deviation, and `separation_sigmas` is
/// `|center1 - center0| / width` (infinite when the width is zero).
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub bits: BitStream,
    pub ambiguous_count: u64,
    pub cluster_centers: [f64; 2],
    pub cluster_width_sigma: f64,
    pub separation_sigmas: f64,
}

/// Thresholds a trace into bits, excluding ambiguous phases.
///
/// A toss phase within `guard_band` of the threshold is counted ambiguous
/// and excluded from the stream; otherwise the sign of
/// `toss_phase - threshold_phase` decides the bit.
pub fn from_phase_trace(trace: &PhaseTrace, cfg: &ThresholdConfig) -> Result<IngestReport> {
    cfg.validate()?;
    if trace.is_empty() {
        return Err(Error::InvalidArgument("phase trace is empty"));
    }
    let mut b = Builder::with_capacity(Origin::PhaseTrace, trace.len());
    let mut ambiguous = 0u64;
    let mut sum = [0.0f64; 2];
    let mut count = [0u64; 2];
    for e in trace.entries() {
        let d = e.toss_phase - cfg.threshold_phase;
        if d.abs() <= cfg.guard_band {
            ambiguous += 1;
            continue;
        }
        let bit = d > 0.0;
        b.push(bit);
        sum[usize::from(bit)] += e.toss_phase;
        count[usize::from(bit)] += 1;
    }
    if count[0] + count[1] == 0 {
        return Err(Error::DegenerateTrace { ambiguous });
    }
    let centers = [
        if count[0] > 0 { sum[0] / count[0] as f64 } else { f64::NAN },
        if count[1] > 0 { sum[1] / count[1] as f64 } else { f64::NAN },
    ];
    // Second pass for the pooled width; the trace is already in memory.
    let mut ssq = 0.0f64;
    for e in trace.entries() {
        let d = e.toss_phase - cfg.threshold_phase;
        if d.abs() <= cfg.guard_band {
            continue;
        }
        let c = centers[usize::from(d > 0.0)];
        ssq += (e.toss_phase - c) * (e.toss_phase - c);
    }
    let dof = (count[0] + count[1]).saturating_sub(2);
    let width = if dof > 0 { libm::sqrt(ssq / dof as f64) } else { 0.0 };
    let separation = (centers[1] - centers[0]).abs() / width;
    Ok(IngestReport {
        bits: b.finish(),
        ambiguous_count: ambiguous,
        cluster_centers: centers,
        cluster_width_sigma: width,
        separation_sigmas: separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from_tosses(tosses: &[f64]) -> PhaseTrace {
        PhaseTrace::new(
            tosses
                .iter()
                .enumerate()
                .map(|(i, &t)| PhaseSample {
                    index: i as u64,
                    control_phase: 0.1,
                    toss_phase: t,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)] // 1.5708 is the literal measurement
    fn two_clean_phases() {
        let trace = trace_from_tosses(&[1.5708, -1.5708]);
        let rep = from_phase_trace(&trace, &ThresholdConfig::default()).unwrap();
        assert_eq!(rep.bits.to_nist_ascii(), "10");
        assert_eq!(rep.ambiguous_count, 0);
        assert!((rep.cluster_centers[1] - PI / 2.0).abs() < 1e-4);
        assert!((rep.cluster_centers[0] + PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn zero_phase_is_ambiguous_inside_guard_band() {
        let trace = trace_from_tosses(&[0.0, 1.0, 0.05, -0.1]);
        let rep = from_phase_trace(&trace, &ThresholdConfig::default()).unwrap();
        // 0.0, 0.05 and -0.1 all fall inside the default 0.1 guard band
        assert_eq!(rep.ambiguous_count, 3);
        assert_eq!(rep.bits.to_nist_ascii(), "1");
    }

    #[test]
    fn all_ambiguous_is_degenerate() {
        let trace = trace_from_tosses(&[0.0, 0.05, -0.09]);
        assert!(matches!(
            from_phase_trace(&trace, &ThresholdConfig::default()),
            Err(Error::DegenerateTrace { ambiguous: 3 })
        ));
    }

    #[test]
    fn empty_trace_rejected() {
        let trace = PhaseTrace::new(Vec::new()).unwrap();
        assert!(from_phase_trace(&trace, &ThresholdConfig::default()).is_err());
    }

    #[test]
    fn trace_validation() {
        assert!(PhaseTrace::new(alloc::vec![PhaseSample {
            index: 0,
            control_phase: 4.0,
            toss_phase: 0.5,
        }])
        .is_err());
        assert!(PhaseTrace::new(alloc::vec![
            PhaseSample { index: 1, control_phase: 0.0, toss_phase: 0.5 },
            PhaseSample { index: 1, control_phase: 0.0, toss_phase: 0.5 },
        ])
        .is_err());
        // pi is inside the domain, just barely
        assert!(PhaseTrace::new(alloc::vec![PhaseSample {
            index: 0,
            control_phase: PI,
            toss_phase: PI,
        }])
        .is_ok());
    }

    #[test]
    fn thresholding_is_stateless_under_permutation() {
        let tosses = [1.2, -0.9, 0.7, -1.4, 1.0];
        let trace = trace_from_tosses(&tosses);
        let rep = from_phase_trace(&trace, &ThresholdConfig::default()).unwrap();
        let perm = [4usize, 2, 0, 3, 1];
        let permuted: Vec<f64> = perm.iter().map(|&i| tosses[i]).collect();
        let rep2 = from_phase_trace(&trace_from_tosses(&permuted), &ThresholdConfig::default())
            .unwrap();
        for (out_pos, &src) in perm.iter().enumerate() {
            assert_eq!(rep2.bits.get(out_pos), rep.bits.get(src));
        }
    }

    #[test]
    fn separation_infinite_when_width_zero() {
        let trace = trace_from_tosses(&[1.5, 1.5, -1.5, -1.5]);
        let rep = from_phase_trace(&trace, &ThresholdConfig::default()).unwrap();
        assert_eq!(rep.cluster_width_sigma, 0.0);
        assert!(rep.separation_sigmas.is_infinite());
    }
}
