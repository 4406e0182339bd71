//! Report schema and emission.
//!
//! The JSON form is schema-versioned and deterministic: identical input and
//! config produce byte-identical output (floats are rendered with a fixed
//! 17-significant-digit formatter, which also makes them round-trip
//! exactly). The CSV bundle writes one file per analysis.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rng_audit_core::entropy::{BoundCurve, EntropyPoint};
use rng_audit_core::feller::{FellerRow, RunMode};
use rng_audit_core::stats::{BalanceStats, BorelFrequencies, ConditionalProbs, TupleCounts};

use crate::audit::AuditConfig;
use crate::formats::fmt_f64;

pub const SCHEMA_VERSION: u32 = 1;

/// A statistic that exceeded its sigma threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFlag {
    pub statistic: String,
    pub observed: f64,
    pub expected: f64,
    pub sigma_distance: f64,
    pub threshold_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub input: String,
    pub length_bits: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
    pub tool_version: String,
    pub config: AuditConfig,
}

/// Per-size summary of the block balance scatter (the full per-block values
/// are available through the library; the report keeps the moments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockBalanceSummary {
    pub block_size: u64,
    pub blocks: u64,
    pub mean_p1: f64,
    /// Sample standard deviation of the block balances.
    pub stdev_p1: f64,
    /// Fair-coin prediction `1/(2 sqrt(B))`; not a fit.
    pub predicted_sigma_single: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeReport {
    pub pattern: String,
    /// Exact expected tosses (integer for a fair coin), as decimal text.
    pub theoretical: String,
    pub theoretical_tosses: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub occurrences: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gaps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    pub max_lag: u64,
    /// `coefficients[h]` is the lag-h coefficient; lag 0 is 1.
    pub coefficients: Vec<f64>,
    pub max_abs_sigma_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorelReport {
    #[serde(flatten)]
    pub frequencies: BorelFrequencies,
    pub max_sigma_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerReport {
    pub window: u64,
    pub mode: RunMode,
    /// Conservative count of independent windows (length / window) used for
    /// the propagated errors.
    pub effective_windows: f64,
    pub rows: Vec<FellerRow>,
}

/// Whole-stream entropies (the stream treated as a single sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSetEntropy {
    pub h_shannon_uncond: f64,
    pub h_shannon_cond: f64,
    pub h_min_cond: f64,
    pub deficit_shannon_uncond: f64,
    pub deficit_shannon_cond: f64,
    pub deficit_min_cond: f64,
}

/// Blockwise entropy summary at one block size (the per-block scatter goes
/// to CSV, not JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySizeSummary {
    pub block_size: u64,
    pub blocks: u64,
    pub degenerate_blocks: u64,
    pub mean_deficit_shannon_cond: f64,
    pub mean_deficit_min_cond: f64,
    pub min_deficit_shannon_cond: f64,
    pub min_deficit_min_cond: f64,
    pub max_deficit_min_cond: f64,
    /// One-flip envelopes exist only for even block sizes >= 4.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub envelope_shannon_cond: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub envelope_min_cond: Option<f64>,
    /// Min-entropy bound deficit at the flag threshold, when in domain.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_cond_bound_deficit: Option<f64>,
    /// Blocks whose min-entropy fell below that bound.
    pub min_cond_bound_violations: u64,
    /// Non-perfect blocks with a deficit below the one-flip envelope
    /// (mathematically impossible; nonzero values indicate a bug).
    pub forbidden_region_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub full_set: FullSetEntropy,
    pub sizes: Vec<EntropySizeSummary>,
    pub bound_curves: Vec<BoundCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub balance: BalanceStats,
    pub block_balance: Vec<BlockBalanceSummary>,
    pub tuples_overlapping: TupleCounts,
    pub tuples_disjoint: TupleCounts,
    pub conditionals: ConditionalProbs,
    pub waiting_times: Vec<WaitingTimeReport>,
    pub autocorrelation: AutocorrelationReport,
    pub borel: Vec<BorelReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feller: Option<FellerReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub entropy: Option<EntropyReport>,
    pub flags: Vec<AnomalyFlag>,
}

/// Serializer formatter that renders every float with 17 significant
/// digits; everything else is compact JSON.
struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:e}")
    }
}

/// Deterministic JSON for any serializable value.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value
        .serialize(&mut ser)
        .context("serializing report to JSON")?;
    Ok(String::from_utf8(out).expect("JSON is UTF-8"))
}

pub fn from_json(text: &str) -> Result<AuditReport> {
    serde_json::from_str(text).context("parsing report JSON")
}

/// Writes one CSV per analysis into `dir`. The entropy scatter is written
/// separately by [`write_entropy_scatter`] since the report only carries
/// summaries.
pub fn write_csv_bundle(report: &AuditReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<fs::File> {
        fs::File::create(dir.join(name)).with_context(|| format!("creating {name}"))
    };

    let mut f = open("balance.csv")?;
    writeln!(f, "n,ones,p1,sigma_single")?;
    let b = &report.balance;
    writeln!(f, "{},{},{},{}", b.n, b.ones, fmt_f64(b.p1), fmt_f64(b.sigma_single))?;

    let mut f = open("block_balance.csv")?;
    writeln!(f, "block_size,blocks,mean_p1,stdev_p1,predicted_sigma_single")?;
    for bb in &report.block_balance {
        writeln!(
            f,
            "{},{},{},{},{}",
            bb.block_size,
            bb.blocks,
            fmt_f64(bb.mean_p1),
            fmt_f64(bb.stdev_p1),
            fmt_f64(bb.predicted_sigma_single)
        )?;
    }

    let mut f = open("tuples.csv")?;
    writeln!(f, "mode,c00,c01,c10,c11")?;
    for tc in [&report.tuples_overlapping, &report.tuples_disjoint] {
        writeln!(
            f,
            "{},{},{},{},{}",
            match tc.mode {
                rng_audit_core::stats::TupleMode::Overlapping => "overlapping",
                rng_audit_core::stats::TupleMode::Disjoint => "disjoint",
            },
            tc.c00,
            tc.c01,
            tc.c10,
            tc.c11
        )?;
    }

    let mut f = open("conditionals.csv")?;
    writeln!(f, "p_0_given_0,p_1_given_0,p_0_given_1,p_1_given_1,sigma_cond")?;
    let c = &report.conditionals;
    writeln!(
        f,
        "{},{},{},{},{}",
        fmt_f64(c.p_0_given_0),
        fmt_f64(c.p_1_given_0),
        fmt_f64(c.p_0_given_1),
        fmt_f64(c.p_1_given_1),
        fmt_f64(c.sigma_cond)
    )?;

    let mut f = open("waiting_times.csv")?;
    writeln!(f, "pattern,theoretical,occurrences,gaps,mean_gap,standard_error")?;
    for w in &report.waiting_times {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            w.pattern,
            w.theoretical,
            w.occurrences.map(|v| v.to_string()).unwrap_or_default(),
            w.gaps.map(|v| v.to_string()).unwrap_or_default(),
            w.mean_gap.map(fmt_f64).unwrap_or_default(),
            w.standard_error.map(fmt_f64).unwrap_or_default()
        )?;
    }

    let mut f = open("autocorrelation.csv")?;
    writeln!(f, "lag,coefficient")?;
    for (lag, rho) in report.autocorrelation.coefficients.iter().enumerate() {
        writeln!(f, "{lag},{}", fmt_f64(*rho))?;
    }

    let mut f = open("borel.csv")?;
    writeln!(f, "m,word,count,frequency,ideal,max_deviation,criterion_threshold")?;
    for br in &report.borel {
        let fr = &br.frequencies;
        let ideal = 1.0 / (1u64 << fr.m) as f64;
        for (word, &count) in fr.counts.iter().enumerate() {
            writeln!(
                f,
                "{},{:0width$b},{},{},{},{},{}",
                fr.m,
                word,
                count,
                fmt_f64(count as f64 / fr.block_count as f64),
                fmt_f64(ideal),
                fmt_f64(fr.max_deviation),
                fmt_f64(fr.criterion_threshold),
                width = fr.m as usize
            )?;
        }
    }

    if let Some(feller) = &report.feller {
        let mut f = open("feller.csv")?;
        writeln!(f, "k,alpha_ideal,alpha_extracted,relative_change,windows,no_run_windows")?;
        for row in &feller.rows {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                row.k,
                fmt_f64(row.alpha_ideal),
                row.alpha_extracted.map(fmt_f64).unwrap_or_default(),
                row.relative_change.map(fmt_f64).unwrap_or_default(),
                row.windows_scanned,
                row.no_run_windows
            )?;
        }
    }

    if let Some(entropy) = &report.entropy {
        let mut f = open("entropy_summary.csv")?;
        writeln!(
            f,
            "block_size,blocks,degenerate_blocks,mean_deficit_shannon_cond,mean_deficit_min_cond,envelope_shannon_cond,envelope_min_cond,min_cond_bound_deficit,min_cond_bound_violations"
        )?;
        for s in &entropy.sizes {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{}",
                s.block_size,
                s.blocks,
                s.degenerate_blocks,
                fmt_f64(s.mean_deficit_shannon_cond),
                fmt_f64(s.mean_deficit_min_cond),
                s.envelope_shannon_cond.map(fmt_f64).unwrap_or_default(),
                s.envelope_min_cond.map(fmt_f64).unwrap_or_default(),
                s.min_cond_bound_deficit.map(fmt_f64).unwrap_or_default(),
                s.min_cond_bound_violations
            )?;
        }
        write_bound_curves(open("entropy_bounds.csv")?, &entropy.bound_curves)?;
    }

    let mut f = open("flags.csv")?;
    writeln!(f, "statistic,observed,expected,sigma_distance,threshold_sigma")?;
    for fl in &report.flags {
        writeln!(
            f,
            "{},{},{},{},{}",
            fl.statistic,
            fmt_f64(fl.observed),
            fmt_f64(fl.expected),
            fmt_f64(fl.sigma_distance),
            fmt_f64(fl.threshold_sigma)
        )?;
    }

    Ok(())
}

fn curve_label(curve: &BoundCurve) -> String {
    use rng_audit_core::entropy::{BoundVariant, EntropyKind};
    let kind = match curve.kind {
        EntropyKind::ShannonCond => "shannon_cond",
        EntropyKind::MinCond => "min_cond",
    };
    match curve.variant {
        BoundVariant::OneFlipEnvelope => format!("{kind}:one_flip_envelope"),
        BoundVariant::MSigmaBound => {
            format!("{kind}:{}sigma", curve.m_sigma.unwrap_or(f64::NAN))
        }
    }
}

/// Bound/envelope curves in plot-ready form, one labeled row per point.
pub fn write_bound_curves<W: Write>(mut out: W, curves: &[BoundCurve]) -> Result<()> {
    writeln!(out, "curve,n,one_minus_h")?;
    for curve in curves {
        let label = curve_label(curve);
        for p in &curve.points {
            writeln!(out, "{label},{},{}", p.n, fmt_f64(p.one_minus_h))?;
        }
    }
    Ok(())
}

/// Per-block entropy scatter in plot-ready form.
pub fn write_entropy_scatter<W: Write>(mut out: W, points: &[EntropyPoint]) -> Result<()> {
    writeln!(out, "N,block_index,kind,one_minus_H")?;
    for p in points {
        writeln!(
            out,
            "{},{},shannon_cond,{}",
            p.block_size,
            p.block_index,
            fmt_f64(p.deficit_shannon_cond)
        )?;
        writeln!(
            out,
            "{},{},min_cond,{}",
            p.block_size,
            p.block_index,
            fmt_f64(p.deficit_min_cond)
        )?;
    }
    Ok(())
}
