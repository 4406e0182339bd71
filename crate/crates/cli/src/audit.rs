//! The all-in-one audit: runs every analysis over a stream, assembles the
//! report, and raises anomaly flags.
//!
//! Flags fire when a statistic sits more than `threshold_sigma` widths from
//! its fair-coin expectation. The default threshold of 11.5 sigma matches an
//! outlier probability of 2^-100; 5 is a useful exploratory setting. The
//! audit never declares a stream "random" — it can only report that no flag
//! was raised.

use anyhow::{anyhow, Result};
use serde::{Deserialize, Serialize};

use rng_audit_core::entropy::{
    apriori_bound, blockwise_entropy, bound_curve, min_entropy_conditional_deficit,
    one_flip_envelope, shannon_conditional_deficit, shannon_unconditional, sigma_equivalent,
    BoundCurve, BoundVariant, EntropyKind, EntropyPoint,
};
use rng_audit_core::feller::{feller_table, relative_alpha_standard_error, RunMode};
use rng_audit_core::stats::{
    autocorrelation, balance, block_balance, borel_block_frequencies, conditional_probs,
    tuple_counts, waiting_time_moments, waiting_time_theoretical, waiting_times_empirical,
    PatternSpec, TupleMode,
};
use rng_audit_core::{BitStream, Error};

use crate::report::{
    AnomalyFlag, AuditReport, AutocorrelationReport, BlockBalanceSummary, BorelReport,
    EntropyReport, EntropySizeSummary, FellerReport, FullSetEntropy, Metadata,
    WaitingTimeReport, SCHEMA_VERSION,
};

/// Sliding-window extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FellerParams {
    pub window: u64,
    pub k_min: u32,
    pub k_max: u32,
    pub mode: RunMode,
}

impl Default for FellerParams {
    fn default() -> Self {
        Self { window: 400, k_min: 2, k_max: 15, mode: RunMode::OnesOnly }
    }
}

/// Everything the audit needs besides the stream itself; echoed verbatim
/// into the report metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Block sizes for the balance and entropy scatter; empty = powers of
    /// ten from 100 with at least ten blocks each.
    pub block_sizes: Vec<u64>,
    pub max_lag: u64,
    /// Borel block lengths 1..=borel_max_m are analyzed.
    pub borel_max_m: u32,
    pub patterns: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feller: Option<FellerParams>,
    /// Whether to run the blockwise entropy analysis.
    pub entropy: bool,
    /// Sigma multiples for the a-priori entropy bound curves.
    pub bound_sigmas: Vec<f64>,
    pub threshold_sigma: f64,
    /// Worker threads for independent analyses; 0 = all available.
    pub threads: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            block_sizes: Vec::new(),
            max_lag: 100,
            borel_max_m: 4,
            patterns: ["01", "10", "00", "11"].map(String::from).to_vec(),
            feller: Some(FellerParams::default()),
            entropy: true,
            bound_sigmas: vec![1.0, 11.5],
            threshold_sigma: 11.5,
            threads: 1,
            timestamp: None,
        }
    }
}

/// The assembled report plus the raw entropy scatter (kept out of the JSON;
/// used for CSV emission and plotting).
#[derive(Debug)]
pub struct AuditOutput {
    pub report: AuditReport,
    pub entropy_points: Vec<EntropyPoint>,
}

fn auto_block_sizes(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut size = 100u64;
    while size.saturating_mul(10) <= n {
        out.push(size);
        size *= 10;
    }
    if out.is_empty() && n >= 20 {
        out.push((n / 10).max(2));
    }
    out
}

fn resolved_block_sizes(cfg: &AuditConfig, n: u64) -> Result<Vec<u64>> {
    if cfg.block_sizes.is_empty() {
        return Ok(auto_block_sizes(n));
    }
    for &s in &cfg.block_sizes {
        if s < 2 || s > n {
            return Err(anyhow!("block size {s} out of range for a {n}-bit stream"));
        }
    }
    Ok(cfg.block_sizes.clone())
}

struct WaitingOutcome {
    reports: Vec<WaitingTimeReport>,
    flags: Vec<AnomalyFlag>,
}

fn run_waiting(stream: &BitStream, cfg: &AuditConfig) -> Result<WaitingOutcome> {
    let mut reports = Vec::new();
    let mut flags = Vec::new();
    for text in &cfg.patterns {
        let pattern = PatternSpec::parse(text)?;
        let theory = waiting_time_theoretical(&pattern);
        let (mean_th, var_th) = waiting_time_moments(&pattern);
        let mut report = WaitingTimeReport {
            pattern: text.clone(),
            theoretical: theory.to_string(),
            theoretical_tosses: theory as f64,
            occurrences: None,
            gaps: None,
            mean_gap: None,
            standard_error: None,
        };
        match waiting_times_empirical(stream, &pattern) {
            Ok(est) => {
                let se = (var_th / est.gaps as f64).sqrt();
                report.occurrences = Some(est.occurrences);
                report.gaps = Some(est.gaps);
                report.mean_gap = Some(est.mean_gap);
                report.standard_error = Some(se);
                let sigma_distance = (est.mean_gap - mean_th).abs() / se;
                if sigma_distance > cfg.threshold_sigma {
                    flags.push(AnomalyFlag {
                        statistic: format!("waiting.{text}"),
                        observed: est.mean_gap,
                        expected: mean_th,
                        sigma_distance,
                        threshold_sigma: cfg.threshold_sigma,
                    });
                }
            }
            Err(Error::InsufficientData { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        reports.push(report);
    }
    Ok(WaitingOutcome { reports, flags })
}

fn run_autocorrelation(
    stream: &BitStream,
    cfg: &AuditConfig,
) -> Result<(AutocorrelationReport, Vec<AnomalyFlag>)> {
    let n = stream.len() as u64;
    let max_lag = cfg.max_lag.min(n.saturating_sub(1));
    let coefficients = autocorrelation(stream, max_lag as usize)?;
    let mut max_z = 0.0f64;
    let mut worst = 0.0f64;
    for (lag, &rho) in coefficients.iter().enumerate().skip(1) {
        let z = rho.abs() * ((n - lag as u64) as f64).sqrt();
        if z > max_z {
            max_z = z;
            worst = rho;
        }
    }
    let mut flags = Vec::new();
    if max_z > cfg.threshold_sigma {
        flags.push(AnomalyFlag {
            statistic: "autocorrelation.max_abs".into(),
            observed: worst,
            expected: 0.0,
            sigma_distance: max_z,
            threshold_sigma: cfg.threshold_sigma,
        });
    }
    Ok((
        AutocorrelationReport { max_lag, coefficients, max_abs_sigma_distance: max_z },
        flags,
    ))
}

fn run_feller(
    stream: &BitStream,
    params: &FellerParams,
    threshold_sigma: f64,
) -> Result<(FellerReport, Vec<AnomalyFlag>)> {
    let rows = feller_table(
        stream,
        params.window as usize,
        params.k_min,
        params.k_max,
        params.mode,
    )?;
    let effective_windows = stream.len() as f64 / params.window as f64;
    let mut flags = Vec::new();
    for row in &rows {
        let (Some(_), Some(rc)) = (row.alpha_extracted, row.relative_change) else {
            continue;
        };
        // the normal error model needs events on both sides
        if row.no_run_windows < 10 || row.windows_scanned - row.no_run_windows < 10 {
            continue;
        }
        let p_hat = row.no_run_windows as f64 / row.windows_scanned as f64;
        let se = relative_alpha_standard_error(p_hat, effective_windows, params.window as usize);
        let sigma_distance = rc.abs() / se;
        if sigma_distance > threshold_sigma {
            flags.push(AnomalyFlag {
                statistic: format!("feller.k{}", row.k),
                observed: row.alpha_extracted.unwrap(),
                expected: row.alpha_ideal,
                sigma_distance,
                threshold_sigma,
            });
        }
    }
    Ok((
        FellerReport {
            window: params.window,
            mode: params.mode,
            effective_windows,
            rows,
        },
        flags,
    ))
}

struct EntropyOutcome {
    report: EntropyReport,
    points: Vec<EntropyPoint>,
    flags: Vec<AnomalyFlag>,
}

fn run_entropy(
    stream: &BitStream,
    sizes: &[u64],
    bound_sigmas: &[f64],
    threshold_sigma: f64,
) -> Result<EntropyOutcome> {
    let n = stream.len() as u64;
    let usizes: Vec<usize> = sizes.iter().map(|&s| s as usize).collect();
    let points = blockwise_entropy(stream, &usizes)?;

    // full-set values
    let ones = stream.ones();
    let h_uncond = shannon_unconditional(n - ones, ones)?;
    let tc = tuple_counts(stream, TupleMode::Overlapping)?;
    let d_sh = shannon_conditional_deficit(&tc)?;
    let d_min = min_entropy_conditional_deficit(&tc)?;
    let full_set = FullSetEntropy {
        h_shannon_uncond: h_uncond,
        h_shannon_cond: 1.0 - d_sh,
        h_min_cond: 1.0 - d_min,
        deficit_shannon_uncond: 1.0 - h_uncond,
        deficit_shannon_cond: d_sh,
        deficit_min_cond: d_min,
    };

    let mut flags = Vec::new();
    for (kind, deficit, name, observed) in [
        (EntropyKind::ShannonCond, d_sh, "entropy.shannon_cond", full_set.h_shannon_cond),
        (EntropyKind::MinCond, d_min, "entropy.min_cond", full_set.h_min_cond),
    ] {
        let sigma_distance = sigma_equivalent(n, deficit, kind);
        if sigma_distance > threshold_sigma {
            flags.push(AnomalyFlag {
                statistic: name.into(),
                observed,
                expected: 1.0,
                sigma_distance,
                threshold_sigma,
            });
        }
    }

    let mut summaries = Vec::new();
    for &size in sizes {
        let in_size: Vec<&EntropyPoint> =
            points.iter().filter(|p| p.block_size == size).collect();
        let blocks = in_size.len() as u64;
        let degenerate = in_size.iter().filter(|p| p.degenerate).count() as u64;
        let live: Vec<&&EntropyPoint> = in_size.iter().filter(|p| !p.degenerate).collect();
        // with no live blocks every deficit is exactly 1
        let agg = |f: &dyn Fn(&EntropyPoint) -> f64, init: f64, pick: &dyn Fn(f64, f64) -> f64| {
            if live.is_empty() {
                1.0
            } else {
                live.iter().fold(init, |acc, p| pick(acc, f(p)))
            }
        };
        let mean = |f: &dyn Fn(&EntropyPoint) -> f64| {
            if live.is_empty() {
                1.0
            } else {
                live.iter().map(|p| f(p)).sum::<f64>() / live.len() as f64
            }
        };
        let envelope_sh = one_flip_envelope(size as usize, EntropyKind::ShannonCond).ok();
        let envelope_min = one_flip_envelope(size as usize, EntropyKind::MinCond).ok();
        let bound = apriori_bound(size, threshold_sigma, EntropyKind::MinCond).ok();
        let violations = match bound {
            Some(b) => in_size.iter().filter(|p| p.deficit_min_cond > b).count() as u64,
            None => 0,
        };
        let forbidden = match (envelope_sh, envelope_min) {
            (Some(es), Some(em)) => in_size
                .iter()
                .filter(|p| !p.degenerate)
                .filter(|p| {
                    p.deficit_shannon_cond < es - 1e-12 || p.deficit_min_cond < em - 1e-12
                })
                .count() as u64,
            _ => 0,
        };
        summaries.push(EntropySizeSummary {
            block_size: size,
            blocks,
            degenerate_blocks: degenerate,
            mean_deficit_shannon_cond: mean(&|p| p.deficit_shannon_cond),
            mean_deficit_min_cond: mean(&|p| p.deficit_min_cond),
            min_deficit_shannon_cond: agg(&|p| p.deficit_shannon_cond, f64::INFINITY, &f64::min),
            min_deficit_min_cond: agg(&|p| p.deficit_min_cond, f64::INFINITY, &f64::min),
            max_deficit_min_cond: agg(&|p| p.deficit_min_cond, f64::NEG_INFINITY, &f64::max),
            envelope_shannon_cond: envelope_sh,
            envelope_min_cond: envelope_min,
            min_cond_bound_deficit: bound,
            min_cond_bound_violations: violations,
            forbidden_region_violations: forbidden,
        });
    }

    let mut bound_curves: Vec<BoundCurve> = Vec::new();
    for kind in [EntropyKind::ShannonCond, EntropyKind::MinCond] {
        bound_curves.push(bound_curve(kind, BoundVariant::OneFlipEnvelope, None, &usizes)?);
        for &m in bound_sigmas {
            bound_curves.push(bound_curve(kind, BoundVariant::MSigmaBound, Some(m), &usizes)?);
        }
    }

    Ok(EntropyOutcome {
        report: EntropyReport { full_set, sizes: summaries, bound_curves },
        points,
        flags,
    })
}

/// Standalone blockwise entropy analysis: summaries, bound curves, and the
/// per-block scatter. `sizes` empty picks the same defaults as the audit.
pub fn entropy_report(
    stream: &BitStream,
    sizes: &[u64],
    bound_sigmas: &[f64],
    threshold_sigma: f64,
) -> Result<(EntropyReport, Vec<EntropyPoint>)> {
    let sizes = if sizes.is_empty() {
        auto_block_sizes(stream.len() as u64)
    } else {
        sizes.to_vec()
    };
    let outcome = run_entropy(stream, &sizes, bound_sigmas, threshold_sigma)?;
    Ok((outcome.report, outcome.points))
}

/// Runs every analysis and assembles the report. Deterministic for a given
/// stream and config, independent of the thread count.
pub fn run_audit(stream: &BitStream, input_name: &str, cfg: &AuditConfig) -> Result<AuditOutput> {
    let n = stream.len() as u64;
    if n < 2 {
        return Err(anyhow!("audit requires at least 2 bits, got {n}"));
    }
    let sizes = resolved_block_sizes(cfg, n)?;
    let feller_params = match &cfg.feller {
        Some(p) if p.window <= n => Some(*p),
        _ => None,
    };

    let threads = if cfg.threads == 0 {
        std::thread::available_parallelism().map_or(1, |v| v.get())
    } else {
        cfg.threads as usize
    };

    type Peripheral = (
        Result<WaitingOutcome>,
        Result<(AutocorrelationReport, Vec<AnomalyFlag>)>,
        Option<Result<(FellerReport, Vec<AnomalyFlag>)>>,
        Option<Result<EntropyOutcome>>,
    );
    let run_entropy_opt = || {
        cfg.entropy
            .then(|| run_entropy(stream, &sizes, &cfg.bound_sigmas, cfg.threshold_sigma))
    };
    let (waiting, autocorr, feller, entropy): Peripheral = if threads > 1 {
        std::thread::scope(|s| {
            let h_w = s.spawn(|| run_waiting(stream, cfg));
            let h_a = s.spawn(|| run_autocorrelation(stream, cfg));
            let h_f = feller_params
                .as_ref()
                .map(|p| s.spawn(|| run_feller(stream, p, cfg.threshold_sigma)));
            let e = run_entropy_opt();
            (
                h_w.join().expect("waiting-time worker panicked"),
                h_a.join().expect("autocorrelation worker panicked"),
                h_f.map(|h| h.join().expect("feller worker panicked")),
                e,
            )
        })
    } else {
        (
            run_waiting(stream, cfg),
            run_autocorrelation(stream, cfg),
            feller_params.as_ref().map(|p| run_feller(stream, p, cfg.threshold_sigma)),
            run_entropy_opt(),
        )
    };
    let waiting = waiting?;
    let (autocorr_report, autocorr_flags) = autocorr?;
    let feller = feller.transpose()?;
    let (entropy_section, entropy_points, entropy_flags) = match entropy.transpose()? {
        Some(e) => (Some(e.report), e.points, e.flags),
        None => (None, Vec::new(), Vec::new()),
    };

    let bal = balance(stream)?;
    let mut flags = Vec::new();
    {
        // balance against the fair-coin width 1/(2 sqrt(n))
        let sigma = 0.5 / (n as f64).sqrt();
        let sigma_distance = (bal.p1 - 0.5).abs() / sigma;
        if sigma_distance > cfg.threshold_sigma {
            flags.push(AnomalyFlag {
                statistic: "balance.p1".into(),
                observed: bal.p1,
                expected: 0.5,
                sigma_distance,
                threshold_sigma: cfg.threshold_sigma,
            });
        }
    }

    let block_balance_summaries: Vec<BlockBalanceSummary> = sizes
        .iter()
        .map(|&size| {
            let bb = block_balance(stream, size as usize)?;
            let blocks = bb.p1.len() as f64;
            let mean = bb.p1.iter().sum::<f64>() / blocks;
            let var = if bb.p1.len() < 2 {
                0.0
            } else {
                bb.p1.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (blocks - 1.0)
            };
            Ok(BlockBalanceSummary {
                block_size: size,
                blocks: bb.p1.len() as u64,
                mean_p1: mean,
                stdev_p1: var.sqrt(),
                predicted_sigma_single: bb.predicted_sigma_single,
            })
        })
        .collect::<Result<_>>()?;

    let conditionals = conditional_probs(stream)?;
    for (name, p) in [
        ("conditional.p(1|0)", conditionals.p_1_given_0),
        ("conditional.p(1|1)", conditionals.p_1_given_1),
    ] {
        let sigma_distance = (p - 0.5).abs() / conditionals.sigma_cond;
        if sigma_distance > cfg.threshold_sigma {
            flags.push(AnomalyFlag {
                statistic: name.into(),
                observed: p,
                expected: 0.5,
                sigma_distance,
                threshold_sigma: cfg.threshold_sigma,
            });
        }
    }

    flags.extend(waiting.flags);
    flags.extend(autocorr_flags);

    let mut borel_reports = Vec::new();
    for m in 1..=cfg.borel_max_m {
        if (m as u64) > n {
            break;
        }
        let frequencies = borel_block_frequencies(stream, m)?;
        let max_sigma_distance = frequencies.max_sigma_distance();
        if max_sigma_distance > cfg.threshold_sigma {
            flags.push(AnomalyFlag {
                statistic: format!("borel.m{m}"),
                observed: frequencies.max_deviation,
                expected: 0.0,
                sigma_distance: max_sigma_distance,
                threshold_sigma: cfg.threshold_sigma,
            });
        }
        borel_reports.push(BorelReport { frequencies, max_sigma_distance });
    }

    flags.extend(entropy_flags);
    let (feller_report, feller_flags) = match feller {
        Some((r, f)) => (Some(r), f),
        None => (None, Vec::new()),
    };
    flags.extend(feller_flags);

    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        metadata: Metadata {
            input: input_name.to_string(),
            length_bits: n,
            timestamp: cfg.timestamp.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
        },
        balance: bal,
        block_balance: block_balance_summaries,
        tuples_overlapping: tuple_counts(stream, TupleMode::Overlapping)?,
        tuples_disjoint: tuple_counts(stream, TupleMode::Disjoint)?,
        conditionals,
        waiting_times: waiting.reports,
        autocorrelation: autocorr_report,
        borel: borel_reports,
        feller: feller_report,
        entropy: entropy_section,
        flags,
    };
    Ok(AuditOutput { report, entropy_points })
}
