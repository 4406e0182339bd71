use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rng_audit::audit::{entropy_report, run_audit, AuditConfig, AuditOutput, FellerParams};
use rng_audit::formats::{
    self, read_bits, read_phase_csv, write_nist_ascii, write_packed, BitFormat,
};
use rng_audit::report::{self, to_json};
use rng_audit_core::entropy::EntropyPoint;
use rng_audit_core::feller::RunMode;
use rng_audit_core::phase::{from_phase_trace, ThresholdConfig};
use rng_audit_core::{sources, SourceConfig, SourceKind};

#[derive(Parser)]
#[command(
    name = "rng-audit",
    version,
    about = "Audit binary random-number streams: balance, conditional statistics, \
             coin-tossing constants, waiting times, Borel frequencies, and entropy bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for simulated sources.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for report files; without it, reports go to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for independent analyses: a count, or "auto".
    #[arg(long, global = true, default_value = "1")]
    threads: String,

    /// Timestamp to record in report metadata ("now" for the current time).
    /// Omitted by default so identical runs emit byte-identical reports.
    #[arg(long, global = true)]
    timestamp: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IngestFormat {
    Ascii,
    Packed,
    PhaseCsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Fair,
    Biased,
    Markov,
    P2Toy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ones,
    Either,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ones => RunMode::OnesOnly,
            ModeArg::Either => RunMode::EitherSymbol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert an input file to the packed container format.
    Ingest {
        input: PathBuf,
        /// Input encoding.
        #[arg(long, value_enum)]
        format: IngestFormat,
        /// Packed output file.
        #[arg(long)]
        out: PathBuf,
        /// Threshold phase in radians (phase-csv input).
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Ambiguity guard band half-width in radians (phase-csv input).
        #[arg(long, default_value_t = 0.1)]
        guard: f64,
        /// Warn when the cluster separation falls below this many widths.
        #[arg(long, default_value_t = 400.0)]
        min_separation: f64,
    },
    /// Generate a seeded simulated source.
    Simulate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Number of tosses (or phase-trace entries).
        #[arg(long)]
        n: u64,
        /// P(1) for the biased source.
        #[arg(long)]
        p1: Option<f64>,
        /// P(1 | previous bit 0) for the markov source.
        #[arg(long)]
        p_1_given_0: Option<f64>,
        /// P(1 | previous bit 1) for the markov source.
        #[arg(long)]
        p_1_given_1: Option<f64>,
        /// Toss-phase width in radians (p2-toy).
        #[arg(long, default_value_t = sources::DEFAULT_PHASE_SIGMA)]
        phase_sigma: f64,
        /// Relative control-phase ripple amplitude (p2-toy).
        #[arg(long, default_value_t = sources::DEFAULT_CONTROL_BIAS)]
        control_bias: f64,
        /// Output file: packed bits, or phase CSV for p2-toy. Without it,
        /// bits go to stdout as ASCII and traces as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counting statistics: balance, tuples, conditionals, waiting times,
    /// autocorrelation, and Borel block frequencies.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Packed)]
        input_format: BitFormat,
        /// Comma-separated block sizes (scientific notation allowed, e.g.
        /// 1e3,1e4); default picks powers of ten.
        #[arg(long)]
        blocks: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_lag: u64,
        /// Analyze Borel block lengths 1..=M.
        #[arg(long, default_value_t = 4)]
        borel_m: u32,
        /// Comma-separated waiting-time patterns.
        #[arg(long, default_value = "01,10,00,11")]
        patterns: String,
        /// Sigma threshold for anomaly flags (5 is a stricter exploratory
        /// setting).
        #[arg(long, default_value_t = 11.5)]
        threshold_sigma: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Coin-tossing constants: ideal vs extracted table.
    Feller {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Packed)]
        input_format: BitFormat,
        #[arg(long, default_value_t = 400)]
        window: u64,
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 15)]
        k_max: u32,
        /// Count runs of ones only, or runs of either symbol.
        #[arg(long, value_enum, default_value_t = ModeArg::Ones)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Blockwise Shannon/min-entropy scatter with a-priori bound curves.
    Entropy {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Packed)]
        input_format: BitFormat,
        /// Comma-separated block sizes, e.g. 1e2,1e3,1e4.
        #[arg(long)]
        blocks: Option<String>,
        /// Sigma multiples for the bound curves.
        #[arg(long, default_value = "1,11.5")]
        bounds: String,
        /// Outlier probability to convert into an extra bound curve
        /// (accepts 2^-100 or plain floats).
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 11.5)]
        threshold_sigma: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Everything at once; exit code 2 when anomaly flags are raised.
    Audit {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Packed)]
        input_format: BitFormat,
        #[arg(long)]
        blocks: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_lag: u64,
        #[arg(long, default_value_t = 4)]
        borel_m: u32,
        #[arg(long, default_value = "01,10,00,11")]
        patterns: String,
        #[arg(long, default_value_t = 400)]
        feller_window: u64,
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 15)]
        k_max: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::Ones)]
        mode: ModeArg,
        /// Skip the (comparatively slow) sliding-window extraction.
        #[arg(long)]
        skip_feller: bool,
        #[arg(long, default_value = "1,11.5")]
        bounds: String,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 11.5)]
        threshold_sigma: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Export a stream as headerless '0'/'1' text (NIST suite input).
    ExportNist {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BitFormat::Packed)]
        input_format: BitFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_size_list(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            let value: f64 = part
                .parse()
                .map_err(|_| anyhow!("invalid block size {part:?}"))?;
            if value < 1.0 || value.fract() != 0.0 || value > 2f64.powi(53) {
                bail!("block size {part:?} is not a positive integer");
            }
            Ok(value as u64)
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| anyhow!("invalid number {part:?}"))
        })
        .collect()
}

/// Accepts `2^-100` or a plain float.
fn parse_epsilon(text: &str) -> Result<f64> {
    if let Some(exp) = text.strip_prefix("2^") {
        let exp: i32 = exp.parse().map_err(|_| anyhow!("invalid exponent in {text:?}"))?;
        return Ok(2f64.powi(exp));
    }
    text.parse().map_err(|_| anyhow!("invalid probability {text:?}"))
}

fn parse_threads(text: &str) -> Result<u32> {
    if text == "auto" {
        return Ok(0);
    }
    let n: u32 = text.parse().map_err(|_| anyhow!("--threads takes a count or \"auto\""))?;
    if n == 0 {
        bail!("--threads count must be at least 1 (or \"auto\")");
    }
    Ok(n)
}

fn resolve_timestamp(arg: &Option<String>) -> Option<String> {
    arg.as_ref().map(|t| {
        if t == "now" {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            format!("unix:{secs}")
        } else {
            t.clone()
        }
    })
}

#[derive(Serialize)]
struct IngestSummary {
    input: String,
    length_bits: u64,
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ambiguous_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster_centers: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster_width_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    separation_sigmas: Option<f64>,
}

fn cmd_ingest(
    input: &Path,
    format: IngestFormat,
    out: &Path,
    threshold: f64,
    guard: f64,
    min_separation: f64,
) -> Result<()> {
    let mut summary = IngestSummary {
        input: input.display().to_string(),
        length_bits: 0,
        out: out.display().to_string(),
        ambiguous_count: None,
        cluster_centers: None,
        cluster_width_sigma: None,
        separation_sigmas: None,
    };
    let bits = match format {
        IngestFormat::Ascii => read_bits(input, BitFormat::Ascii)?,
        IngestFormat::Packed => read_bits(input, BitFormat::Packed)?,
        IngestFormat::PhaseCsv => {
            let trace = read_phase_csv(input)?;
            let cfg = ThresholdConfig {
                threshold_phase: threshold,
                min_separation_sigmas: min_separation,
                guard_band: guard,
            };
            let rep = from_phase_trace(&trace, &cfg)?;
            if rep.separation_sigmas.is_nan() || rep.separation_sigmas < min_separation {
                eprintln!(
                    "warning: cluster separation {:.1} sigma is below the required {:.1}",
                    rep.separation_sigmas, min_separation
                );
            }
            summary.ambiguous_count = Some(rep.ambiguous_count);
            summary.cluster_centers = Some(rep.cluster_centers);
            summary.cluster_width_sigma = Some(rep.cluster_width_sigma);
            summary.separation_sigmas = Some(rep.separation_sigmas);
            rep.bits
        }
    };
    summary.length_bits = bits.len() as u64;
    write_packed(out, &bits)?;
    println!("{}", to_json(&summary)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    kind: KindArg,
    seed: u64,
    n: u64,
    p1: Option<f64>,
    p10: Option<f64>,
    p11: Option<f64>,
    phase_sigma: f64,
    control_bias: f64,
    out: Option<&Path>,
) -> Result<()> {
    let n = usize::try_from(n).context("n too large")?;
    match kind {
        KindArg::P2Toy => {
            let cfg = SourceConfig::new(
                SourceKind::P2Toy { phase_sigma, control_bias_amplitude: control_bias },
                seed,
                n,
            );
            let trace = sources::generate_phase_trace(&cfg)?;
            match out {
                Some(path) => {
                    let file = fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    formats::write_phase_csv(std::io::BufWriter::new(file), &trace)?;
                }
                None => formats::write_phase_csv(std::io::stdout().lock(), &trace)?,
            }
        }
        _ => {
            let source_kind = match kind {
                KindArg::Fair => SourceKind::Fair,
                KindArg::Biased => SourceKind::Biased {
                    p_one: p1.ok_or_else(|| anyhow!("--p1 is required for --kind biased"))?,
                },
                KindArg::Markov => SourceKind::Markov {
                    p_one_given_zero: p10
                        .ok_or_else(|| anyhow!("--p-1-given-0 is required for --kind markov"))?,
                    p_one_given_one: p11
                        .ok_or_else(|| anyhow!("--p-1-given-1 is required for --kind markov"))?,
                },
                KindArg::P2Toy => unreachable!(),
            };
            let bits = sources::generate_bits(&SourceConfig::new(source_kind, seed, n))?;
            match out {
                Some(path) => write_packed(path, &bits)?,
                None => println!("{}", bits.to_nist_ascii()),
            }
        }
    }
    Ok(())
}

/// Writes the report (and scatter, for CSV output) to `out_dir`, or JSON to
/// stdout when no directory was given.
fn emit_audit_output(
    out: &AuditOutput,
    format: OutputFormat,
    out_dir: Option<&Path>,
) -> Result<()> {
    match format {
        OutputFormat::Json => {
            let json = to_json(&out.report)?;
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join("report.json"), json)?;
                }
                None => println!("{json}"),
            }
        }
        OutputFormat::Csv => {
            let dir = out_dir
                .ok_or_else(|| anyhow!("--format csv needs --out-dir for the CSV bundle"))?;
            report::write_csv_bundle(&out.report, dir)?;
            fs::write(dir.join("report.json"), to_json(&out.report)?)?;
            let file = fs::File::create(dir.join("entropy_scatter.csv"))?;
            report::write_entropy_scatter(std::io::BufWriter::new(file), &out.entropy_points)?;
        }
    }
    Ok(())
}

fn bounds_with_epsilon(bounds: &str, epsilon: &Option<String>) -> Result<Vec<f64>> {
    let mut out = parse_f64_list(bounds)?;
    if let Some(text) = epsilon {
        let eps = parse_epsilon(text)?;
        out.push(rng_audit_core::entropy::epsilon_to_sigma(eps)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct EntropyDocument<'a> {
    input: String,
    length_bits: u64,
    #[serde(flatten)]
    report: &'a rng_audit::report::EntropyReport,
}

fn write_scatter(file: fs::File, points: &[EntropyPoint]) -> Result<()> {
    report::write_entropy_scatter(std::io::BufWriter::new(file), points)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let threads = parse_threads(&cli.threads)?;
    let timestamp = resolve_timestamp(&cli.timestamp);
    let out_dir = cli.out_dir.as_deref();

    match cli.command {
        Command::Ingest { input, format, out, threshold, guard, min_separation } => {
            cmd_ingest(&input, format, &out, threshold, guard, min_separation)?;
        }
        Command::Simulate {
            kind,
            n,
            p1,
            p_1_given_0,
            p_1_given_1,
            phase_sigma,
            control_bias,
            out,
        } => {
            cmd_simulate(
                kind,
                cli.seed,
                n,
                p1,
                p_1_given_0,
                p_1_given_1,
                phase_sigma,
                control_bias,
                out.as_deref(),
            )?;
        }
        Command::Analyze {
            input,
            input_format,
            blocks,
            max_lag,
            borel_m,
            patterns,
            threshold_sigma,
            format,
        } => {
            let stream = read_bits(&input, input_format)?;
            let cfg = AuditConfig {
                block_sizes: blocks.as_deref().map(parse_size_list).transpose()?.unwrap_or_default(),
                max_lag,
                borel_max_m: borel_m,
                patterns: patterns.split(',').map(|p| p.trim().to_string()).collect(),
                feller: None,
                entropy: false,
                threshold_sigma,
                threads,
                timestamp,
                ..AuditConfig::default()
            };
            let out = run_audit(&stream, &input.display().to_string(), &cfg)?;
            let flagged = !out.report.flags.is_empty();
            emit_audit_output(&out, format, out_dir)?;
            if flagged {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Feller { input, input_format, window, k_min, k_max, mode, format } => {
            let stream = read_bits(&input, input_format)?;
            let rows = rng_audit_core::feller::feller_table(
                &stream,
                window as usize,
                k_min,
                k_max,
                mode.into(),
            )?;
            #[derive(Serialize)]
            struct FellerDocument {
                input: String,
                window: u64,
                mode: RunMode,
                rows: Vec<rng_audit_core::feller::FellerRow>,
            }
            let doc = FellerDocument {
                input: input.display().to_string(),
                window,
                mode: mode.into(),
                rows,
            };
            match format {
                OutputFormat::Json => {
                    let json = to_json(&doc)?;
                    match out_dir {
                        Some(dir) => {
                            fs::create_dir_all(dir)?;
                            fs::write(dir.join("feller.json"), json)?;
                        }
                        None => println!("{json}"),
                    }
                }
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    writeln!(
                        buf,
                        "k,alpha_ideal,alpha_extracted,relative_change,windows,no_run_windows"
                    )?;
                    for row in &doc.rows {
                        writeln!(
                            buf,
                            "{},{},{},{},{},{}",
                            row.k,
                            formats::fmt_f64(row.alpha_ideal),
                            row.alpha_extracted.map(formats::fmt_f64).unwrap_or_default(),
                            row.relative_change.map(formats::fmt_f64).unwrap_or_default(),
                            row.windows_scanned,
                            row.no_run_windows
                        )?;
                    }
                    match out_dir {
                        Some(dir) => {
                            fs::create_dir_all(dir)?;
                            fs::write(dir.join("feller.csv"), buf)?;
                        }
                        None => std::io::stdout().write_all(&buf)?,
                    }
                }
            }
        }
        Command::Entropy {
            input,
            input_format,
            blocks,
            bounds,
            epsilon,
            threshold_sigma,
            format,
        } => {
            let stream = read_bits(&input, input_format)?;
            let sizes = match blocks.as_deref() {
                Some(text) => parse_size_list(text)?,
                None => Vec::new(),
            };
            let bound_sigmas = bounds_with_epsilon(&bounds, &epsilon)?;
            let (rep, points) = entropy_report(&stream, &sizes, &bound_sigmas, threshold_sigma)?;
            let doc = EntropyDocument {
                input: input.display().to_string(),
                length_bits: stream.len() as u64,
                report: &rep,
            };
            match format {
                OutputFormat::Json => match out_dir {
                    Some(dir) => {
                        fs::create_dir_all(dir)?;
                        fs::write(dir.join("entropy.json"), to_json(&doc)?)?;
                        write_scatter(fs::File::create(dir.join("entropy_scatter.csv"))?, &points)?;
                        let f = fs::File::create(dir.join("entropy_bounds.csv"))?;
                        report::write_bound_curves(std::io::BufWriter::new(f), &rep.bound_curves)?;
                    }
                    None => println!("{}", to_json(&doc)?),
                },
                OutputFormat::Csv => match out_dir {
                    Some(dir) => {
                        fs::create_dir_all(dir)?;
                        fs::write(dir.join("entropy.json"), to_json(&doc)?)?;
                        write_scatter(fs::File::create(dir.join("entropy_scatter.csv"))?, &points)?;
                        let f = fs::File::create(dir.join("entropy_bounds.csv"))?;
                        report::write_bound_curves(std::io::BufWriter::new(f), &rep.bound_curves)?;
                    }
                    None => report::write_entropy_scatter(std::io::stdout().lock(), &points)?,
                },
            }
        }
        Command::Audit {
            input,
            input_format,
            blocks,
            max_lag,
            borel_m,
            patterns,
            feller_window,
            k_min,
            k_max,
            mode,
            skip_feller,
            bounds,
            epsilon,
            threshold_sigma,
            format,
        } => {
            let stream = read_bits(&input, input_format)?;
            let cfg = AuditConfig {
                block_sizes: blocks.as_deref().map(parse_size_list).transpose()?.unwrap_or_default(),
                max_lag,
                borel_max_m: borel_m,
                patterns: patterns.split(',').map(|p| p.trim().to_string()).collect(),
                feller: (!skip_feller).then_some(FellerParams {
                    window: feller_window,
                    k_min,
                    k_max,
                    mode: mode.into(),
                }),
                entropy: true,
                bound_sigmas: bounds_with_epsilon(&bounds, &epsilon)?,
                threshold_sigma,
                threads,
                timestamp,
            };
            let out = run_audit(&stream, &input.display().to_string(), &cfg)?;
            let flagged = !out.report.flags.is_empty();
            emit_audit_output(&out, format, out_dir)?;
            if flagged {
                return Ok(ExitCode::from(2));
            }
        }
        Command::ExportNist { input, input_format, out } => {
            let stream = read_bits(&input, input_format)?;
            write_nist_ascii(&out, &stream)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
