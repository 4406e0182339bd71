//! File encodings: ASCII bits, packed binary with a length header, phase
//! CSV, and the headerless NIST-style ASCII export.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use rng_audit_core::phase::PhaseSample;
use rng_audit_core::{BitStream, PhaseTrace};

/// On-disk input encodings for bit streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BitFormat {
    /// '0'/'1' characters, whitespace tolerated.
    Ascii,
    /// 8-byte little-endian bit count followed by MSB-first packed bytes.
    Packed,
}

/// Reads a bit stream in the given format.
pub fn read_bits(path: &Path, format: BitFormat) -> Result<BitStream> {
    match format {
        BitFormat::Ascii => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(BitStream::from_ascii(&text)?)
        }
        BitFormat::Packed => read_packed(path),
    }
}

/// Packed container: `u64` little-endian bit count, then the payload.
pub fn read_packed(path: &Path) -> Result<BitStream> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 8 {
        bail!("{}: missing 8-byte length header", path.display());
    }
    let len = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let len = usize::try_from(len).context("stream too large for this platform")?;
    Ok(BitStream::from_packed(&bytes[8..], len)?)
}

pub fn write_packed(path: &Path, stream: &BitStream) -> Result<()> {
    let mut out = Vec::with_capacity(8 + stream.len().div_ceil(8));
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    out.extend_from_slice(&stream.pack());
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Headerless '0'/'1' text, one character per bit (NIST-suite input style).
pub fn write_nist_ascii(path: &Path, stream: &BitStream) -> Result<()> {
    fs::write(path, stream.to_nist_ascii())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

const PHASE_HEADER: [&str; 3] = ["index", "control_phase_rad", "toss_phase_rad"];

/// Reads a phase-trace CSV with header `index,control_phase_rad,toss_phase_rad`.
pub fn read_phase_csv(path: &Path) -> Result<PhaseTrace> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers().context("reading CSV header")?;
    if headers.iter().collect::<Vec<_>>() != PHASE_HEADER {
        bail!(
            "{}: expected header {}, got {:?}",
            path.display(),
            PHASE_HEADER.join(","),
            headers
        );
    }
    let mut entries = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("CSV record {}", line + 2))?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .with_context(|| format!("CSV record {}: missing column {i}", line + 2))
        };
        entries.push(PhaseSample {
            index: field(0)?.trim().parse().context("parsing index")?,
            control_phase: field(1)?.trim().parse().context("parsing control phase")?,
            toss_phase: field(2)?.trim().parse().context("parsing toss phase")?,
        });
    }
    Ok(PhaseTrace::new(entries)?)
}

pub fn write_phase_csv<W: Write>(mut out: W, trace: &PhaseTrace) -> Result<()> {
    writeln!(out, "{}", PHASE_HEADER.join(","))?;
    for e in trace.entries() {
        writeln!(out, "{},{},{}", e.index, fmt_f64(e.control_phase), fmt_f64(e.toss_phase))?;
    }
    Ok(())
}

/// Fixed 17-significant-digit float rendering used by every emitter, so
/// identical inputs produce byte-identical outputs and values round-trip
/// exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
