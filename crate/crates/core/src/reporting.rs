//! Bounds, the improvement index, aggregation and result files.
//!
//! Result files are written to a temporary file in the target directory and
//! renamed into place, so readers never observe a partial file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::simulator::ProtocolKind;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "protocol",
    "n_copies",
    "reps",
    "mean_infidelity",
    "sd_of_mean",
    "purity_true",
    "gm_bound",
];

/// Gill-Massar bound on the mean squared Bures distance, ¼(d+1)²(d−1)/n.
pub fn gill_massar_bound(d: usize, n: u64) -> Result<f64> {
    if d < 2 || n == 0 {
        return Err(Error::InvalidArgument(format!("Gill-Massar bound needs d >= 2 and n >= 1, got d={d}, n={n}")));
    }
    let d = d as f64;
    Ok((d + 1.0) * (d + 1.0) * (d - 1.0) / (4.0 * n as f64))
}

/// Υ = (C − A)/(C − G) on log₁₀ values of the reference infidelity C, the
/// adaptive infidelity A and the bound G. `None` when C = G.
pub fn improvement_index(c: f64, a: f64, g: f64) -> Option<f64> {
    let den = c - g;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = (c - a) / den;
    v.is_finite().then_some(v)
}

/// Υ from raw mean infidelities and the two-qubit bound at `n` copies.
pub fn improvement_from_means(reference: f64, adaptive: f64, n: u64) -> Result<Option<f64>> {
    let g = gill_massar_bound(4, n)?;
    if !(reference > 0.0) || !(adaptive > 0.0) {
        return Ok(None);
    }
    Ok(improvement_index(reference.log10(), adaptive.log10(), g.log10()))
}

/// One Monte Carlo trial as stored in the JSON-lines log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub n: u64,
    pub infidelity: f64,
    pub settings_used: Vec<String>,
    pub purity_true: f64,
    /// Index of the random true state, for experiments over many states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub protocol: String,
    pub n_copies: u64,
    pub reps: u64,
    pub mean_infidelity: f64,
    /// Sample standard deviation divided by √reps; 0 for a single trial.
    pub sd_of_mean: f64,
    pub purity_true: f64,
    pub gm_bound: f64,
}

/// Groups trials by (protocol, N, true purity) and reduces each group in
/// seed order, so the result does not depend on the order of `records`.
///
/// Rows come out sorted by protocol, then N, then purity.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<SweepRow>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no trial records to aggregate".into()));
    }
    let mut groups: BTreeMap<(ProtocolKind, u64, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        if !r.infidelity.is_finite() || !r.purity_true.is_finite() || r.purity_true < 0.0 {
            return Err(Error::InvalidArgument(format!("non-finite trial record (seed {})", r.seed)));
        }
        // Bit order equals numeric order for non-negative floats.
        groups.entry((r.protocol, r.n, r.purity_true.to_bits())).or_default().push(r);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((protocol, n, purity_bits), mut trials) in groups {
        trials.sort_by_key(|t| t.seed);
        let reps = trials.len() as u64;
        let mean = trials.iter().map(|t| t.infidelity).sum::<f64>() / reps as f64;
        let sd_of_mean = if reps > 1 {
            let ss: f64 = trials.iter().map(|t| (t.infidelity - mean).powi(2)).sum();
            (ss / (reps - 1) as f64).sqrt() / (reps as f64).sqrt()
        } else {
            0.0
        };
        rows.push(SweepRow {
            protocol: protocol.label().to_string(),
            n_copies: n,
            reps,
            mean_infidelity: mean,
            sd_of_mean,
            purity_true: f64::from_bits(purity_bits),
            gm_bound: gill_massar_bound(4, n)?,
        });
    }
    Ok(rows)
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs `write` against a temporary file in the target directory, then renames it to `path`.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes the aggregate CSV with a fixed header and "\n" line endings.
pub fn write_results(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
        for r in rows {
            w.write_record([
                r.protocol.clone(),
                r.n_copies.to_string(),
                r.reps.to_string(),
                format_float(r.mean_infidelity),
                format_float(r.sd_of_mean),
                format_float(r.purity_true),
                format_float(r.gm_bound),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, |w| w.write_all(&buf))
}

pub fn read_results(path: &Path) -> Result<Vec<SweepRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let bad = |line: usize, what: &str| Error::Format {
        path: path.to_path_buf(),
        message: format!("record {line}: bad {what}"),
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(i + 1, CSV_HEADER[k]));
        let float = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(i + 1, CSV_HEADER[k]));
        rows.push(SweepRow {
            protocol: rec[0].to_string(),
            n_copies: int(1)?,
            reps: int(2)?,
            mean_infidelity: float(3)?,
            sd_of_mean: float(4)?,
            purity_true: float(5)?,
            gm_bound: float(6)?,
        });
    }
    Ok(rows)
}

pub fn write_trials_jsonl(trials: &[TrialRecord], path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        for t in trials {
            serde_json::to_writer(&mut *w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn read_trials_jsonl(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

/// Per-state improvement index for the histogram experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonRow {
    pub protocol: String,
    pub state_kind: String,
    pub state_index: u64,
    pub n_copies: u64,
    pub reps: u64,
    pub reference_mean: f64,
    pub adaptive_mean: f64,
    pub gm_bound: f64,
    pub upsilon: Option<f64>,
}

pub const UPSILON_HEADER: [&str; 9] = [
    "protocol",
    "state_kind",
    "state_index",
    "n_copies",
    "reps",
    "reference_mean",
    "adaptive_mean",
    "gm_bound",
    "upsilon",
];

/// Missing Υ values are written as empty fields.
pub fn write_upsilon(rows: &[UpsilonRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(UPSILON_HEADER).map_err(|e| csv_error(path, e))?;
        for r in rows {
            w.write_record([
                r.protocol.clone(),
                r.state_kind.clone(),
                r.state_index.to_string(),
                r.n_copies.to_string(),
                r.reps.to_string(),
                format_float(r.reference_mean),
                format_float(r.adaptive_mean),
                format_float(r.gm_bound),
                r.upsilon.map(format_float).unwrap_or_default(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, |w| w.write_all(&buf))
}
