//! Report files. Every CSV starts with a `#` comment line carrying the
//! resolved configuration as JSON so outputs are self-describing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::network::NetworkReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

pub fn write_config_comment<W: Write, C: Serialize>(out: &mut W, config: &C) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(config)?)
        .map_err(|e| Error::io("<output>", e))
}

/// Writes `(lag, count)` rows.
pub fn write_histogram<W: Write, C: Serialize>(
    out: W,
    histogram: &[(usize, usize)],
    config: &C,
) -> Result<()> {
    let mut out = out;
    write_config_comment(&mut out, config)?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["lag", "count"])?;
    for (lag, count) in histogram {
        wtr.serialize((lag, count))?;
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Writes the per-(path, hop) summary table. Paths without hops contribute
/// no rows.
pub fn write_network_csv<W: Write>(out: W, report: &NetworkReport) -> Result<()> {
    let mut out = out;
    write_config_comment(&mut out, &report.config)?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "path",
        "hop",
        "source",
        "target",
        "mu_hat",
        "sigma2_hat",
        "ci95_low",
        "ci95_high",
        "causality_flag",
        "error",
    ])?;
    for path in &report.paths {
        let name = path.path.join(">");
        for hop in &path.hops {
            let (mu, s2, lo, hi) = match &hop.estimate {
                Some(e) => (
                    e.sample.mu_hat.to_string(),
                    e.sample.sigma2_hat.to_string(),
                    e.sample.ci95.0.to_string(),
                    e.sample.ci95.1.to_string(),
                ),
                None => Default::default(),
            };
            wtr.write_record([
                name.as_str(),
                &hop.hop.to_string(),
                &hop.source,
                &hop.target,
                &mu,
                &s2,
                &lo,
                &hi,
                if hop.causality_flag { "true" } else { "false" },
                hop.error.as_deref().unwrap_or(""),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn emit_report(report: &NetworkReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Format::Csv => write_network_csv(&mut out, report)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<NetworkReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
