//! Sample files (one JSON record per line), synthetic datasets and CSV reports.

mod record;
mod report;
mod synthetic;

pub use record::{
    relation_template_record, CaptionRecord, ImageRecord, RegionRecord, SampleRecord, TextPlayerRecord, SCHEMA_VERSION,
};
pub use report::{report_rows, write_report, ReportRow, REPORT_HEADER};
pub use synthetic::{synthetic_samples, SyntheticConfig};

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::SamplePair;

#[derive(Debug, Default)]
pub struct Loaded {
    pub samples: Vec<SamplePair>,
    pub records: Vec<SampleRecord>,
    /// Lines rejected in lenient mode, as schema errors.
    pub skipped: Vec<Error>,
}

/// Reads a sample file. Blank lines are ignored.
///
/// In strict mode the first invalid line aborts the load; otherwise invalid
/// lines are logged and collected in [`Loaded::skipped`].
pub fn load_samples(path: &Path, schema_version: u32, strict: bool) -> Result<Loaded> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 1;
        let parsed = serde_json::from_str::<SampleRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| {
                if !seen.insert(r.sample_id.clone()) {
                    return Err(format!("duplicate sample_id {:?}", r.sample_id));
                }
                r.to_sample(schema_version).map(|s| (r, s))
            });
        match parsed {
            Ok((r, s)) => {
                out.records.push(r);
                out.samples.push(s);
            }
            Err(message) => {
                let err = Error::Schema {
                    path: path.to_path_buf(),
                    line: lineno,
                    message,
                };
                if strict {
                    return Err(err);
                }
                log::warn!("skipping {err}");
                out.skipped.push(err);
            }
        }
    }
    if out.samples.is_empty() && out.skipped.is_empty() {
        log::warn!("{} contains no samples", path.display());
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples(path: &Path, samples: &[SamplePair]) -> Result<()> {
    let records: Vec<SampleRecord> = samples.iter().map(SampleRecord::from_sample).collect();
    write_records(path, &records)
}
