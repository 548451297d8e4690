//! Metrics records, their sinks and run summaries.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::CliResult;

/// One per-sample metrics record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsLine {
    pub n: usize,
    pub ls_fit: f64,
    pub censored: bool,
    pub sv_count: usize,
    pub removed_index: Option<usize>,
    pub cum_avg_fit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_mismatch: Option<f64>,
}

pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Ordered record writer, JSON lines or CSV.
pub enum Sink {
    Json(Box<dyn Write>),
    Csv(Box<csv::Writer<Box<dyn Write>>>),
}

impl Sink {
    pub fn open(path: Option<&Path>, csv: bool) -> CliResult<Self> {
        let out = open_output(path)?;
        Ok(if csv { Sink::Csv(Box::new(csv::Writer::from_writer(out))) } else { Sink::Json(out) })
    }

    pub fn write<R: Serialize>(&mut self, record: &R) -> CliResult<()> {
        match self {
            Sink::Json(out) => {
                serde_json::to_writer(&mut *out, record)?;
                out.write_all(b"\n")?;
            }
            Sink::Csv(w) => w.serialize(record)?,
        }
        Ok(())
    }

    pub fn finish(self) -> CliResult<()> {
        match self {
            Sink::Json(mut out) => out.flush()?,
            Sink::Csv(mut w) => w.flush()?,
        }
        Ok(())
    }
}

/// Mean and population variance of the LS fit over `[start, end]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Accumulates fit statistics per segment. `starts` lists the sample
/// indices that open a new segment after the first.
#[derive(Clone, Debug)]
pub struct SegmentStats {
    starts: Vec<usize>,
    done: Vec<SegmentSummary>,
    current: Option<(usize, usize, f64, f64)>,
}

impl SegmentStats {
    pub fn new(mut starts: Vec<usize>) -> Self {
        starts.sort_unstable();
        starts.dedup();
        SegmentStats { starts, done: Vec::new(), current: None }
    }

    pub fn push(&mut self, n: usize, fit: f64) {
        if self.starts.binary_search(&n).is_ok() {
            self.close();
        }
        let (_, count, sum, sq) = self.current.get_or_insert((n, 0, 0.0, 0.0));
        *count += 1;
        *sum += fit;
        *sq += fit * fit;
    }

    fn close(&mut self) {
        if let Some((start, count, sum, sq)) = self.current.take() {
            let k = count as f64;
            let mean = sum / k;
            let variance = (sq / k - mean * mean).max(0.0);
            self.done.push(SegmentSummary { start, end: start + count - 1, mean, variance });
        }
    }

    pub fn finish(mut self) -> Vec<SegmentSummary> {
        self.close();
        self.done
    }
}

/// End-of-run summary, written to standard error.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub samples: usize,
    pub admitted: usize,
    pub sv_count: usize,
    pub cum_avg_fit: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_window_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_mismatch: Option<f64>,
    pub runtime_s: f64,
}

pub fn emit_summary(summary: &Summary) -> CliResult<()> {
    let mut err = io::stderr().lock();
    serde_json::to_writer(&mut err, summary)?;
    err.write_all(b"\n")?;
    Ok(())
}

pub fn warn(message: &str) {
    eprintln!("{}", serde_json::json!({ "warning": message }));
}
