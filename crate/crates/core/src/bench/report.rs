use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::{Backend, BenchConfig};
use super::record::csv_err;
use super::RunOutcome;
use crate::error::{Error, Result};

/// One CSV row: a configuration summarized over its repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub backend: String,
    pub workers: u32,
    pub chunk_rows: u64,
    pub chunk_cols: u64,
    pub dtype: String,
    pub n_osd: u32,
    pub procs_per_stripe: u32,
    pub repeats: u32,
    pub bw_median_mib_s: f64,
    pub bw_min_mib_s: f64,
    pub bw_max_mib_s: f64,
    pub io_time_mean_s: f64,
    pub compute_time_mean_s: f64,
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median/min/max of bandwidth and mean times from per-repeat figures.
pub fn summarize(config: &BenchConfig, bandwidths: &[f64], io_times: &[f64], compute_times: &[f64]) -> ReportRow {
    let min = bandwidths.iter().copied().fold(f64::INFINITY, f64::min);
    let max = bandwidths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (n_osd, pps) = match config.backend {
        Backend::Objstore => (config.n_osd, 0),
        Backend::Sharedfile => (0, config.procs_per_stripe),
    };
    ReportRow {
        backend: config.backend.to_string(),
        workers: config.n_workers,
        chunk_rows: config.chunk_dims[0],
        chunk_cols: config.chunk_dims[1..].iter().product(),
        dtype: config.dtype().to_string(),
        n_osd,
        procs_per_stripe: pps,
        repeats: bandwidths.len() as u32,
        bw_median_mib_s: median(bandwidths),
        bw_min_mib_s: min,
        bw_max_mib_s: max,
        io_time_mean_s: mean(io_times),
        compute_time_mean_s: mean(compute_times),
    }
}

/// Summarizes a configuration's repeats into one report row.
pub fn report(config: &BenchConfig, runs: &[RunOutcome]) -> Result<ReportRow> {
    if runs.is_empty() {
        return Err(Error::ConfigInvalid("report needs at least one run".into()));
    }
    let bw: Vec<f64> = runs.iter().map(|r| r.stats.bandwidth_mib_s).collect();
    let io: Vec<f64> = runs.iter().map(|r| r.stats.total_io_time_s()).collect();
    let compute: Vec<f64> = runs.iter().map(RunOutcome::compute_time_s).collect();
    Ok(summarize(config, &bw, &io, &compute))
}

pub fn write_csv(rows: &[ReportRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))
}

pub fn read_csv(input: impl Read) -> Result<Vec<ReportRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub const CSV_HEADER: &str = "backend,workers,chunk_rows,chunk_cols,dtype,n_osd,procs_per_stripe,repeats,bw_median_mib_s,bw_min_mib_s,bw_max_mib_s,io_time_mean_s,compute_time_mean_s";

/// Fixed-width text table.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>10} {:>5} {:>4} {:>7} {:>12} {:>12} {:>12} {:>10} {:>10} {:>7}",
        "backend", "workers", "chunk", "osd", "pps", "repeats", "bw_med", "bw_min", "bw_max", "io_s", "compute_s", "io_%"
    );
    for r in rows {
        let total = r.io_time_mean_s + r.compute_time_mean_s;
        let io_pct = if total > 0.0 { 100.0 * r.io_time_mean_s / total } else { 0.0 };
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>10} {:>5} {:>4} {:>7} {:>12.1} {:>12.1} {:>12.1} {:>10.4} {:>10.4} {:>7.1}",
            r.backend,
            r.workers,
            format!("{}x{}", r.chunk_rows, r.chunk_cols),
            r.n_osd,
            r.procs_per_stripe,
            r.repeats,
            r.bw_median_mib_s,
            r.bw_min_mib_s,
            r.bw_max_mib_s,
            r.io_time_mean_s,
            r.compute_time_mean_s,
            io_pct
        );
    }
    out
}
