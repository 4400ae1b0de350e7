//! CSV layout.
//!
//! Per-slot files: `slot,overall_bps,effective_bps,satisfied,decision_us`.
//! Aggregate file: `sweep,scenario_hash,algorithm,seeds,overall_bps,
//! effective_bps,satisfied,decision_us`, one row per sweep point and
//! algorithm, means over slots then seeds. Every file starts with `# key=value`
//! comment lines; numbers carry 6 significant digits.

use hetnet_core::engine::{Aggregate, SeedRun};
use hetnet_core::Algorithm;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const SLOT_COLUMNS: [&str; 5] = ["slot", "overall_bps", "effective_bps", "satisfied", "decision_us"];
pub const AGGREGATE_COLUMNS: [&str; 8] = [
    "sweep",
    "scenario_hash",
    "algorithm",
    "seeds",
    "overall_bps",
    "effective_bps",
    "satisfied",
    "decision_us",
];

/// Plain decimal with 6 significant digits (no exponent).
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 5 - mag;
    if decimals >= 0 {
        let s = format!("{:.*}", decimals as usize, x);
        // rounding can carry into a new digit (9.999995 -> 10.00000)
        let rounded: f64 = s.parse().unwrap_or(x);
        if rounded.abs().log10().floor() as i32 > mag && decimals > 0 {
            return format!("{:.*}", (decimals - 1) as usize, x);
        }
        s
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

fn header(w: &mut impl Write, comments: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in comments {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

pub fn write_seed_csv(path: &Path, comments: &[(&str, String)], run: &SeedRun) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    header(&mut file, comments)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(SLOT_COLUMNS)?;
    for m in &run.slots {
        w.write_record([
            m.slot.to_string(),
            sig6(m.overall_rate_bps),
            sig6(m.effective_rate_bps),
            m.satisfied_count.to_string(),
            sig6(m.decision_time_us),
        ])?;
    }
    w.flush()
}

pub struct AggregateRow {
    pub sweep: String,
    pub hash: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub aggregate: Aggregate,
}

pub fn write_aggregate_csv(path: &Path, comments: &[(&str, String)], rows: &[AggregateRow]) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    header(&mut file, comments)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(AGGREGATE_COLUMNS)?;
    for r in rows {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        w.write_record([
            r.sweep.clone(),
            r.hash.clone(),
            r.algorithm.to_string(),
            seeds.join(" "),
            sig6(r.aggregate.overall_rate_bps),
            sig6(r.aggregate.effective_rate_bps),
            sig6(r.aggregate.satisfied),
            sig6(r.aggregate.decision_time_us),
        ])?;
    }
    w.flush()
}

/// `# key=value` lines at the top of a CSV file.
pub fn read_comments(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}
