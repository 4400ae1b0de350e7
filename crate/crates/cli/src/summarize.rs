//! Cross-run comparison table.
//!
//! Reads every `seed-*.csv` below the given directories, averages each file
//! over its slots, then reports per algorithm and metric the mean over seeds
//! with a Student-t 95% interval. Output is long format:
//! `algorithm,metric,mean,ci95_low,ci95_high,n,rank`, where rank 1 is the best
//! algorithm for that metric (highest rate or satisfaction, lowest decision
//! time).

use crate::output::{read_comments, sig6};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const METRICS: [&str; 4] = ["overall_bps", "effective_bps", "satisfied", "decision_us"];

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("no per-seed CSV files found under the given directories")]
    NoRuns,
    #[error("refusing to aggregate different scenarios: {first} ({first_path}) vs {other} ({other_path})")]
    MixedScenarios {
        first: String,
        first_path: String,
        other: String,
        other_path: String,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub metric: &'static str,
    pub mean: f64,
    pub ci95: (f64, f64),
    pub n: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario_hash: String,
    pub rows: Vec<SummaryRow>,
}

fn seed_files(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            seed_files(&p, out)?;
        } else if p
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("seed-") && n.ends_with(".csv"))
        {
            out.push(p);
        }
    }
    Ok(())
}

/// Slot means of one per-seed file, in [`METRICS`] order.
fn seed_means(path: &Path, text: &str) -> Result<[f64; 4], SummarizeError> {
    let malformed = |message: String| SummarizeError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let cols: Vec<usize> = METRICS
        .iter()
        .map(|m| {
            headers
                .iter()
                .position(|h| h == *m)
                .ok_or_else(|| malformed(format!("missing column {m}")))
        })
        .collect::<Result<_, _>>()?;
    let mut sums = [0.0; 4];
    let mut n = 0usize;
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        for (s, &c) in sums.iter_mut().zip(&cols) {
            let v = rec.get(c).unwrap_or_default();
            *s += v.parse::<f64>().map_err(|_| malformed(format!("bad number `{v}`")))?;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sums {
            *s /= n as f64;
        }
    }
    Ok(sums)
}

/// Mean and two-sided 95% Student-t interval; a single sample has a
/// zero-width interval.
pub fn mean_ci95(xs: &[f64]) -> (f64, (f64, f64)) {
    let n = xs.len();
    if n == 0 {
        return (0.0, (0.0, 0.0));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, (mean, mean));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    (mean, (mean - half, mean + half))
}

pub fn summarize(dirs: &[PathBuf]) -> Result<Summary, SummarizeError> {
    let mut files = Vec::new();
    for d in dirs {
        seed_files(d, &mut files)?;
    }
    if files.is_empty() {
        return Err(SummarizeError::NoRuns);
    }
    let mut hash: Option<(String, PathBuf)> = None;
    let mut per_algo: BTreeMap<String, Vec<[f64; 4]>> = BTreeMap::new();
    for path in files {
        let text = std::fs::read_to_string(&path)?;
        let comments: BTreeMap<String, String> = read_comments(&text).into_iter().collect();
        let get = |k: &str| {
            comments.get(k).cloned().ok_or_else(|| SummarizeError::Malformed {
                path: path.display().to_string(),
                message: format!("missing `# {k}=` header"),
            })
        };
        let h = get("scenario_hash")?;
        let algo = get("algorithm")?;
        match &hash {
            None => hash = Some((h, path.clone())),
            Some((first, first_path)) if *first != h => {
                return Err(SummarizeError::MixedScenarios {
                    first: first.clone(),
                    first_path: first_path.display().to_string(),
                    other: h,
                    other_path: path.display().to_string(),
                })
            }
            Some(_) => {}
        }
        per_algo.entry(algo).or_default().push(seed_means(&path, &text)?);
    }

    let mut rows = Vec::new();
    for (m, metric) in METRICS.iter().enumerate() {
        let mut block: Vec<SummaryRow> = per_algo
            .iter()
            .map(|(algo, seeds)| {
                let xs: Vec<f64> = seeds.iter().map(|s| s[m]).collect();
                let (mean, ci95) = mean_ci95(&xs);
                SummaryRow {
                    algorithm: algo.clone(),
                    metric,
                    mean,
                    ci95,
                    n: xs.len(),
                    rank: 0,
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..block.len()).collect();
        let lower_is_better = *metric == "decision_us";
        order.sort_by(|&a, &b| {
            let o = block[a].mean.total_cmp(&block[b].mean);
            (if lower_is_better { o } else { o.reverse() }).then(a.cmp(&b))
        });
        for (r, &i) in order.iter().enumerate() {
            block[i].rank = r + 1;
        }
        rows.extend(block);
    }
    Ok(Summary {
        scenario_hash: hash.map(|h| h.0).unwrap_or_default(),
        rows,
    })
}

pub fn write_summary(w: impl Write, s: &Summary) -> io::Result<()> {
    let mut w = w;
    writeln!(w, "# scenario_hash={}", s.scenario_hash)?;
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["algorithm", "metric", "mean", "ci95_low", "ci95_high", "n", "rank"])?;
    for r in &s.rows {
        c.write_record([
            r.algorithm.clone(),
            r.metric.to_string(),
            sig6(r.mean),
            sig6(r.ci95.0),
            sig6(r.ci95.1),
            r.n.to_string(),
            r.rank.to_string(),
        ])?;
    }
    c.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_of_known_samples() {
        let (m, (lo, hi)) = mean_ci95(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        // t(0.975, 2) = 4.302653, s = 1
        let half = 4.302652729911275 / 3f64.sqrt();
        assert!((hi - m - half).abs() < 1e-9 && (m - lo - half).abs() < 1e-9);
        assert_eq!(mean_ci95(&[5.0]), (5.0, (5.0, 5.0)));
    }
}
