//! Text formats for partitions, traces, experiment results and summaries.
//!
//! Numbers are written with Rust's `Display` for `f64`, which is
//! locale-independent and round-trips exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{IterationRecord, QicdConfig, QicdResult};
use crate::experiment::MethodSummary;
use crate::partition::Partition;
use crate::stats::TrialSample;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn partition_csv(p: &Partition) -> String {
    let mut out = String::from("node_id,community_id\n");
    for (u, c) in p.labels().iter().enumerate() {
        let _ = writeln!(out, "{u},{c}");
    }
    out
}

/// Reads labels back from `partition_csv` output; rows may come in any order
/// but must cover nodes `0..n` exactly once.
pub fn parse_partition_csv(text: &str) -> Result<Vec<usize>, FormatError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if (i == 0 && line.starts_with("node_id")) || line.is_empty() {
            continue;
        }
        let err = |message: &str| FormatError::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        let (a, b) = line.split_once(',').ok_or_else(|| err("expected node_id,community_id"))?;
        let u: usize = a.trim().parse().map_err(|_| err("bad node id"))?;
        let c: usize = b.trim().parse().map_err(|_| err("bad community id"))?;
        rows.push((u, c, i + 1));
    }
    let mut labels = vec![usize::MAX; rows.len()];
    for (u, c, line) in rows {
        match labels.get_mut(u) {
            Some(slot) if *slot == usize::MAX => *slot = c,
            Some(_) => return Err(FormatError::Parse { line, message: format!("node {u} listed twice") }),
            None => return Err(FormatError::Parse { line, message: format!("node {u} out of range") }),
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub labels: Vec<usize>,
    #[serde(rename = "Q")]
    pub q: f64,
}

pub fn trace_csv(trace: &[IterationRecord], with_timings: bool) -> String {
    let mut out = String::from("t,Q_ref,Q_quant,accepted,communities,millis\n");
    for r in trace {
        let millis = if with_timings { r.millis } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.q_ref, r.q_quant, r.accepted, r.communities, millis
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QicdEnvelope {
    #[serde(rename = "Q_baseline")]
    pub q_baseline: f64,
    #[serde(rename = "Q_star")]
    pub q_star: f64,
    #[serde(rename = "Q_initial")]
    pub q_initial: f64,
    pub mrg: f64,
    pub seed_count: usize,
    pub iterations_run: usize,
    pub accepted: usize,
    pub communities: usize,
    pub rng: String,
    pub config: QicdConfig,
}

impl QicdEnvelope {
    pub fn new(result: &QicdResult, config: &QicdConfig) -> Self {
        QicdEnvelope {
            q_baseline: result.q_baseline,
            q_star: result.q_star,
            q_initial: result.q_initial,
            mrg: result.mrg,
            seed_count: result.seed_count,
            iterations_run: result.trace.len(),
            accepted: result.trace.iter().filter(|r| r.accepted).count(),
            communities: result.best_partition.community_count(),
            rng: crate::sampling::RNG_NAME.to_string(),
            config: config.clone(),
        }
    }
}

pub fn experiment_csv(samples: &[TrialSample]) -> String {
    let mut out = String::from("method,run,seed,Q\n");
    for s in samples {
        for (run, (q, seed)) in s.values.iter().zip(&s.seeds).enumerate() {
            let _ = writeln!(out, "{},{run},{seed},{q}", s.method);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_vs_baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub baseline: String,
    pub confidence: f64,
    pub methods: BTreeMap<String, SummaryEntry>,
}

impl SummaryJson {
    pub fn new(rows: &[MethodSummary], baseline: &str, confidence: f64) -> Self {
        let methods = rows
            .iter()
            .map(|r| {
                let s = &r.summary;
                let entry = SummaryEntry {
                    mean: s.mean,
                    std: s.std,
                    n: s.n,
                    ci_low: s.ci_low,
                    ci_high: s.ci_high,
                    p_vs_baseline: r.p_vs_baseline,
                };
                (r.method.clone(), entry)
            })
            .collect();
        SummaryJson {
            baseline: baseline.to_string(),
            confidence,
            methods,
        }
    }
}

/// Plain-text results table; p-values below 0.05 are marked with `*`.
pub fn render_table(rows: &[MethodSummary]) -> String {
    let header = ["Method", "Runs", "Mean±Std", "95% CI", "p"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            let s = &r.summary;
            let p = match r.p_vs_baseline {
                Some(p) if p < 0.05 => format!("{p:.4}*"),
                Some(p) => format!("{p:.4}"),
                None => "-".to_string(),
            };
            [
                r.method.clone(),
                s.n.to_string(),
                format!("{:.4}±{:.4}", s.mean, s.std),
                format!("({:.4}, {:.4})", s.ci_low, s.ci_high),
                p,
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&header.map(String::from));
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::stats::summarize;

    #[test]
    fn partition_csv_round_trip() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let p = Partition::from_labels(&g, &[0, 0, 1, 1]).unwrap();
        let text = partition_csv(&p);
        assert_eq!(text, "node_id,community_id\n0,0\n1,0\n2,1\n3,1\n");
        assert_eq!(parse_partition_csv(&text).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn partition_csv_errors() {
        assert!(parse_partition_csv("node_id,community_id\n0,0\n0,1\n").is_err());
        assert!(parse_partition_csv("node_id,community_id\n5,0\n").is_err());
        assert!(matches!(
            parse_partition_csv("node_id,community_id\n0;0\n"),
            Err(FormatError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn trace_without_timings_is_zeroed() {
        let r = IterationRecord {
            t: 1,
            q_ref: 0.25,
            q_quant: 0.125,
            accepted: false,
            communities: 3,
            millis: 17.5,
        };
        assert_eq!(
            trace_csv(std::slice::from_ref(&r), false),
            "t,Q_ref,Q_quant,accepted,communities,millis\n1,0.25,0.125,false,3,0\n"
        );
        assert!(trace_csv(&[r], true).ends_with(",17.5\n"));
    }

    #[test]
    fn table_marks_significance() {
        let row = |m: &str, v: &[f64], p| MethodSummary {
            method: m.to_string(),
            summary: summarize(v, 0.95).unwrap(),
            p_vs_baseline: p,
        };
        let t = render_table(&[row("leiden", &[0.14, 0.15], None), row("leiden-haar", &[0.18, 0.19], Some(0.01))]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("Method"));
        assert!(lines[2].ends_with('-'));
        assert!(lines[3].ends_with("0.0100*"));
    }
}
