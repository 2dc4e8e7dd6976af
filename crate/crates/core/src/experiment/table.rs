use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{metric_benefit, metric_gap, metric_increment};
use crate::error::{Error, Result};
use crate::solution::{Certificate, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

/// One solver run; the column order is fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub scenario: String,
    pub label: String,
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub status: Status,
    pub profit: Option<f64>,
    pub time_seconds: f64,
    pub certificate: Option<Certificate>,
    pub nodes: u64,
    pub error: String,
}

/// Per scenario and method: counts and means over successful runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub label: String,
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    pub proven: usize,
    pub mean_profit: Option<f64>,
    pub mean_time_seconds: Option<f64>,
}

/// Comparison of two methods' mean profits on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub label: String,
    /// `gap`, `increment` or `benefit`.
    pub metric: String,
    pub method: Method,
    pub reference: Method,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub raw: Vec<RawRow>,
    pub aggregates: Vec<AggregateRow>,
    pub metrics: Vec<MetricRow>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub(crate) fn read_raw(path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

const RAW_HEADER: [&str; 11] = [
    "scenario",
    "label",
    "replication",
    "seed",
    "method",
    "status",
    "profit",
    "time_seconds",
    "certificate",
    "nodes",
    "error",
];
const AGGREGATE_HEADER: [&str; 8] = [
    "scenario",
    "label",
    "method",
    "runs",
    "failed",
    "proven",
    "mean_profit",
    "mean_time_seconds",
];
const METRIC_HEADER: [&str; 6] = ["scenario", "label", "metric", "method", "reference", "value"];

/// Order by scenario position in `order`, replication, then method position in `methods`.
pub(crate) fn sort_rows(rows: &mut [RawRow], order: &[String], methods: &[Method]) {
    let pos = |s: &String| order.iter().position(|o| o == s).unwrap_or(usize::MAX);
    let mpos = |m: Method| methods.iter().position(|&o| o == m).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        (pos(&a.scenario), &a.scenario, a.replication, mpos(a.method), a.method).cmp(&(
            pos(&b.scenario),
            &b.scenario,
            b.replication,
            mpos(b.method),
            b.method,
        ))
    });
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

impl ResultTable {
    /// Aggregates and metrics recomputed from raw rows; scenarios follow
    /// `order`, then first appearance.
    pub fn from_raw(raw: Vec<RawRow>, order: &[String]) -> Self {
        let mut scenarios: Vec<(String, String)> = Vec::new();
        for key in order {
            if let Some(r) = raw.iter().find(|r| &r.scenario == key) {
                scenarios.push((r.scenario.clone(), r.label.clone()));
            }
        }
        for r in &raw {
            if !scenarios.iter().any(|s| s.0 == r.scenario) {
                scenarios.push((r.scenario.clone(), r.label.clone()));
            }
        }

        let mut aggregates = Vec::new();
        let mut metrics = Vec::new();
        for (scenario, label) in &scenarios {
            let mut methods: Vec<Method> = Vec::new();
            for r in raw.iter().filter(|r| &r.scenario == scenario) {
                if !methods.contains(&r.method) {
                    methods.push(r.method);
                }
            }
            let mut means: Vec<(Method, f64)> = Vec::new();
            for &method in &methods {
                let rows: Vec<&RawRow> = raw
                    .iter()
                    .filter(|r| &r.scenario == scenario && r.method == method)
                    .collect();
                let ok: Vec<&&RawRow> = rows.iter().filter(|r| r.status == Status::Ok).collect();
                let profits: Vec<f64> = ok.iter().filter_map(|r| r.profit).collect();
                let times: Vec<f64> = ok.iter().map(|r| r.time_seconds).collect();
                let row = AggregateRow {
                    scenario: scenario.clone(),
                    label: label.clone(),
                    method,
                    runs: rows.len(),
                    failed: rows.len() - ok.len(),
                    proven: ok
                        .iter()
                        .filter(|r| r.certificate == Some(Certificate::ProvenOptimal))
                        .count(),
                    mean_profit: mean(&profits),
                    mean_time_seconds: mean(&times),
                };
                if let Some(p) = row.mean_profit {
                    means.push((method, p));
                }
                aggregates.push(row);
            }

            let get = |m: Method| means.iter().find(|x| x.0 == m).map(|x| x.1);
            let mut push = |metric: &str, method: Method, reference: Method, value: Option<f64>| {
                if let Some(value) = value {
                    metrics.push(MetricRow {
                        scenario: scenario.clone(),
                        label: label.clone(),
                        metric: metric.into(),
                        method,
                        reference,
                        value,
                    });
                }
            };
            if let (Some(e), Some(h)) = (get(Method::Exact), get(Method::Its)) {
                push("gap", Method::Exact, Method::Its, metric_gap(e, h).ok());
            }
            let joint = [Method::Exact, Method::Its]
                .into_iter()
                .find_map(|m| get(m).map(|p| (m, p)));
            if let Some((jm, jp)) = joint {
                for bm in [Method::Bm1, Method::Bm2, Method::Bm3] {
                    if let Some(bp) = get(bm) {
                        push("increment", jm, bm, Some(metric_increment(jp, bp)));
                        push("benefit", jm, bm, metric_benefit(jp, bp).ok());
                    }
                }
            }
        }
        ResultTable {
            raw,
            aggregates,
            metrics,
        }
    }

    pub fn raw_csv(&self) -> Result<String> {
        to_csv(&self.raw, &RAW_HEADER)
    }

    pub fn aggregate_csv(&self) -> Result<String> {
        to_csv(&self.aggregates, &AGGREGATE_HEADER)
    }

    pub fn metrics_csv(&self) -> Result<String> {
        to_csv(&self.metrics, &METRIC_HEADER)
    }

    pub fn parse_raw_csv(text: &str) -> Result<Vec<RawRow>> {
        parse_csv(text)
    }

    pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
        parse_csv(text)
    }

    pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
        parse_csv(text)
    }

    /// Mean profit of one method on one scenario.
    pub fn mean_profit(&self, scenario: &str, method: Method) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.scenario == scenario && a.method == method)
            .and_then(|a| a.mean_profit)
    }

    /// Human-readable aligned tables, six decimals.
    pub fn render(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let mut agg = vec![vec![
            "scenario".to_string(),
            "method".into(),
            "runs".into(),
            "failed".into(),
            "proven".into(),
            "mean_profit".into(),
            "mean_time_s".into(),
        ]];
        for a in &self.aggregates {
            agg.push(vec![
                a.label.clone(),
                a.method.to_string(),
                a.runs.to_string(),
                a.failed.to_string(),
                a.proven.to_string(),
                fmt(a.mean_profit),
                fmt(a.mean_time_seconds),
            ]);
        }
        let mut met = vec![vec![
            "scenario".to_string(),
            "metric".into(),
            "method".into(),
            "reference".into(),
            "value".into(),
        ]];
        for m in &self.metrics {
            met.push(vec![
                m.label.clone(),
                m.metric.clone(),
                m.method.to_string(),
                m.reference.to_string(),
                fmt(Some(m.value)),
            ]);
        }
        let mut out = align(&agg);
        if !self.metrics.is_empty() {
            out.push('\n');
            out.push_str(&align(&met));
        }
        out
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
