//! Estimate-versus-truth reports over a query set.

use std::io::{BufRead, Write};
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sumcard::estimator::{qerror_bound, EstimateError, Estimator, EstimatorConfig, Scalar};
use sumcard::query::{cardinality, qerror, Query};
use sumcard::rdf::RdfGraph;
use sumcard::summary::Summary;

/// Thresholds ε at which the q-error bound is reported.
pub const BOUND_EPSILONS: [f64; 3] = [10.0, 100.0, 1000.0];

/// Lower edges of the q-error histogram bins; the last bin is unbounded.
pub const PLOT_BIN_EDGES: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub query_id: String,
    pub query: String,
    pub exact: Option<u64>,
    pub estimate: Option<f64>,
    pub qerror: Option<f64>,
    pub variance: Option<f64>,
    pub bound_10: Option<f64>,
    pub bound_100: Option<f64>,
    pub bound_1000: Option<f64>,
    pub path: Option<String>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    pub min: f64,
    pub median: f64,
    pub avg: f64,
    pub max: f64,
}

impl Aggregates {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 {
            v[mid]
        } else {
            (v[mid - 1] + v[mid]) / 2.0
        };
        Some(Self {
            min: v[0],
            median,
            avg: v.iter().sum::<f64>() / v.len() as f64,
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub estimator: EstimatorConfig,
    pub exact_mode: bool,
    pub timings: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            exact_mode: false,
            timings: false,
        }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn estimate_row<S: Scalar>(
    est: &Estimator<'_>,
    q: &Query,
    row: &mut BenchRow,
) -> Result<(), EstimateError> {
    let e = est.expectation::<S>(q)?;
    let expectation = e.expectation.to_f64();
    row.estimate = Some(expectation);
    row.path = Some(e.path.to_string());
    match est.variance::<S>(q) {
        Ok(var) => {
            let var = var.to_f64();
            row.variance = Some(var);
            let bound = |eps| qerror_bound(expectation, var, eps).ok();
            row.bound_10 = bound(BOUND_EPSILONS[0]);
            row.bound_100 = bound(BOUND_EPSILONS[1]);
            row.bound_1000 = bound(BOUND_EPSILONS[2]);
        }
        Err(err) => row.error = Some(format!("variance: {err}")),
    }
    Ok(())
}

/// Runs every query against the data graph and the summary. Queries run in
/// parallel; rows come back sorted by query id. Failures become rows with an
/// error tag.
pub fn run_bench(
    graph: &RdfGraph,
    summary: &Summary,
    queries: &[(String, String)],
    options: &BenchOptions,
) -> Result<BenchReport, EstimateError> {
    let est = Estimator::new(summary, options.estimator)?;
    let mut rows: Vec<BenchRow> = queries
        .par_iter()
        .map(|(id, text)| {
            let mut row = BenchRow {
                query_id: id.clone(),
                query: text.trim().to_string(),
                exact: None,
                estimate: None,
                qerror: None,
                variance: None,
                bound_10: None,
                bound_100: None,
                bound_1000: None,
                path: None,
                error: None,
                estimate_ms: None,
                exact_ms: None,
            };
            let (on_graph, on_summary) = match (
                Query::parse(text, graph.dictionary()),
                Query::parse(text, summary.dictionary()),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    row.error = Some(format!("parse: {e}"));
                    return row;
                }
            };
            let start = Instant::now();
            let n = cardinality(&on_graph, graph.triples());
            let exact_ms = elapsed_ms(start);
            row.exact = Some(n);
            let start = Instant::now();
            let outcome = if options.exact_mode {
                estimate_row::<BigRational>(&est, &on_summary, &mut row)
            } else {
                estimate_row::<f64>(&est, &on_summary, &mut row)
            };
            let estimate_ms = elapsed_ms(start);
            match outcome {
                Ok(()) => row.qerror = row.estimate.map(|e| qerror(n, e)),
                Err(err) => row.error = Some(err.to_string()),
            }
            if options.timings {
                row.exact_ms = Some(exact_ms);
                row.estimate_ms = Some(estimate_ms);
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(BenchReport { rows })
}

impl BenchReport {
    pub fn qerrors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.qerror).collect()
    }

    pub fn aggregates(&self) -> Option<Aggregates> {
        Aggregates::of(&self.qerrors())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.estimate.is_none()).count()
    }

    /// Rows as CSV followed by `#` footer lines with the aggregates.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(sink);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "query_id", "query", "exact", "estimate", "qerror", "variance", "bound_10",
                "bound_100", "bound_1000", "path", "error",
            ])?;
        }
        w.flush()?;
        let mut sink = w.into_inner().map_err(|e| e.into_error())?;
        writeln!(sink, "# queries={} failed={}", self.rows.len(), self.failures())?;
        if let Some(a) = self.aggregates() {
            writeln!(
                sink,
                "# qerror_min={} qerror_median={} qerror_avg={} qerror_max={}",
                a.min, a.median, a.avg, a.max
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the rows of [`BenchReport::write_csv`] output, skipping the footer.
    pub fn read_csv<R: BufRead>(source: R) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(source);
        let rows = r.deserialize().collect::<Result<Vec<BenchRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Counts per q-error bin as `low,high,count` lines.
    pub fn plot_data(&self) -> String {
        let mut counts = [0usize; PLOT_BIN_EDGES.len()];
        for q in self.qerrors() {
            let bin = PLOT_BIN_EDGES.iter().rposition(|&lo| q >= lo).unwrap_or(0);
            counts[bin] += 1;
        }
        let mut out = String::from("low,high,count\n");
        for (i, c) in counts.iter().enumerate() {
            let high = PLOT_BIN_EDGES
                .get(i + 1)
                .map(|h| h.to_string())
                .unwrap_or_else(|| "inf".into());
            out.push_str(&format!("{},{high},{c}\n", PLOT_BIN_EDGES[i]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates() {
        let a = Aggregates::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((a.min, a.median, a.avg, a.max), (1.0, 2.5, 2.5, 4.0));
        assert_eq!(Aggregates::of(&[5.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert!(Aggregates::of(&[]).is_none());
    }

    #[test]
    fn plot_bins() {
        let row = |q: f64| BenchRow {
            query_id: String::new(),
            query: String::new(),
            exact: Some(1),
            estimate: Some(q),
            qerror: Some(q),
            variance: None,
            bound_10: None,
            bound_100: None,
            bound_1000: None,
            path: None,
            error: None,
            estimate_ms: None,
            exact_ms: None,
        };
        let report = BenchReport {
            rows: [1.0, 1.9, 2.0, 7.0, 99.0, 100.0, 5000.0].into_iter().map(row).collect(),
        };
        assert_eq!(
            report.plot_data(),
            "low,high,count\n1,2,2\n2,5,1\n5,10,1\n10,100,1\n100,1000,1\n1000,inf,1\n"
        );
    }
}
