use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const HEADER: [&str; 8] = [
    "scenario",
    "method",
    "seed",
    "primary_metric",
    "iterations",
    "proposals",
    "blocking_pairs_final",
    "wall_time",
];

/// One row of a [`MetricTable`]. `seed` holds the seed for data rows and
/// `mean` or `stderr` for summary rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub method: String,
    pub seed: String,
    pub primary_metric: f64,
    pub iterations: f64,
    pub proposals: f64,
    pub blocking_pairs_final: f64,
    /// Seconds; 0 unless wall time recording is on.
    pub wall_time: f64,
}

impl MetricRow {
    pub fn is_summary(&self) -> bool {
        self.seed == MEAN || self.seed == STDERR
    }

    fn values(&self) -> [f64; 5] {
        [self.primary_metric, self.iterations, self.proposals, self.blocking_pairs_final, self.wall_time]
    }
}

pub const MEAN: &str = "mean";
pub const STDERR: &str = "stderr";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn data_rows(&self) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(|r| !r.is_summary())
    }

    pub fn summary(&self, method: &str, kind: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.method == method && r.seed == kind)
    }

    /// Appends a mean row per method, in `methods` order, each followed by a
    /// standard-error row (n-1 sample variance) when the method has at least
    /// two runs.
    pub fn append_summaries(&mut self, scenario: &str, methods: &[&str]) {
        let mut extra = Vec::new();
        for &method in methods {
            let values: Vec<[f64; 5]> = self.data_rows().filter(|r| r.method == method).map(MetricRow::values).collect();
            let n = values.len();
            if n == 0 {
                continue;
            }
            let mut mean = [0.0; 5];
            let mut stderr = [0.0; 5];
            for k in 0..5 {
                mean[k] = values.iter().map(|v| v[k]).sum::<f64>() / n as f64;
                if n > 1 {
                    let ss: f64 = values.iter().map(|v| (v[k] - mean[k]).powi(2)).sum();
                    stderr[k] = (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt();
                }
            }
            let kinds = if n > 1 { &[(MEAN, mean), (STDERR, stderr)][..] } else { &[(MEAN, mean)][..] };
            for &(kind, v) in kinds {
                extra.push(MetricRow {
                    scenario: scenario.to_string(),
                    method: method.to_string(),
                    seed: kind.to_string(),
                    primary_metric: v[0],
                    iterations: v[1],
                    proposals: v[2],
                    blocking_pairs_final: v[3],
                    wall_time: v[4],
                });
            }
        }
        self.rows.extend(extra);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<std::result::Result<Vec<MetricRow>, _>>()?;
        Ok(MetricTable { rows })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}
