use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BenchError, GnSettings};

/// A nonnegative error split into rectangular parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PartErrors {
    pub real: f64,
    pub imag: f64,
}

impl PartErrors {
    pub fn max(self, other: PartErrors) -> PartErrors {
        PartErrors {
            real: self.real.max(other.real),
            imag: self.imag.max(other.imag),
        }
    }

    /// Componentwise maximum over a slice.
    pub fn max_of(values: &[PartErrors]) -> PartErrors {
        values.iter().fold(PartErrors::default(), |a, &b| a.max(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodLabel {
    Wls,
    Interval,
}

impl MethodLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodLabel::Wls => "wls",
            MethodLabel::Interval => "interval",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub mae: PartErrors,
    pub iterations: usize,
    pub seconds: f64,
}

/// Wall-clock statistics of one timed quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub warmup: usize,
    pub repeats: usize,
    pub threads: usize,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    pub total_seconds: f64,
}

impl TimingReport {
    pub fn from_samples(samples: &[f64], warmup: usize, threads: usize) -> TimingReport {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        let total: f64 = samples.iter().sum();
        TimingReport {
            warmup,
            repeats: n,
            threads,
            median_seconds: median,
            mean_seconds: if n == 0 { 0.0 } else { total / n as f64 },
            total_seconds: total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosureSummary {
    pub beta: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub nested_checks: usize,
    /// Largest state radius per part.
    pub max_radius: PartErrors,
    pub contains_truth: bool,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: MethodLabel,
    pub scenario_hash: String,
    pub network_source: String,
    pub placement_source: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub load_scale: f64,
    pub redundancy: f64,
    pub bus_ids: Vec<String>,
    /// Interval: absolute error of the single estimate. WLS: per-bus maximum
    /// over all trials.
    pub per_bus_abs_error: Vec<PartErrors>,
    /// Root-mean-square error per bus across trials (WLS only).
    pub per_bus_rmse: Option<Vec<PartErrors>>,
    /// Maximum over buses; for WLS the worst single-trial value.
    pub mae: PartErrors,
    pub max_rmse: Option<PartErrors>,
    pub trials: Vec<TrialRecord>,
    pub timing: TimingReport,
    /// Stopping rule of the WLS solves (WLS only).
    pub gn: Option<GnSettings>,
    pub enclosure: Option<EnclosureSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_hash: String,
    pub wls: EstimateReport,
    pub interval: EstimateReport,
    /// Sequential WLS solves timed for the ratio.
    pub wls_timing: TimingReport,
    pub interval_seconds: f64,
    pub mean_wls_trial_seconds: f64,
    /// `interval_seconds / mean_wls_trial_seconds`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum Report {
    Estimate(EstimateReport),
    Comparison(ComparisonReport),
}

impl Report {
    pub fn method_reports(&self) -> Vec<&EstimateReport> {
        match self {
            Report::Estimate(r) => vec![r],
            Report::Comparison(c) => vec![&c.wls, &c.interval],
        }
    }

    pub fn to_json(&self) -> Result<String, BenchError> {
        serde_json::to_string_pretty(self).map_err(|e| BenchError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Report, BenchError> {
        serde_json::from_str(s).map_err(|e| BenchError::Serialization(e.to_string()))
    }

    /// Long format: one `bus,part,method,error` row per bus, part and method.
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let ser = |e: csv::Error| BenchError::Serialization(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bus", "part", "method", "error"])
            .map_err(ser)?;
        for rep in self.method_reports() {
            for (bus, e) in rep.bus_ids.iter().zip(&rep.per_bus_abs_error) {
                for (part, v) in [("real", e.real), ("imag", e.imag)] {
                    w.write_record([bus.as_str(), part, rep.method.as_str(), &format!("{v:e}")])
                        .map_err(ser)?;
                }
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| BenchError::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Serialization(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(BenchError::InvalidScenario(format!(
                "unknown format {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub fn emit_report(rep: &Report, format: Format, path: &Path) -> Result<(), BenchError> {
    let body = match format {
        Format::Csv => rep.to_csv()?,
        Format::Json => rep.to_json()?,
    };
    std::fs::write(path, body).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}
