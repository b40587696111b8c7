//! Application results, speedup summaries, and sweep artifacts.
//!
//! Workload records hold a baseline measurement plus one measurement per
//! interleave ratio. Speedups are normalized so that bigger is always
//! better, regardless of whether the metric itself is a time or a rate,
//! and rounded to four decimals so reports are stable across platforms.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::calibration::{ProfileSet, WorkloadMix};
use crate::policy::InterleaveWeights;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {origin}")]
    Parse {
        origin: String,
        source: serde_json::Error,
    },
    #[error("workload {workload:?}: {reason}")]
    InvalidRecord { workload: String, reason: String },
    #[error("{what} is empty")]
    EmptyInput { what: &'static str },
    #[error("geometric mean needs positive values, got {value}")]
    NonPositive { value: f64 },
    #[error("no all-first-tier baseline row among the weight sets")]
    MissingBaseline,
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// Whether smaller or larger metric values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Higher,
}

/// Unit of a workload measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TimeS,
    MsPerQuery,
    Gflops,
    TokenMs,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Metric::TimeS => "time_s",
            Metric::MsPerQuery => "ms_per_query",
            Metric::Gflops => "gflops",
            Metric::TokenMs => "token_ms",
        };
        f.write_str(s)
    }
}

/// One application measured at the baseline and under interleave ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadRecord {
    pub workload: String,
    pub metric: Metric,
    pub direction: Direction,
    /// Metric value with all pages on the first tier.
    pub baseline: f64,
    /// Metric value per interleave ratio label, e.g. "3:1".
    pub variants: BTreeMap<String, f64>,
}

impl WorkloadRecord {
    fn validate(&self) -> Result<(), ReportError> {
        let invalid = |reason: String| ReportError::InvalidRecord {
            workload: self.workload.clone(),
            reason,
        };
        if self.workload.is_empty() {
            return Err(ReportError::InvalidRecord {
                workload: String::new(),
                reason: "workload name is empty".into(),
            });
        }
        if self.baseline <= 0.0 || self.baseline.is_nan() {
            return Err(invalid(format!(
                "baseline must be positive, got {}",
                self.baseline
            )));
        }
        if self.variants.is_empty() {
            return Err(invalid("no variant measurements".into()));
        }
        for (label, value) in &self.variants {
            if *value <= 0.0 || value.is_nan() {
                return Err(invalid(format!(
                    "variant {label:?} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Speedup of one variant over the baseline; > 1 means the variant wins.
    pub fn speedup(&self, variant_value: f64) -> f64 {
        let ratio = match self.direction {
            Direction::Lower => self.baseline / variant_value,
            Direction::Higher => variant_value / self.baseline,
        };
        round4(ratio)
    }
}

/// Round to four decimals, the precision reports carry.
pub fn round4(value: f64) -> f64 {
    (value * 10_000.0).round() / 10_000.0
}

/// Parse workload records from JSON (a top-level array).
pub fn parse_workloads(json: &str, origin: &str) -> Result<Vec<WorkloadRecord>, ReportError> {
    let records: Vec<WorkloadRecord> =
        serde_json::from_str(json).map_err(|source| ReportError::Parse {
            origin: origin.to_string(),
            source,
        })?;
    if records.is_empty() {
        return Err(ReportError::EmptyInput {
            what: "workload file",
        });
    }
    for record in &records {
        record.validate()?;
    }
    Ok(records)
}

/// Load workload records from a JSON file.
pub fn load_workloads(path: &Path) -> Result<Vec<WorkloadRecord>, ReportError> {
    let json = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_workloads(&json, &path.display().to_string())
}

/// Per-workload speedups plus the winning ratio.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedupRow {
    pub workload: String,
    pub metric: Metric,
    pub baseline: f64,
    /// Speedup per ratio label, rounded to four decimals.
    pub speedups: BTreeMap<String, f64>,
    pub best_variant: String,
    pub best_speedup: f64,
}

/// All workloads summarized, with the headline geometric mean.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub rows: Vec<SpeedupRow>,
    /// Geometric mean of each workload's best speedup.
    pub geomean_best_speedup: f64,
}

/// Geometric mean of positive values.
pub fn geomean(values: &[f64]) -> Result<f64, ReportError> {
    if values.is_empty() {
        return Err(ReportError::EmptyInput { what: "value list" });
    }
    let mut log_sum = 0.0;
    for &value in values {
        if value <= 0.0 || value.is_nan() {
            return Err(ReportError::NonPositive { value });
        }
        log_sum += value.ln();
    }
    Ok((log_sum / values.len() as f64).exp())
}

/// Build speedup rows and the best-case geometric mean.
pub fn summarize(records: &[WorkloadRecord]) -> Result<SummaryReport, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyInput {
            what: "workload list",
        });
    }
    let mut rows = Vec::with_capacity(records.len());
    for record in records {
        record.validate()?;
        let mut speedups = BTreeMap::new();
        let mut best: Option<(&str, f64)> = None;
        for (label, value) in &record.variants {
            let s = record.speedup(*value);
            speedups.insert(label.clone(), s);
            // Strict comparison keeps the first label on exact ties.
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((label, s));
            }
        }
        let (best_variant, best_speedup) = best.expect("validated non-empty variants");
        rows.push(SpeedupRow {
            workload: record.workload.clone(),
            metric: record.metric,
            baseline: record.baseline,
            speedups,
            best_variant: best_variant.to_string(),
            best_speedup,
        });
    }
    let bests: Vec<f64> = rows.iter().map(|r| r.best_speedup).collect();
    let geomean_best_speedup = round4(geomean(&bests)?);
    Ok(SummaryReport {
        rows,
        geomean_best_speedup,
    })
}

/// One model prediction normalized against the first-tier-only baseline.
#[derive(Debug, Clone, Serialize)]
pub struct MlcRow {
    pub weights: String,
    pub predicted_gbps: f64,
    /// Predicted aggregate over the baseline prediction.
    pub normalized: f64,
}

/// Predict aggregate bandwidth for each weight set and normalize against
/// the set that puts everything on the first tier.
pub fn mlc_table(
    profiles: &ProfileSet,
    mix: &WorkloadMix,
    weight_sets: &[InterleaveWeights],
) -> Result<Vec<MlcRow>, ReportError> {
    if weight_sets.is_empty() {
        return Err(ReportError::EmptyInput {
            what: "weight list",
        });
    }
    let mut predictions = Vec::with_capacity(weight_sets.len());
    let mut baseline = None;
    for weights in weight_sets {
        let prediction = analytic::predict_bandwidth(profiles, weights, mix)?;
        let first_tier_only = weights.get(0) > 0 && (1..weights.len()).all(|i| weights.get(i) == 0);
        if first_tier_only && baseline.is_none() {
            baseline = Some(prediction.aggregate_gbps);
        }
        predictions.push((weights.label(), prediction.aggregate_gbps));
    }
    let baseline = baseline.ok_or(ReportError::MissingBaseline)?;
    Ok(predictions
        .into_iter()
        .map(|(weights, predicted_gbps)| MlcRow {
            weights,
            predicted_gbps,
            normalized: round4(predicted_gbps / baseline),
        })
        .collect())
}

/// One point on a throughput-latency curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub label: String,
    pub gbps: f64,
    pub ns: f64,
}

/// Write `sweep.csv` and `sweep.svg` under `dir`, creating it if needed.
/// Output depends only on the points, so re-emission is byte-identical.
pub fn emit_curve(points: &[CurvePoint], dir: &Path) -> Result<(PathBuf, PathBuf), ReportError> {
    if points.is_empty() {
        return Err(ReportError::EmptyInput { what: "curve" });
    }
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv_path = dir.join("sweep.csv");
    let svg_path = dir.join("sweep.svg");

    let mut csv = String::from("label,aggregate_gbps,mean_latency_ns\n");
    for p in points {
        csv.push_str(&format!(
            "{},{:.3},{:.2}\n",
            crate::csv_field(&p.label),
            p.gbps,
            p.ns
        ));
    }
    write_file(&csv_path, csv.as_bytes())?;
    write_file(&svg_path, render_svg(points).as_bytes())?;
    Ok((csv_path, svg_path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(bytes).map_err(io)
}

/// Throughput on x, mean latency on y, points joined in input order.
fn render_svg(points: &[CurvePoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let span = |values: Vec<f64>| -> (f64, f64) {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.05).max(hi.abs() * 0.01).max(1.0);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(points.iter().map(|p| p.gbps).collect());
    let (y0, y1) = span(points.iter().map(|p| p.ns).collect());
    let sx = |v: f64| ML + (v - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |v: f64| H - MB - (v - y0) / (y1 - y0) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Axes with five ticks each.
    svg.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.0}</text>\n",
            sx(xv),
            H - MB + 18.0,
            xv
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.0}</text>\n",
            ML - 6.0,
            sy(yv) + 4.0,
            yv
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">aggregate bandwidth (GB/s)</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">mean latency (ns)</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    ));
    let path: Vec<String> = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", sx(p.gbps), sy(p.ns)))
        .collect();
    svg.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\"/>\n",
        path.join(" ")
    ));
    for p in points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f6fb2\"/>\n",
            sx(p.gbps),
            sy(p.ns)
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            sx(p.gbps) + 6.0,
            sy(p.ns) - 6.0,
            xml_escape(&p.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bundled_profiles, bundled_workloads, REFERENCE_GEOMEAN_SPEEDUP};
    use approx::assert_relative_eq;

    fn pair(w0: u32, w1: u32) -> InterleaveWeights {
        InterleaveWeights::pair(w0, w1).unwrap()
    }

    #[test]
    fn bundled_records_parse_with_expected_shape() {
        let records = bundled_workloads();
        assert_eq!(records.len(), 6);
        let faiss = records.iter().find(|r| r.workload == "FAISS").unwrap();
        assert_eq!(faiss.variants.len(), 2);
        assert_eq!(faiss.metric, Metric::MsPerQuery);
        assert_eq!(faiss.direction, Direction::Lower);
        let hpcg = records.iter().find(|r| r.workload == "HPCG").unwrap();
        assert_eq!(hpcg.direction, Direction::Higher);
    }

    #[test]
    fn speedup_respects_direction_and_rounds() {
        let records = bundled_workloads();
        let llm = records
            .iter()
            .find(|r| r.workload == "LLM inference")
            .unwrap();
        assert_eq!(llm.speedup(36.83), 1.1651);
        let hpcg = records.iter().find(|r| r.workload == "HPCG").unwrap();
        assert_eq!(hpcg.speedup(117.0), 1.2717);
    }

    #[test]
    fn summary_reproduces_reference_winners_and_geomean() {
        let summary = summarize(&bundled_workloads()).unwrap();
        let best: BTreeMap<&str, &str> = summary
            .rows
            .iter()
            .map(|r| (r.workload.as_str(), r.best_variant.as_str()))
            .collect();
        assert_eq!(best["LLM inference"], "3:1");
        assert_eq!(best["FAISS"], "2:1");
        assert_eq!(best["OpenFOAM"], "5:2");
        assert_eq!(best["HPCG"], "3:1");
        assert_eq!(best["Xcompact3D"], "5:2");
        assert_eq!(best["POT3D"], "5:2");
        assert!(
            (summary.geomean_best_speedup - 1.2345).abs() <= 0.0005,
            "geomean {}",
            summary.geomean_best_speedup
        );
        // The bundled records back the published headline number.
        assert_relative_eq!(
            summary.geomean_best_speedup,
            REFERENCE_GEOMEAN_SPEEDUP,
            max_relative = 0.005
        );
    }

    #[test]
    fn geomean_basics() {
        assert_relative_eq!(geomean(&[2.0, 8.0]).unwrap(), 4.0, max_relative = 1e-12);
        let a = geomean(&[1.1, 1.2, 1.3]).unwrap();
        let b = geomean(&[1.3, 1.1, 1.2]).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(matches!(geomean(&[]), Err(ReportError::EmptyInput { .. })));
        assert!(matches!(
            geomean(&[1.0, 0.0]),
            Err(ReportError::NonPositive { .. })
        ));
        assert!(matches!(
            geomean(&[1.0, -2.0]),
            Err(ReportError::NonPositive { .. })
        ));
    }

    #[test]
    fn record_validation_rejects_bad_values() {
        let json = r#"[{"workload":"x","metric":"time_s","direction":"lower",
                        "baseline":0.0,"variants":{"3:1":1.0}}]"#;
        assert!(matches!(
            parse_workloads(json, "test"),
            Err(ReportError::InvalidRecord { .. })
        ));
        let json = r#"[{"workload":"x","metric":"time_s","direction":"lower",
                        "baseline":1.0,"variants":{}}]"#;
        assert!(matches!(
            parse_workloads(json, "test"),
            Err(ReportError::InvalidRecord { .. })
        ));
        let json = r#"[{"workload":"x","metric":"parsecs","direction":"lower",
                        "baseline":1.0,"variants":{"3:1":1.0}}]"#;
        assert!(matches!(
            parse_workloads(json, "test"),
            Err(ReportError::Parse { .. })
        ));
        assert!(matches!(
            parse_workloads("[]", "test"),
            Err(ReportError::EmptyInput { .. })
        ));
        assert!(matches!(
            load_workloads(Path::new("/nonexistent/workloads.json")),
            Err(ReportError::Io { .. })
        ));
    }

    #[test]
    fn mlc_table_normalizes_against_first_tier_baseline() {
        let profiles = bundled_profiles();
        let mix: WorkloadMix = "1r0w".parse().unwrap();
        let sets = vec![pair(1, 0), pair(1, 1), pair(5, 2), pair(3, 1)];
        let rows = mlc_table(&profiles, &mix, &sets).unwrap();
        assert_eq!(rows[0].weights, "(1,0)");
        assert_eq!(rows[0].normalized, 1.0);
        let three_one = &rows[3];
        assert_relative_eq!(three_one.predicted_gbps, 2224.0 / 3.0, max_relative = 1e-12);
        assert_eq!(three_one.normalized, 1.3333);
        let no_baseline = mlc_table(&profiles, &mix, &[pair(1, 1), pair(3, 1)]);
        assert!(matches!(no_baseline, Err(ReportError::MissingBaseline)));
    }

    #[test]
    fn curve_emission_is_deterministic_and_quoted() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("artifacts");
        let points = vec![
            CurvePoint {
                label: "(1,0)".into(),
                gbps: 556.0,
                ns: 180.0,
            },
            CurvePoint {
                label: "(3,1)".into(),
                gbps: 690.0,
                ns: 220.0,
            },
        ];
        let (csv_path, svg_path) = emit_curve(&points, &out).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(
            csv,
            "label,aggregate_gbps,mean_latency_ns\n\"(1,0)\",556.000,180.00\n\"(3,1)\",690.000,220.00\n"
        );
        let svg_a = std::fs::read(&svg_path).unwrap();
        emit_curve(&points, &out).unwrap();
        let svg_b = std::fs::read(&svg_path).unwrap();
        assert_eq!(svg_a, svg_b);
        let text = String::from_utf8(svg_a).unwrap();
        assert!(text.starts_with("<svg "));
        assert!(text.contains("(3,1)"));

        let empty = emit_curve(&[], &dir.path().join("nothing"));
        assert!(matches!(empty, Err(ReportError::EmptyInput { .. })));
        assert!(!dir.path().join("nothing").exists());
    }
}
