//! JSON and CSV renderings of check results.

use super::CheckResult;
use crate::error::{Error, Result};
use serde::Serialize;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Serialize)]
struct Summary {
    total: usize,
    passed: usize,
    failed: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    summary: Summary,
    results: &'a [CheckResult],
}

#[derive(Serialize)]
struct Row<'a> {
    id: &'a str,
    geometry: &'a str,
    complex: &'a str,
    predicted: &'a str,
    predicted_decimal: &'a str,
    computed: &'a str,
    abs_error: f64,
    tolerance: f64,
    uncertainty: f64,
    truncation_budget: f64,
    wall_time_s: f64,
    status: super::Status,
}

const CSV_HEADER: [&str; 12] = [
    "id",
    "geometry",
    "complex",
    "predicted",
    "predicted_decimal",
    "computed",
    "abs_error",
    "tolerance",
    "uncertainty",
    "truncation_budget",
    "wall_time_s",
    "status",
];

/// Renders `results`. JSON carries summary counts and every measurement; CSV has one
/// headline row per check.
pub fn emit_report(results: &[CheckResult], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let passed = results.iter().filter(|r| r.passed()).count();
            let report = Report {
                summary: Summary {
                    total: results.len(),
                    passed,
                    failed: results.len() - passed,
                },
                results,
            };
            Ok(serde_json::to_string_pretty(&report)?)
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in results {
                w.serialize(Row {
                    id: &r.id,
                    geometry: &r.geometry,
                    complex: &r.complex,
                    predicted: &r.predicted,
                    predicted_decimal: &r.predicted_decimal,
                    computed: &r.computed,
                    abs_error: r.abs_error,
                    tolerance: r.tolerance,
                    uncertainty: r.uncertainty,
                    truncation_budget: r.truncation_budget,
                    wall_time_s: r.wall_time_s,
                    status: r.status,
                })?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{Measurement, Status};
    use crate::numeric::{Dd, PiPoly};

    fn result(pass: bool) -> CheckResult {
        let m = Measurement::exact("x", &PiPoly::ratio(1, 2), Dd::from(if pass { 0.5 } else { 0.6 }), 0.0, 1e-20);
        CheckResult {
            id: "MS-CONST".into(),
            geometry: "S2(r=1)".into(),
            complex: "derham".into(),
            predicted: m.predicted.clone(),
            predicted_decimal: m.predicted_decimal.clone(),
            computed: m.computed.clone(),
            abs_error: m.abs_error,
            tolerance: m.tolerance,
            uncertainty: 0.0,
            truncation_budget: 0.0,
            wall_time_s: 0.0,
            status: if m.pass { Status::Pass } else { Status::Fail },
            measurements: vec![m],
            diagnostics: vec![],
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let s = emit_report(&[], ReportFormat::Csv).unwrap();
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("id,geometry,complex,predicted"));
    }

    #[test]
    fn rows_and_counts() {
        let rs = [result(true), result(false)];
        let csv = emit_report(&rs, ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",pass"));
        let json: serde_json::Value = serde_json::from_str(&emit_report(&rs, ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(json["summary"]["passed"], 1);
        assert_eq!(json["summary"]["failed"], 1);
        assert_eq!(json["results"][0]["predicted"], "1/2");
    }
}
