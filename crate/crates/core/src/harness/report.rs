//! CSV and JSON reports with deterministic float formatting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::experiment::{TrialResult, TrialSummary};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(invalid(format!("unknown format {s:?}"))),
        }
    }
}

/// 17 significant digits; `NA` for missing values.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "name",
    "algorithm",
    "trials",
    "mean_tau",
    "ci95_tau",
    "mean_ifo",
    "ci95_ifo",
    "bound_tau",
    "bound_ifo",
    "bound_valid",
    "cap_hits",
    "pass",
];

pub fn report(summaries: &[TrialSummary], format: Format) -> Result<String> {
    if summaries.is_empty() {
        return Err(invalid("nothing to report"));
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(summaries)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SUMMARY_COLUMNS)?;
            for s in summaries {
                w.write_record([
                    s.name.clone(),
                    s.algorithm.clone(),
                    s.trials.to_string(),
                    fmt_f64(s.mean_tau),
                    fmt_opt(s.ci95_tau),
                    fmt_f64(s.mean_ifo),
                    fmt_opt(s.ci95_ifo),
                    fmt_opt(s.bound_tau),
                    fmt_opt(s.bound_ifo),
                    s.bound_valid.to_string(),
                    s.cap_hits.to_string(),
                    s.pass.to_string(),
                ])?;
            }
            into_string(w)
        }
    }
}

pub fn parse_json_report(s: &str) -> Result<Vec<TrialSummary>> {
    Ok(serde_json::from_str(s)?)
}

/// One CSV row per trial: `seed,tau,ifo,final_grad_norm_sq_V,final_grad_norm_sq_T`.
pub fn trials_csv(results: &[TrialResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "tau", "ifo", "final_grad_norm_sq_V", "final_grad_norm_sq_T"])?;
    for r in results {
        w.write_record([
            r.seed.to_string(),
            r.record.tau.to_string(),
            r.record.ifo_count.to_string(),
            fmt_opt(r.final_grad_norm_sq_v),
            fmt_f64(r.final_grad_norm_sq_t),
        ])?;
    }
    into_string(w)
}

/// One JSON object per line, one line per run record.
pub fn records_jsonl(results: &[TrialResult]) -> Result<String> {
    let mut out = String::new();
    for r in results {
        writeln!(out, "{}", serde_json::to_string(&r.record)?).expect("write to String");
    }
    Ok(out)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(name: &str, ci: Option<f64>) -> TrialSummary {
        TrialSummary {
            name: name.into(),
            algorithm: "sgd".into(),
            trials: 3,
            mean_tau: 5.0,
            ci95_tau: ci,
            mean_ifo: 9.0,
            ci95_ifo: ci,
            bound_tau: Some(402.0),
            bound_ifo: Some(805.0),
            bound_valid: true,
            cap_hits: 0,
            pass: true,
        }
    }

    #[test]
    fn csv_rows_in_order() {
        assert!(report(&[], Format::Csv).is_err());
        let one = report(&[summary("a", None)], Format::Csv).unwrap();
        assert_eq!(one.lines().count(), 2);
        assert!(one.contains(",NA,") && one.contains("5.0000000000000000e0"));
        let two = report(&[summary("a", Some(0.1)), summary("b", None)], Format::Csv).unwrap();
        let rows: Vec<&str> = two.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].starts_with("a,") && rows[2].starts_with("b,"));
    }

    #[test]
    fn json_round_trip() {
        let xs = vec![summary("a", Some(0.1 + 0.2)), summary("b", None)];
        let back = parse_json_report(&report(&xs, Format::Json).unwrap()).unwrap();
        assert_eq!(back, xs);
    }
}
