//! Aggregation of report JSON files into one pass/fail summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::read_text;

/// How far one verdict sits from its tolerance: above 1 means it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub report: String,
    pub verdict: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub path: String,
    pub pass: bool,
    pub verdicts: usize,
    /// Largest margin among the report's verdicts, if it has any.
    pub worst_margin: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

/// Field order is fixed so summaries diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub campaigns: usize,
    pub pass: usize,
    pub fail: usize,
    pub failed_verdicts: Vec<String>,
    /// Up to five verdicts with the largest margins, largest first.
    pub worst: Vec<Margin>,
    pub total_runtime_seconds: f64,
    pub reports: Vec<SummaryEntry>,
}

const WORST_LISTED: usize = 5;

fn margin(statistic: f64, tolerance: f64, comparison: &str) -> f64 {
    if comparison == ">" {
        tolerance / statistic
    } else {
        statistic / tolerance
    }
}

/// `(name, pass, margin)` for every verdict in a report.
fn verdicts_of(report: &Value) -> Vec<(String, bool, Option<f64>)> {
    if let Some(list) = report.get("verdicts").and_then(Value::as_array) {
        return list
            .iter()
            .map(|v| {
                let name = v.get("name").and_then(Value::as_str).unwrap_or("verdict").to_string();
                let pass = v.get("pass").and_then(Value::as_bool).unwrap_or(false);
                let m = match (
                    v.get("statistic").and_then(Value::as_f64),
                    v.get("tolerance").and_then(Value::as_f64),
                ) {
                    (Some(s), Some(t)) => Some(margin(s, t, v.get("comparison").and_then(Value::as_str).unwrap_or("<="))),
                    _ => None,
                };
                (name, pass, m)
            })
            .collect();
    }
    if let Some(pass) = report.get("pass").and_then(Value::as_bool) {
        let m = match (
            report.get("ks_distance").and_then(Value::as_f64),
            report.pointer("/config/ks_threshold").and_then(Value::as_f64),
        ) {
            (Some(d), Some(t)) => Some(d / t),
            _ => None,
        };
        let name = if m.is_some() { "ks_distance" } else { "pass" };
        return vec![(name.to_string(), pass, m)];
    }
    Vec::new()
}

fn timing_sidecar(path: &Path) -> Option<PathBuf> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".json")?;
    Some(path.with_file_name(format!("{stem}.timing.json")))
}

fn runtime_of(path: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(timing_sidecar(path)?).ok()?;
    serde_json::from_str::<Value>(&text).ok()?.get("elapsed_seconds")?.as_f64()
}

fn is_sidecar(path: &Path) -> bool {
    path.to_str().is_some_and(|s| s.ends_with(".timing.json"))
}

/// Reads every report and aggregates verdicts. Timing sidecars in the list are
/// skipped; reports without verdicts (plain simulations) count as passing.
pub fn summarize(paths: &[PathBuf]) -> Result<Summary> {
    let mut parsed = Vec::new();
    let mut bad = Vec::new();
    for path in paths.iter().filter(|p| !is_sidecar(p)) {
        let value = read_text(path).and_then(|text| {
            serde_json::from_str::<Value>(&text)
                .ok()
                .filter(Value::is_object)
                .ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    reason: "not a JSON object".into(),
                })
        });
        match value {
            Ok(v) => parsed.push((path, v)),
            Err(_) => bad.push(path.display().to_string()),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Parse {
            path: bad.join(", "),
            reason: "unreadable or not a report object".into(),
        });
    }

    let mut summary = Summary {
        campaigns: 0,
        pass: 0,
        fail: 0,
        failed_verdicts: Vec::new(),
        worst: Vec::new(),
        total_runtime_seconds: 0.0,
        reports: Vec::new(),
    };
    let mut margins = Vec::new();
    for (path, report) in parsed {
        let label = path.display().to_string();
        let verdicts = verdicts_of(&report);
        let pass = verdicts.iter().all(|v| v.1);
        let mut worst_margin: Option<f64> = None;
        for (name, ok, m) in &verdicts {
            if !ok {
                summary.failed_verdicts.push(format!("{label}: {name}"));
            }
            if let Some(m) = m {
                worst_margin = Some(worst_margin.map_or(*m, |w| w.max(*m)));
                margins.push(Margin {
                    report: label.clone(),
                    verdict: name.clone(),
                    margin: *m,
                });
            }
        }
        let runtime = runtime_of(path);
        summary.total_runtime_seconds += runtime.unwrap_or(0.0);
        summary.campaigns += 1;
        if pass {
            summary.pass += 1;
        } else {
            summary.fail += 1;
        }
        summary.reports.push(SummaryEntry {
            path: label,
            pass,
            verdicts: verdicts.len(),
            worst_margin,
            runtime_seconds: runtime,
        });
    }
    // stable sort keeps input order among ties
    margins.sort_by(|a, b| b.margin.total_cmp(&a.margin));
    margins.truncate(WORST_LISTED);
    summary.worst = margins;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, value.to_string()).unwrap();
        p
    }

    fn verdict(name: &str, pass: bool, statistic: f64, tolerance: f64, comparison: &str) -> Value {
        json!({ "name": name, "pass": pass, "statistic": statistic, "tolerance": tolerance,
                "tolerance_kind": "standard_errors", "comparison": comparison, "samples": 10 })
    }

    #[test]
    fn empty_list() {
        let s = summarize(&[]).unwrap();
        assert_eq!((s.campaigns, s.pass, s.fail), (0, 0, 0));
        let text = crate::io::to_json_string(&s);
        assert!(text.find("\"campaigns\"").unwrap() < text.find("\"pass\"").unwrap());
        assert!(text.find("\"pass\"").unwrap() < text.find("\"fail\"").unwrap());
    }

    #[test]
    fn one_passing_report() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.json", &json!({ "verdicts": [verdict("drift", true, 1.5, 3.0, "<=")] }));
        std::fs::write(dir.path().join("a.timing.json"), r#"{"elapsed_seconds": 2.5}"#).unwrap();
        let side = dir.path().join("a.timing.json");
        let s = summarize(&[p, side]).unwrap();
        assert_eq!((s.campaigns, s.pass, s.fail), (1, 1, 0));
        assert_eq!(s.total_runtime_seconds, 2.5);
        assert_eq!(s.worst[0].margin, 0.5);
    }

    #[test]
    fn mixed_reports() {
        let dir = tempfile::tempdir().unwrap();
        let paths = vec![
            write(dir.path(), "ok.json", &json!({ "verdicts": [verdict("a", true, 1.0, 3.0, "<=")] })),
            write(
                dir.path(),
                "bad.json",
                &json!({ "verdicts": [verdict("b", false, 6.0, 3.0, "<="), verdict("c", false, 2.0, 5.0, ">")] }),
            ),
            write(dir.path(), "oracle.json", &json!({ "ks_distance": 0.08, "pass": false, "config": { "ks_threshold": 0.05 } })),
            write(dir.path(), "gas.json", &json!({ "seed": 3, "n_steps": 10 })),
        ];
        let s = summarize(&paths).unwrap();
        assert_eq!((s.campaigns, s.pass, s.fail), (4, 2, 2));
        assert_eq!(s.failed_verdicts.len(), 3);
        assert_eq!(s.worst[0].margin, 2.5);
        assert_eq!(s.worst[0].verdict, "c");
        assert!((s.worst[1].margin - 2.0).abs() < 1e-12);
        assert!((s.worst[2].margin - 1.6).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_name_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("x.json");
        std::fs::write(&a, "{ not json").unwrap();
        let b = dir.path().join("missing.json");
        match summarize(&[a, b]) {
            Err(Error::Parse { path, .. }) => assert!(path.contains("x.json") && path.contains("missing.json")),
            other => panic!("{other:?}"),
        }
    }
}
