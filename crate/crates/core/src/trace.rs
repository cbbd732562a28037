//! Per-iteration trace records and their CSV / JSON-lines encodings.
//!
//! CSV columns are `k,objective,lagrangian,primal_res,step_tilde,step_sigma,min_gamma,seconds`,
//! followed by `probe_performed,lambda_H,escaped` for curvature-aware runs.
//! JSON lines carry the same keys.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const BASE_COLUMNS: [&str; 8] = [
    "k",
    "objective",
    "lagrangian",
    "primal_res",
    "step_tilde",
    "step_sigma",
    "min_gamma",
    "seconds",
];

pub const CURVATURE_COLUMNS: [&str; 3] = ["probe_performed", "lambda_H", "escaped"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureColumns {
    pub probe_performed: u8,
    #[serde(rename = "lambda_H")]
    pub lambda_h: f64,
    pub escaped: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub objective: f64,
    pub lagrangian: f64,
    pub primal_res: f64,
    pub step_tilde: f64,
    pub step_sigma: f64,
    pub min_gamma: f64,
    pub seconds: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureColumns>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    fn has_curvature(&self) -> bool {
        self.records.iter().any(|r| r.curvature.is_some())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let curv = self.has_curvature();
        let mut header = BASE_COLUMNS.join(",");
        if curv {
            header.push(',');
            header.push_str(&CURVATURE_COLUMNS.join(","));
        }
        writeln!(w, "{header}")?;
        for r in &self.records {
            write!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.k, r.objective, r.lagrangian, r.primal_res, r.step_tilde, r.step_sigma, r.min_gamma, r.seconds
            )?;
            if curv {
                let c = r.curvature.unwrap_or(CurvatureColumns {
                    probe_performed: 0,
                    lambda_h: 0.0,
                    escaped: 0,
                });
                write!(w, ",{},{},{}", c.probe_performed, c.lambda_h, c.escaped)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Writes `bytes` to `path` via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize) -> TraceRecord {
        TraceRecord {
            k,
            objective: -1.5,
            lagrangian: -1.25,
            primal_res: 0.1,
            step_tilde: 0.2,
            step_sigma: 0.3,
            min_gamma: 0.9,
            seconds: 0.0,
            curvature: None,
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let mut t = Trace::default();
        t.push(rec(1));
        let s = t.to_csv_string();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,objective,lagrangian,primal_res,step_tilde,step_sigma,min_gamma,seconds"
        );
        assert_eq!(lines.next().unwrap(), "1,-1.5,-1.25,0.1,0.2,0.3,0.9,0");
    }

    #[test]
    fn curvature_columns_appended() {
        let mut t = Trace::default();
        t.push(rec(1));
        let mut r = rec(2);
        r.curvature = Some(CurvatureColumns { probe_performed: 1, lambda_h: -4.0, escaped: 1 });
        t.push(r);
        let s = t.to_csv_string();
        assert!(s.lines().next().unwrap().ends_with("seconds,probe_performed,lambda_H,escaped"));
        assert!(s.lines().nth(1).unwrap().ends_with(",0,0,0"));
        assert!(s.lines().nth(2).unwrap().ends_with(",1,-4,1"));
    }

    #[test]
    fn jsonl_keys_match_csv() {
        let mut t = Trace::default();
        let mut r = rec(3);
        r.curvature = Some(CurvatureColumns { probe_performed: 1, lambda_h: -0.5, escaped: 0 });
        t.push(r);
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in BASE_COLUMNS.iter().chain(CURVATURE_COLUMNS.iter()) {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
