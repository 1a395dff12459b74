//! Examiner leniency and the firm-year instrument.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExaminerRecord {
    pub examiner_id: String,
    pub application_id: String,
    pub firm_id: String,
    pub year: i32,
    pub is_ai: bool,
    pub granted: bool,
}

/// Grant rate on non-AI applications decided inside `window` (inclusive).
/// Examiners without such applications are left out.
pub fn examiner_leniency(records: &[ExaminerRecord], window: (i32, i32)) -> Result<BTreeMap<String, f64>> {
    if window.0 > window.1 {
        return Err(Error::invalid(format!("empty baseline window {}-{}", window.0, window.1)));
    }
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in records {
        if r.is_ai || r.year < window.0 || r.year > window.1 {
            continue;
        }
        let c = counts.entry(&r.examiner_id).or_default();
        c.0 += r.granted as u64;
        c.1 += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(e, (g, n))| (e.to_string(), g as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instrument {
    /// Mean leniency of the examiners on each firm-year's AI applications.
    pub values: BTreeMap<(String, i32), f64>,
    /// AI applications whose examiner has no leniency value.
    pub excluded: Vec<String>,
}

/// Averages examiner leniency over each firm-year's AI applications.
/// Firm-years without applications get no value.
pub fn build_instrument(records: &[ExaminerRecord], leniency: &BTreeMap<String, f64>) -> Instrument {
    let mut sums: BTreeMap<(String, i32), (f64, usize)> = BTreeMap::new();
    let mut out = Instrument::default();
    for r in records.iter().filter(|r| r.is_ai) {
        match leniency.get(&r.examiner_id) {
            Some(z) => {
                let s = sums.entry((r.firm_id.clone(), r.year)).or_default();
                s.0 += z;
                s.1 += 1;
            }
            None => out.excluded.push(r.application_id.clone()),
        }
    }
    if !out.excluded.is_empty() {
        warn!(
            "{} AI applications excluded: examiner has no baseline leniency",
            out.excluded.len()
        );
    }
    out.values = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    out
}

pub fn load_examiner_records(path: &Path) -> Result<Vec<ExaminerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_examiner_records<W: std::io::Write>(records: &[ExaminerRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(e: &str, app: &str, firm: &str, year: i32, ai: bool, granted: bool) -> ExaminerRecord {
        ExaminerRecord {
            examiner_id: e.into(),
            application_id: app.into(),
            firm_id: firm.into(),
            year,
            is_ai: ai,
            granted,
        }
    }

    #[test]
    fn grant_rates() {
        let recs = vec![
            rec("e1", "a1", "f", 2011, false, true),
            rec("e1", "a2", "f", 2012, false, true),
            rec("e1", "a3", "f", 2013, false, true),
            rec("e1", "a4", "f", 2014, false, false),
            rec("e1", "a5", "f", 2019, false, false),
            rec("e2", "a6", "f", 2012, false, true),
            rec("e3", "a7", "f", 2012, true, true),
        ];
        let z = examiner_leniency(&recs, (2010, 2017)).unwrap();
        assert_eq!(z["e1"], 0.75);
        assert_eq!(z["e2"], 1.0);
        assert!(!z.contains_key("e3"));
        assert!(examiner_leniency(&recs, (2018, 2010)).is_err());
    }

    #[test]
    fn firm_year_means() {
        let z = BTreeMap::from([("e1".to_string(), 0.6), ("e2".to_string(), 0.8)]);
        let recs = vec![
            rec("e1", "a1", "f", 2020, true, true),
            rec("e2", "a2", "f", 2020, true, false),
            rec("e2", "a3", "g", 2020, true, false),
            rec("e9", "a4", "g", 2020, true, false),
            rec("e1", "a5", "h", 2020, false, true),
        ];
        let inst = build_instrument(&recs, &z);
        assert!((inst.values[&("f".to_string(), 2020)] - 0.7).abs() < 1e-15);
        assert_eq!(inst.values[&("g".to_string(), 2020)], 0.8);
        assert!(!inst.values.contains_key(&("h".to_string(), 2020)));
        assert_eq!(inst.excluded, vec!["a4".to_string()]);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![rec("e1", "a1", "f", 2020, true, false)];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ex.csv");
        write_examiner_records(&recs, std::fs::File::create(&p).unwrap()).unwrap();
        assert_eq!(load_examiner_records(&p).unwrap(), recs);
    }
}
