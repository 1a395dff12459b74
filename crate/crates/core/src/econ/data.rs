//! Estimation data: firm/occupation/year keys plus named numeric columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::PanelCell;

/// Fixed-effect or clustering dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeDim {
    Firm,
    Occupation,
    Year,
    OccupationYear,
    /// Firm-by-year; used for clustering checks and collapsed samples.
    FirmYear,
}

impl FeDim {
    pub fn name(self) -> &'static str {
        match self {
            FeDim::Firm => "firm",
            FeDim::Occupation => "occupation",
            FeDim::Year => "year",
            FeDim::OccupationYear => "occupation_year",
            FeDim::FirmYear => "firm_year",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "firm" => FeDim::Firm,
            "occupation" | "occ" => FeDim::Occupation,
            "year" => FeDim::Year,
            "occupation_year" | "occ_year" => FeDim::OccupationYear,
            "firm_year" => FeDim::FirmYear,
            _ => return Err(Error::invalid(format!("unknown fixed-effect dimension `{s}`"))),
        })
    }
}

/// Rows keyed by firm, occupation and year with any number of numeric
/// columns. Missing values are NaN.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub firm: Vec<String>,
    pub occ: Vec<String>,
    pub year: Vec<i32>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.firm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firm.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("no column `{name}` in data")))
    }

    pub fn push_row(&mut self, firm: &str, occ: &str, year: i32, values: &[(&str, f64)]) {
        let n = self.len();
        self.firm.push(firm.to_string());
        self.occ.push(occ.to_string());
        self.year.push(year);
        for (k, v) in values {
            let col = self.columns.entry(k.to_string()).or_insert_with(|| vec![f64::NAN; n]);
            col.push(*v);
        }
        for col in self.columns.values_mut() {
            if col.len() == n {
                col.push(f64::NAN);
            }
        }
    }

    /// Group labels of each row along `dim`, as dense codes in label order.
    pub fn codes(&self, dim: FeDim) -> (Vec<usize>, usize) {
        let labels: Vec<String> = (0..self.len())
            .map(|i| match dim {
                FeDim::Firm => self.firm[i].clone(),
                FeDim::Occupation => self.occ[i].clone(),
                FeDim::Year => self.year[i].to_string(),
                FeDim::OccupationYear => format!("{}\u{1f}{}", self.occ[i], self.year[i]),
                FeDim::FirmYear => format!("{}\u{1f}{}", self.firm[i], self.year[i]),
            })
            .collect();
        let mut map: BTreeMap<&str, usize> = labels.iter().map(|l| (l.as_str(), 0)).collect();
        for (i, v) in map.values_mut().enumerate() {
            *v = i;
        }
        let codes = labels.iter().map(|l| map[l.as_str()]).collect();
        (codes, map.len())
    }

    /// Rows where every listed column is finite.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Vec<usize>> {
        let cols = names.iter().map(|n| self.column(n)).collect::<Result<Vec<_>>>()?;
        Ok((0..self.len()).filter(|&i| cols.iter().all(|c| c[i].is_finite())).collect())
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            firm: rows.iter().map(|&i| self.firm[i].clone()).collect(),
            occ: rows.iter().map(|&i| self.occ[i].clone()).collect(),
            year: rows.iter().map(|&i| self.year[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(k, v)| (k.clone(), rows.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    /// One row per firm-year, taking the first row of each (for variables
    /// that only vary at that level). The occupation key is left empty.
    pub fn collapse_firm_year(&self) -> Dataset {
        let mut first: BTreeMap<(&str, i32), usize> = BTreeMap::new();
        for i in 0..self.len() {
            first.entry((self.firm[i].as_str(), self.year[i])).or_insert(i);
        }
        let rows: Vec<usize> = first.into_values().collect();
        let mut d = self.subset(&rows);
        d.occ = vec![String::new(); d.len()];
        d
    }

    /// Panel cells as estimation rows. `instrument`, when given, becomes the
    /// `leniency` column (NaN where a firm-year has no value).
    pub fn from_panel(
        cells: &[PanelCell],
        instrument: Option<&BTreeMap<(String, i32), f64>>,
    ) -> Dataset {
        let mut d = Dataset::default();
        let o = |v: Option<f64>| v.unwrap_or(f64::NAN);
        for c in cells {
            let mut row = vec![
                ("postings", c.postings as f64),
                ("aligned", c.aligned as f64),
                ("nonaligned", c.nonaligned as f64),
                ("fl_count", c.fl_count as f64),
                ("fl_share", c.fl_share),
                ("fl_intensity", c.fl_intensity),
                ("consistency", o(c.consistency)),
                ("ambig_freq", c.ambig_freq as f64),
                ("ambig_share", c.ambig_share),
                ("ai_stock", o(c.ai_stock)),
                ("log_assets", o(c.log_assets)),
                ("roa", o(c.roa)),
                ("leverage", o(c.leverage)),
                ("rnd_intensity", o(c.rnd_intensity)),
            ];
            if let Some(z) = instrument {
                row.push(("leniency", o(z.get(&(c.firm_id.clone(), c.year)).copied())));
            }
            d.push_row(&c.firm_id, &c.occ_id, c.year, &row);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_codes() {
        let mut d = Dataset::default();
        d.push_row("b", "o1", 2020, &[("y", 1.0)]);
        d.push_row("a", "o1", 2021, &[("y", 2.0), ("x", 3.0)]);
        assert!(d.column("x").unwrap()[0].is_nan());
        assert_eq!(d.codes(FeDim::Firm), (vec![1, 0], 2));
        assert_eq!(d.codes(FeDim::OccupationYear).1, 2);
        assert_eq!(d.complete_rows(&["y", "x"]).unwrap(), vec![1]);
        assert_eq!(d.collapse_firm_year().len(), 2);
    }
}
