//! Firm-occupation-year aggregation and the panel table format.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{text_consistency, PostingRecord};
use crate::corpus::FirmYearControls;
use crate::error::{Error, Result};
use crate::textproc::{scan_ambiguity, AmbiguityLexicon};

/// How forward-looking intensity counts a skill that appears in several
/// sentences of one posting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityMode {
    /// Once per posting.
    #[default]
    Set,
    /// Once per matching sentence.
    Mentions,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelCell {
    pub firm_id: String,
    pub occ_id: String,
    pub year: i32,
    pub postings: usize,
    pub aligned: usize,
    pub nonaligned: usize,
    pub fl_count: usize,
    pub fl_share: f64,
    pub fl_intensity: f64,
    pub consistency: Option<f64>,
    pub ambig_freq: usize,
    pub ambig_share: f64,
    pub ai_stock: Option<f64>,
    pub log_assets: Option<f64>,
    pub roa: Option<f64>,
    pub leverage: Option<f64>,
    pub rnd_intensity: Option<f64>,
}

impl PanelCell {
    /// Ambiguous phrase matches per posting in the cell.
    pub fn ambig_per_posting(&self) -> f64 {
        self.ambig_freq as f64 / self.postings as f64
    }
}

pub struct PanelInputs<'a> {
    pub records: &'a [PostingRecord],
    /// Forward-looking skill set per occupation; a missing entry is empty.
    pub forward: &'a BTreeMap<String, BTreeSet<String>>,
    pub controls: &'a BTreeMap<(String, i32), FirmYearControls>,
    pub stocks: &'a BTreeMap<(String, i32), f64>,
    pub lexicon: &'a AmbiguityLexicon,
    pub intensity: IntensityMode,
}

/// Forward-looking count, share of non-aligned skills, and per-posting
/// intensity of a cell.
pub fn forward_measures(cell: &PanelCell) -> (usize, f64, f64) {
    (cell.fl_count, cell.fl_share, cell.fl_intensity)
}

/// One cell per observed (firm, occupation, year), in key order. The result
/// does not depend on the order of `records`.
pub fn aggregate_panel(inputs: &PanelInputs<'_>) -> Result<Vec<PanelCell>> {
    let mut groups: BTreeMap<(&str, &str, i32), Vec<&PostingRecord>> = BTreeMap::new();
    for r in inputs.records {
        groups
            .entry((r.firm_id.as_str(), r.occ_id.as_str(), r.year))
            .or_default()
            .push(r);
    }
    let empty = BTreeSet::new();
    let mut cells = Vec::with_capacity(groups.len());
    for ((firm, occ, year), mut recs) in groups {
        recs.sort_by(|a, b| a.posting_id.cmp(&b.posting_id));
        let fl = inputs.forward.get(occ).unwrap_or(&empty);
        let n = recs.len();
        let mut cell = PanelCell {
            firm_id: firm.to_string(),
            occ_id: occ.to_string(),
            year,
            postings: n,
            ..Default::default()
        };
        let mut mentions = 0usize;
        for r in &recs {
            cell.aligned += r.aligned.len();
            cell.nonaligned += r.nonaligned.len();
            for (skill, sentences) in &r.skills {
                if fl.contains(skill) {
                    cell.fl_count += 1;
                    mentions += sentences.len();
                }
            }
        }
        cell.fl_share = if cell.nonaligned == 0 {
            0.0
        } else {
            cell.fl_count as f64 / cell.nonaligned as f64
        };
        let numer = match inputs.intensity {
            IntensityMode::Set => cell.fl_count,
            IntensityMode::Mentions => mentions,
        };
        cell.fl_intensity = numer as f64 / n as f64;
        let embs: Vec<&[f64]> = recs.iter().map(|r| r.doc_embedding.as_slice()).collect();
        cell.consistency = text_consistency(&embs)?;
        let sentences: Vec<&str> = recs
            .iter()
            .flat_map(|r| r.kept_sentences.iter().map(String::as_str))
            .collect();
        let scan = scan_ambiguity(&sentences, inputs.lexicon);
        cell.ambig_freq = scan.frequency;
        cell.ambig_share = scan.share;
        let key = (firm.to_string(), year);
        cell.ai_stock = inputs.stocks.get(&key).copied();
        if let Some(c) = inputs.controls.get(&key) {
            cell.log_assets = Some(c.log_assets);
            cell.roa = Some(c.roa);
            cell.leverage = Some(c.leverage);
            cell.rnd_intensity = Some(c.rnd_intensity);
        }
        cells.push(cell);
    }
    Ok(cells)
}

pub const PANEL_HEADER: [&str; 17] = [
    "firm_id",
    "occ_id",
    "year",
    "postings",
    "aligned",
    "nonaligned",
    "fl_count",
    "fl_share",
    "fl_intensity",
    "consistency",
    "ambig_freq",
    "ambig_share",
    "ai_stock",
    "log_assets",
    "roa",
    "leverage",
    "rnd_intensity",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_panel<W: Write>(cells: &[PanelCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PANEL_HEADER)?;
    for c in cells {
        w.write_record([
            c.firm_id.clone(),
            c.occ_id.clone(),
            c.year.to_string(),
            c.postings.to_string(),
            c.aligned.to_string(),
            c.nonaligned.to_string(),
            c.fl_count.to_string(),
            c.fl_share.to_string(),
            c.fl_intensity.to_string(),
            opt(c.consistency),
            c.ambig_freq.to_string(),
            c.ambig_share.to_string(),
            opt(c.ai_stock),
            opt(c.log_assets),
            opt(c.roa),
            opt(c.leverage),
            opt(c.rnd_intensity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel<R: Read>(input: R) -> Result<Vec<PanelCell>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(PANEL_HEADER) {
        return Err(Error::parse("panel", "unexpected header"));
    }
    let mut cells = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("panel row {}", i + 2);
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::parse(ctx(), format!("bad number `{}`", &rec[k])))
        };
        let int = |k: usize| -> Result<usize> {
            rec[k].parse().map_err(|_| Error::parse(ctx(), format!("bad count `{}`", &rec[k])))
        };
        let maybe = |k: usize| -> Result<Option<f64>> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        cells.push(PanelCell {
            firm_id: rec[0].to_string(),
            occ_id: rec[1].to_string(),
            year: rec[2].parse().map_err(|_| Error::parse(ctx(), "bad year"))?,
            postings: int(3)?,
            aligned: int(4)?,
            nonaligned: int(5)?,
            fl_count: int(6)?,
            fl_share: num(7)?,
            fl_intensity: num(8)?,
            consistency: maybe(9)?,
            ambig_freq: int(10)?,
            ambig_share: num(11)?,
            ai_stock: maybe(12)?,
            log_assets: maybe(13)?,
            roa: maybe(14)?,
            leverage: maybe(15)?,
            rnd_intensity: maybe(16)?,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn rec(id: &str, aligned: &[&str], nonaligned: &[&str], emb: Vec<f64>) -> PostingRecord {
        let skills = aligned
            .iter()
            .chain(nonaligned)
            .map(|s| (s.to_string(), vec![0]))
            .collect();
        PostingRecord {
            posting_id: id.into(),
            firm_id: "f".into(),
            occ_id: "o".into(),
            year: 2020,
            skills,
            aligned: set(aligned),
            nonaligned: set(nonaligned),
            kept_sentences: vec!["familiar with sql".into()],
            doc_embedding: emb,
        }
    }

    fn run(records: &[PostingRecord], fl: &[&str], mode: IntensityMode) -> Vec<PanelCell> {
        let forward = BTreeMap::from([("o".to_string(), set(fl))]);
        let lex = AmbiguityLexicon::default();
        aggregate_panel(&PanelInputs {
            records,
            forward: &forward,
            controls: &BTreeMap::new(),
            stocks: &BTreeMap::new(),
            lexicon: &lex,
            intensity: mode,
        })
        .unwrap()
    }

    #[test]
    fn hand_aggregation() {
        let e = vec![1.0, 0.0];
        let recs = [rec("p1", &["a", "b"], &["c"], e.clone()), rec("p2", &["a", "b", "e"], &["c", "d"], e)];
        let cells = run(&recs, &["c"], IntensityMode::Set);
        assert_eq!(cells.len(), 1);
        let c = &cells[0];
        assert_eq!((c.aligned, c.nonaligned), (5, 3));
        assert_eq!(forward_measures(c), (2, 2.0 / 3.0, 1.0));
        assert_eq!(c.consistency, Some(1.0));
        assert_eq!((c.ambig_freq, c.ambig_share), (2, 1.0));
        assert_eq!(c.ai_stock, None);
    }

    #[test]
    fn empty_forward_set_and_zero_denominator() {
        let cells = run(&[rec("p1", &["a"], &[], vec![1.0])], &[], IntensityMode::Set);
        assert_eq!(forward_measures(&cells[0]), (0, 0.0, 0.0));
        assert_eq!(cells[0].consistency, None);
    }

    #[test]
    fn duplication_doubles_count_only() {
        let one = [rec("p1", &[], &["c", "d"], vec![1.0])];
        let two = [rec("p1", &[], &["c", "d"], vec![1.0]), rec("p2", &[], &["c", "d"], vec![1.0])];
        let a = run(&one, &["c"], IntensityMode::Set);
        let b = run(&two, &["c"], IntensityMode::Set);
        assert_eq!(b[0].fl_count, 2 * a[0].fl_count);
        assert_eq!((a[0].fl_share, a[0].fl_intensity), (b[0].fl_share, b[0].fl_intensity));
    }

    #[test]
    fn mention_intensity_counts_sentences() {
        let mut r = rec("p1", &[], &["c"], vec![1.0]);
        r.skills.insert("c".into(), vec![0, 2, 3]);
        assert_eq!(run(&[r.clone()], &["c"], IntensityMode::Set)[0].fl_intensity, 1.0);
        assert_eq!(run(&[r], &["c"], IntensityMode::Mentions)[0].fl_intensity, 3.0);
    }

    #[test]
    fn input_order_does_not_matter() {
        let recs = vec![
            rec("p1", &["a"], &["c"], vec![1.0, 0.2]),
            rec("p2", &[], &["c", "d"], vec![0.3, 1.0]),
            rec("p3", &["b"], &[], vec![0.7, 0.7]),
        ];
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(run(&recs, &["c"], IntensityMode::Set), run(&rev, &["c"], IntensityMode::Set));
    }

    #[test]
    fn csv_round_trip_with_nulls() {
        let cells = run(&[rec("p1", &["a"], &["c"], vec![1.0])], &["c"], IntensityMode::Set);
        let mut buf = Vec::new();
        write_panel(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("firm_id,occ_id,year,postings,aligned,nonaligned,fl_count"));
        assert_eq!(read_panel(buf.as_slice()).unwrap(), cells);
    }
}
