//! Aggregate posting-level results to firm-occupation-year cells and print
//! the panel table.

use std::collections::{BTreeMap, BTreeSet};

use skillpanel::corpus::FirmYearControls;
use skillpanel::extraction::{
    ai_stock_panel, aggregate_panel, classify_alignment, write_panel, IntensityMode, PanelInputs, PostingRecord,
};
use skillpanel::textproc::AmbiguityLexicon;

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn main() -> skillpanel::Result<()> {
    let baseline = set(&["sql", "python", "statistics"]);
    let forward = BTreeMap::from([("O1".to_string(), set(&["machine learning"]))]);
    let postings = [
        ("P1", "F1", 2021, &["sql", "python", "machine learning"][..], "Familiar with SQL."),
        ("P2", "F1", 2021, &["sql", "cloud", "machine learning"][..], "Cloud experience preferred."),
        ("P3", "F1", 2022, &["statistics"][..], "Strong statistics."),
        ("P4", "F2", 2022, &["python", "excel"][..], "Ability to learn new tools."),
    ];
    let mut records = Vec::new();
    for (i, (id, firm, year, skills, sentence)) in postings.into_iter().enumerate() {
        let s = set(skills);
        let (aligned, nonaligned) = classify_alignment("O1", &s, Some(&baseline))?;
        records.push(PostingRecord {
            posting_id: id.into(),
            firm_id: firm.into(),
            occ_id: "O1".into(),
            year,
            skills: s.iter().map(|k| (k.clone(), vec![0])).collect(),
            aligned,
            nonaligned,
            kept_sentences: vec![sentence.into()],
            doc_embedding: vec![1.0, i as f64 * 0.3, 0.5],
        });
    }
    let controls: BTreeMap<(String, i32), FirmYearControls> = [("F1", 2021, 3.0), ("F1", 2022, 2.0), ("F2", 2022, 0.0)]
        .into_iter()
        .map(|(f, y, flow)| {
            let c = FirmYearControls {
                firm_id: f.into(),
                year: y,
                log_assets: 20.0,
                roa: 0.05,
                leverage: 0.4,
                rnd_intensity: 0.03,
                ai_flow: flow,
            };
            ((f.to_string(), y), c)
        })
        .collect();
    let stocks = ai_stock_panel(&controls, 0.15)?;
    let lexicon = AmbiguityLexicon::default();
    let cells = aggregate_panel(&PanelInputs {
        records: &records,
        forward: &forward,
        controls: &controls,
        stocks: &stocks,
        lexicon: &lexicon,
        intensity: IntensityMode::Set,
    })?;
    write_panel(&cells, std::io::stdout())?;
    Ok(())
}
