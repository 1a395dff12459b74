//! AI capability stock and within-cell text consistency.

use std::collections::BTreeMap;

use crate::corpus::FirmYearControls;
use crate::encoder::cosine_sim;
use crate::error::{Error, Result};

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("depreciation rate {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Perpetual inventory over consecutive years, starting from zero.
pub fn ai_stock(flows: &[f64], delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    let mut stock = 0.0;
    flows
        .iter()
        .map(|&f| {
            if !(f >= 0.0) {
                return Err(Error::invalid(format!("negative or missing patent flow {f}")));
            }
            stock = (1.0 - delta) * stock + f;
            Ok(stock)
        })
        .collect()
}

/// Stock for every firm-year in `controls`. Years missing between a firm's
/// first and last observation count as zero flow.
pub fn ai_stock_panel(
    controls: &BTreeMap<(String, i32), FirmYearControls>,
    delta: f64,
) -> Result<BTreeMap<(String, i32), f64>> {
    check_delta(delta)?;
    let mut by_firm: BTreeMap<&str, BTreeMap<i32, f64>> = BTreeMap::new();
    for ((firm, year), c) in controls {
        by_firm.entry(firm).or_default().insert(*year, c.ai_flow);
    }
    let mut out = BTreeMap::new();
    for (firm, years) in by_firm {
        let (first, last) = (*years.keys().next().unwrap(), *years.keys().last().unwrap());
        let flows: Vec<f64> = (first..=last).map(|y| years.get(&y).copied().unwrap_or(0.0)).collect();
        for (y, s) in (first..=last).zip(ai_stock(&flows, delta)?) {
            if years.contains_key(&y) {
                out.insert((firm.to_string(), y), s);
            }
        }
    }
    Ok(out)
}

/// Mean pairwise cosine similarity; `None` with fewer than two documents.
pub fn text_consistency<V: AsRef<[f64]>>(embeddings: &[V]) -> Result<Option<f64>> {
    let n = embeddings.len();
    if n < 2 {
        return Ok(None);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (u, v) = (embeddings[i].as_ref(), embeddings[j].as_ref());
            total += if u == v { 1.0 } else { cosine_sim(u, v)? };
        }
    }
    Ok(Some(total / (n * (n - 1) / 2) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recurrence_hand_values() {
        assert_eq!(ai_stock(&[10.0, 20.0], 0.15).unwrap(), vec![10.0, 28.5]);
        assert_eq!(ai_stock(&[0.0, 0.0, 0.0], 0.15).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn domain_checks() {
        assert!(ai_stock(&[1.0], 1.0).is_err());
        assert!(ai_stock(&[1.0], 0.0).is_err());
        assert!(ai_stock(&[1.0, -2.0], 0.15).is_err());
    }

    #[test]
    fn gaps_depreciate() {
        let mk = |y, f| {
            (
                ("f".to_string(), y),
                FirmYearControls {
                    firm_id: "f".into(),
                    year: y,
                    log_assets: 0.0,
                    roa: 0.0,
                    leverage: 0.0,
                    rnd_intensity: 0.0,
                    ai_flow: f,
                },
            )
        };
        let c = BTreeMap::from([mk(2018, 10.0), mk(2020, 0.0)]);
        let s = ai_stock_panel(&c, 0.5).unwrap();
        assert_eq!(s[&("f".to_string(), 2020)], 2.5);
    }

    #[test]
    fn consistency_cases() {
        let a = vec![0.6, 0.8];
        assert_eq!(text_consistency(&[a.clone(), a.clone()]).unwrap(), Some(1.0));
        assert_eq!(text_consistency(&[a.clone()]).unwrap(), None);
        // sims 1.0, 0.5, 0.5
        let x = vec![1.0, 0.0];
        let y = vec![0.5, 0.75f64.sqrt()];
        let got = text_consistency(&[x.clone(), x, y]).unwrap().unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn stock_is_linear(flows in proptest::collection::vec(0.0f64..100.0, 1..10), a in 0.0f64..5.0) {
            let base = ai_stock(&flows, 0.15).unwrap();
            let scaled: Vec<f64> = flows.iter().map(|f| f * a).collect();
            for (s, b) in ai_stock(&scaled, 0.15).unwrap().iter().zip(base) {
                prop_assert!((s - a * b).abs() <= 1e-9 * (1.0 + s.abs()));
            }
        }
    }
}
