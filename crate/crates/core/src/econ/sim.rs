//! Seeded data-generating process with a known AI-stock effect, an
//! unobserved confounder and examiner-assigned AI applications.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::Dataset;
use super::iv::{build_instrument, examiner_leniency, ExaminerRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub firms: usize,
    pub occupations: usize,
    pub occs_per_firm: usize,
    pub first_year: i32,
    pub years: usize,
    pub examiners: usize,
    /// Non-AI decisions per examiner in the 2010-2017 baseline.
    pub baseline_apps: usize,
    /// AI applications per firm-year are drawn uniformly from this range.
    pub ai_apps: (usize, usize),
    pub beta: f64,
    pub intercept: f64,
    pub first_stage_slope: f64,
    pub base_flow_mean: f64,
    pub base_flow_sd: f64,
    pub flow_noise_sd: f64,
    pub initial_stock_mean: f64,
    pub initial_stock_sd: f64,
    pub delta: f64,
    /// Confounder loading in the patent flow.
    pub kappa: f64,
    /// Confounder loading in the outcome.
    pub rho: f64,
    pub fe_sd: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            firms: 1000,
            occupations: 20,
            occs_per_firm: 4,
            first_year: 2018,
            years: 5,
            examiners: 200,
            baseline_apps: 400,
            ai_apps: (1, 4),
            beta: 0.0002,
            intercept: 13.4f64.ln(),
            first_stage_slope: 45.8,
            base_flow_mean: 60.0,
            base_flow_sd: 35.0,
            flow_noise_sd: 20.0,
            initial_stock_mean: 300.0,
            initial_stock_sd: 150.0,
            delta: 0.15,
            kappa: 30.0,
            rho: 0.05,
            fe_sd: 0.3,
            noise_sd: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpTruth {
    pub beta: f64,
    pub first_stage_slope: f64,
    pub stock_mean: f64,
    pub stock_sd: f64,
    /// Firm-years with at least one AI application.
    pub iv_firm_years: usize,
}

#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    /// Columns: y (already on the log scale), ai_stock, leniency, and the
    /// four firm controls.
    pub data: Dataset,
    pub examiners: Vec<ExaminerRecord>,
    pub truth: DgpTruth,
}

/// Slope of the within-firm stock on the current instrument per unit of flow
/// loading, when the instrument is independent across years.
pub fn within_attenuation(years: usize, delta: f64) -> f64 {
    let t = years as f64;
    let mut acc = 0.0;
    for y in 0..years {
        acc += (0..=y).map(|k| (1.0 - delta).powi(k as i32)).sum::<f64>();
    }
    (t - acc / t) / (t - 1.0)
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite standard deviation")
}

pub fn simulate_dgp(cfg: &DgpConfig) -> Result<SimulatedPanel> {
    if cfg.occs_per_firm > cfg.occupations || cfg.firms < 2 || cfg.years == 0 || cfg.examiners == 0 {
        return Err(Error::invalid("degenerate simulation dimensions"));
    }
    if cfg.ai_apps.0 > cfg.ai_apps.1 {
        return Err(Error::invalid("empty AI application range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = normal(1.0);
    // flow loading that yields `first_stage_slope` after the firm effect is removed
    let loading = if cfg.years > 1 {
        cfg.first_stage_slope / within_attenuation(cfg.years, cfg.delta)
    } else {
        cfg.first_stage_slope
    };

    // examiners and their baseline decisions
    let true_len: Vec<f64> = (0..cfg.examiners).map(|_| rng.gen_range(0.3..0.9)).collect();
    let mut records = Vec::new();
    for (e, &l) in true_len.iter().enumerate() {
        for k in 0..cfg.baseline_apps {
            records.push(ExaminerRecord {
                examiner_id: format!("E{e:04}"),
                application_id: format!("N{e:04}-{k:05}"),
                firm_id: String::new(),
                year: rng.gen_range(2010..=2017),
                is_ai: false,
                granted: rng.gen_bool(l),
            });
        }
    }

    let occ_fe: Vec<f64> = (0..cfg.occupations).map(|_| cfg.fe_sd * std.sample(&mut rng)).collect();
    let year_fe: Vec<f64> = (0..cfg.years).map(|_| cfg.fe_sd * std.sample(&mut rng)).collect();

    struct FirmYear {
        stock: f64,
        q: f64,
        controls: [f64; 4],
    }
    let mut firms = Vec::with_capacity(cfg.firms);
    let mut stocks = Vec::new();
    for f in 0..cfg.firms {
        let firm_fe = cfg.fe_sd * std.sample(&mut rng);
        let base = cfg.base_flow_mean + cfg.base_flow_sd * std.sample(&mut rng);
        let mut stock = (cfg.initial_stock_mean + cfg.initial_stock_sd * std.sample(&mut rng)).max(0.0);
        let occs: Vec<usize> = sample(&mut rng, cfg.occupations, cfg.occs_per_firm).into_vec();
        let mut fy = Vec::with_capacity(cfg.years);
        for t in 0..cfg.years {
            let year = cfg.first_year + t as i32;
            let apps = rng.gen_range(cfg.ai_apps.0..=cfg.ai_apps.1);
            let mut z_true = 0.0;
            for a in 0..apps {
                let e = rng.gen_range(0..cfg.examiners);
                z_true += true_len[e] / apps as f64;
                records.push(ExaminerRecord {
                    examiner_id: format!("E{e:04}"),
                    application_id: format!("A{f:05}-{year}-{a}"),
                    firm_id: format!("F{f:05}"),
                    year,
                    is_ai: true,
                    granted: rng.gen_bool(true_len[e]),
                });
            }
            let q = std.sample(&mut rng);
            let flow = (base
                + loading * z_true
                + cfg.kappa * q
                + cfg.flow_noise_sd * std.sample(&mut rng))
            .max(0.0);
            stock = (1.0 - cfg.delta) * stock + flow;
            stocks.push(stock);
            let controls = [
                10.0 + std.sample(&mut rng),
                0.05 + 0.02 * std.sample(&mut rng),
                0.4 + 0.1 * std.sample(&mut rng),
                0.03 + 0.01 * std.sample(&mut rng),
            ];
            fy.push(FirmYear { stock, q, controls });
        }
        firms.push((firm_fe, occs, fy));
    }

    let leniency = examiner_leniency(&records, (2010, 2017))?;
    let inst = build_instrument(&records, &leniency);

    let mut data = Dataset::default();
    let eps = normal(cfg.noise_sd.max(0.0));
    for (f, (firm_fe, occs, fy)) in firms.iter().enumerate() {
        let firm = format!("F{f:05}");
        for &o in occs {
            for (t, v) in fy.iter().enumerate() {
                let year = cfg.first_year + t as i32;
                let noise = if cfg.noise_sd > 0.0 { eps.sample(&mut rng) } else { 0.0 };
                let y = cfg.intercept
                    + cfg.beta * v.stock
                    + firm_fe
                    + occ_fe[o]
                    + year_fe[t]
                    + cfg.rho * v.q
                    + 0.01 * v.controls[0]
                    + noise;
                let z = inst.values.get(&(firm.clone(), year)).copied().unwrap_or(f64::NAN);
                data.push_row(
                    &firm,
                    &format!("O{o:02}"),
                    year,
                    &[
                        ("y", y),
                        ("ai_stock", v.stock),
                        ("leniency", z),
                        ("log_assets", v.controls[0]),
                        ("roa", v.controls[1]),
                        ("leverage", v.controls[2]),
                        ("rnd_intensity", v.controls[3]),
                    ],
                );
            }
        }
    }

    let n = stocks.len() as f64;
    let mean = stocks.iter().sum::<f64>() / n;
    let sd = (stocks.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(SimulatedPanel {
        data,
        examiners: records,
        truth: DgpTruth {
            beta: cfg.beta,
            first_stage_slope: cfg.first_stage_slope,
            stock_mean: mean,
            stock_sd: sd,
            iv_firm_years: inst.values.len(),
        },
    })
}
