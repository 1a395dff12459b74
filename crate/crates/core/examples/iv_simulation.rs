//! Simulate an endogenous panel and compare OLS with examiner-leniency 2SLS.

use std::time::Instant;

use skillpanel::econ::{first_stage, ols_fe, simulate_dgp, tsls, DgpConfig, RegressionSpec, Transform};

fn main() -> skillpanel::Result<()> {
    let start = Instant::now();
    let cfg = DgpConfig::default();
    let sim = simulate_dgp(&cfg)?;
    println!(
        "rows={} stock_mean={:.1} stock_sd={:.1} iv_firm_years={}",
        sim.data.len(),
        sim.truth.stock_mean,
        sim.truth.stock_sd,
        sim.truth.iv_firm_years
    );
    let spec = RegressionSpec {
        transform: Transform::Level,
        ..RegressionSpec::new("y", "ai_stock")
    };
    let ols = ols_fe(&sim.data, &spec)?;
    let iv = tsls(&sim.data, &spec, "leniency")?;
    let fs = first_stage(&sim.data.collapse_firm_year(), &RegressionSpec {
        fe: vec![skillpanel::econ::FeDim::Firm, skillpanel::econ::FeDim::Year],
        ..spec.clone()
    }, "leniency")?;
    let (b_ols, s_ols) = ols.main();
    let (b_iv, s_iv) = iv.main();
    println!("truth beta = {}", cfg.beta);
    println!("ols  beta = {b_ols:.6} (se {s_ols:.6}), {:.1} se from truth", (b_ols - cfg.beta) / s_ols);
    println!("2sls beta = {b_iv:.6} (se {s_iv:.6}), {:.1} se from truth", (b_iv - cfg.beta) / s_iv);
    println!(
        "first stage (cell level): coef {:.2}, F {:.1}",
        iv.first_stage_coef.unwrap(),
        iv.first_stage_f.unwrap()
    );
    let (b_fs, s_fs) = fs.main();
    println!("first stage (firm-year): coef {b_fs:.2} (se {s_fs:.2}), F {:.1}", fs.first_stage_f.unwrap());
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
