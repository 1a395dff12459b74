//! Three-way fixed-effects OLS with firm-clustered errors on a small
//! synthetic panel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillpanel::econ::{ols_fe, Dataset, FeDim, RegressionSpec, Transform};

fn main() -> skillpanel::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut data = Dataset::default();
    for f in 0..300 {
        let firm_effect: f64 = rng.gen_range(-2.0..2.0);
        for o in 0..4 {
            for t in 0..5 {
                let x = rng.gen_range(0.0..3.0) + firm_effect;
                let c = rng.gen_range(-1.0..1.0);
                let y = 1.5 * x + 0.5 * c + firm_effect + 0.2 * o as f64 + 0.1 * t as f64 + rng.gen_range(-1.0..1.0);
                data.push_row(&format!("F{f}"), &format!("O{o}"), 2018 + t, &[("y", y), ("x", x), ("c", c)]);
            }
        }
    }
    let spec = RegressionSpec {
        controls: vec!["c".into()],
        transform: Transform::Level,
        ..RegressionSpec::new("y", "x")
    };
    print!("{}", ols_fe(&data, &spec)?);
    let two_way = RegressionSpec {
        fe: vec![FeDim::Firm, FeDim::OccupationYear],
        ..spec
    };
    println!();
    print!("{}", ols_fe(&data, &two_way)?);
    Ok(())
}
