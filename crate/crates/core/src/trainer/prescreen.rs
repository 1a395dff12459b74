//! Binary skill-sentence classifier over frozen encoder embeddings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prescreener {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrescreenConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for PrescreenConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.05,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Prescreener {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn probability(&self, features: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    /// Inclusive decision rule: kept iff p >= 0.5.
    pub fn keeps(&self, features: &[f64]) -> bool {
        self.probability(features) >= 0.5
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("bias {:e}\nweights {}\n", self.bias, self.weights.len());
        for w in &self.weights {
            writeln!(s, "{w:e}").expect("write to string");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let parse_err = |m: &str| Error::parse("prescreener", m);
        let bias = lines
            .next()
            .and_then(|l| l.strip_prefix("bias "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err("missing bias"))?;
        let n: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("weights "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err("missing weight count"))?;
        let weights = lines
            .take(n)
            .map(|l| l.parse().map_err(|_| parse_err("bad weight")))
            .collect::<Result<Vec<f64>>>()?;
        if weights.len() != n {
            return Err(parse_err("truncated weights"));
        }
        Ok(Self { weights, bias })
    }
}

/// Mean binary cross-entropy.
pub fn bce_loss(clf: &Prescreener, examples: &[(Vec<f64>, bool)]) -> f64 {
    let n = examples.len() as f64;
    examples
        .iter()
        .map(|(x, y)| {
            let p = clf.probability(x).clamp(1e-15, 1.0 - 1e-15);
            if *y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Full-batch training of a logistic head from zero initialization.
pub fn train_prescreener(examples: &[(Vec<f64>, bool)], config: &PrescreenConfig) -> Result<Prescreener> {
    let Some((first, _)) = examples.first() else {
        return Err(Error::invalid("no labeled sentences"));
    };
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::invalid("pre-screener training needs both classes"));
    }
    let dim = first.len();
    if examples.iter().any(|(x, _)| x.len() != dim) {
        return Err(Error::Shape {
            tensor: "pre-screener features".into(),
            expected: dim.to_string(),
            found: "ragged rows".into(),
        });
    }
    let mut clf = Prescreener::zeros(dim);
    let mut theta = vec![0.0; dim + 1];
    let mut opt = Adam::new(dim + 1, config.learning_rate, None);
    let n = examples.len() as f64;
    for _ in 0..config.epochs {
        let mut grad = vec![0.0; dim + 1];
        for (x, y) in examples {
            let r = clf.probability(x) - if *y { 1.0 } else { 0.0 };
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += r * xi / n;
            }
            grad[dim] += r / n;
        }
        opt.step(&mut theta, &grad);
        clf.weights.copy_from_slice(&theta[..dim]);
        clf.bias = theta[dim];
    }
    Ok(clf)
}

/// Keeps items whose features score p >= 0.5, preserving order.
pub fn prescreen<T: Clone>(items: &[(T, Vec<f64>)], clf: &Prescreener) -> Vec<(T, Vec<f64>)> {
    items.iter().filter(|(_, x)| clf.keeps(x)).cloned().collect()
}
