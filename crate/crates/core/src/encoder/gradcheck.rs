//! Finite-difference verification of the contrastive-loss gradient through
//! the full encoder.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{EncoderParams, Tensor};
use crate::error::{Error, Result};
use crate::trainer::{batch_loss, batch_loss_and_grad, ContrastiveBatch};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
    /// Tensor and in-tensor index of the worst coordinate.
    pub worst: Option<(Tensor, usize)>,
}

/// Compares analytic gradients against central differences on up to
/// `max_coords` coordinates drawn with `seed`. The relative error of one
/// coordinate is `|ga - gn| / max(1e-8, |ga| + |gn|)`.
pub fn grad_check(
    params: &EncoderParams,
    batch: &ContrastiveBatch,
    margin: f64,
    epsilon: f64,
    max_coords: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [1e-6, 1e-3]")));
    }
    let (_, grads) = batch_loss_and_grad(params, batch, margin)?;
    if let Some(i) = grads.flat().iter().position(|g| !g.is_finite()) {
        let (t, k) = params.layout().locate(i);
        return Err(Error::NonFinite(format!("gradient of {}[{k}]", t.name())));
    }
    let total = params.flat().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = sample(&mut rng, total, max_coords.min(total)).into_vec();

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coords_checked: coords.len(),
        worst: None,
    };
    for i in coords {
        let orig = probe.flat()[i];
        probe.flat_mut()[i] = orig + epsilon;
        let up = batch_loss(&probe, batch, margin)?;
        probe.flat_mut()[i] = orig - epsilon;
        let down = batch_loss(&probe, batch, margin)?;
        probe.flat_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let analytic = grads.flat()[i];
        if !numeric.is_finite() {
            let (t, k) = params.layout().locate(i);
            return Err(Error::NonFinite(format!("finite difference of {}[{k}]", t.name())));
        }
        let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
        if rel > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(rel);
            if rel >= report.max_rel_error {
                report.worst = Some(params.layout().locate(i));
            }
        }
    }
    Ok(report)
}
