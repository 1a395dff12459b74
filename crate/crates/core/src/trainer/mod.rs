//! Contrastive bi-encoder training, the binary pre-screener, and retrieval
//! evaluation.

mod adam;
mod biencoder;
mod loss;
mod metrics;
mod negatives;
mod prescreen;

pub use adam::Adam;
pub use biencoder::{train_biencoder, TrainOutcome, TrainingConfig};
pub use loss::{batch_loss, batch_loss_and_grad, contrastive_loss, ContrastiveBatch, LossGrad, SampleRef};
pub use metrics::{evaluate_retrieval, rank_of, MetricsReport};
pub use negatives::{sample_negative_indices, sample_negatives};
pub use prescreen::{bce_loss, prescreen, train_prescreener, PrescreenConfig, Prescreener};
