//! Skill extraction from job postings and the firm-level panel built on it.

pub mod corpus;
pub mod econ;
pub mod encoder;
pub mod error;
pub mod extraction;
pub mod fixture;
pub mod pipeline;
pub mod taxonomy;
pub mod textproc;
pub mod trainer;

pub use error::{Error, Result};
