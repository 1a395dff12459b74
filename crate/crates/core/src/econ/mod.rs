//! Fixed-effects panel regression with firm-clustered errors, the examiner
//! leniency instrument, 2SLS, and a simulation oracle.

mod data;
mod demean;
mod estimate;
mod iv;
mod sim;

pub use data::{Dataset, FeDim};
pub use demean::{demean, dummy_rank, Groups};
pub use estimate::{
    first_stage, ols_fe, tsls, EstimateResult, Method, RegressionSpec, Transform, DEFAULT_CONTROLS,
};
pub use iv::{
    build_instrument, examiner_leniency, load_examiner_records, write_examiner_records, ExaminerRecord,
    Instrument,
};
pub use sim::{simulate_dgp, within_attenuation, DgpConfig, DgpTruth, SimulatedPanel};
