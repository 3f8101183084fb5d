//! Monte Carlo emulation of the weak-coherent-pulse link and estimation
//! of QBERs, correlators and key rates from detector counts.

mod config;
mod estimate;
mod poisson;
mod session;
mod tally;

pub use config::{DetectorConfig, SourceConfig};
pub use estimate::{estimate, CorrelatorTable, Estimate, EstimateReport};
pub use poisson::PoissonTable;
pub use session::{
    derive_seed, mixing_grid, run_grid_mixed, run_session, run_session_with, FrameModel, CHUNK_PULSES,
};
pub use tally::{mix_sessions, SessionTally, TALLY_HEADER};
