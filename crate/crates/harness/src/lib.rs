//! Configuration, training orchestration and analysis for the multi-agent
//! credit-assignment learners, plus the `sqddpg` command-line front end.

pub mod cli;
pub mod config;
mod error;
pub mod eval;
pub mod pcc;
pub mod trace;
pub mod train;

pub use config::TrainConfig;
pub use error::HarnessError;
pub use eval::{evaluate_success_rate, turns_to_capture, Policy};
pub use pcc::{pcc_credit_distance, pearson, Correlation};
pub use trace::{minmax_normalize, CreditTrace, Trajectory};
pub use train::{load_checkpoint, moving_average, run_training, MetricsRecord, TrainOutcome};

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Environment variable that replaces the default output directory.
pub const OUT_DIR_VAR: &str = "SQDDPG_OUT_DIR";
