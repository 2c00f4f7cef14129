//! Training loops for LMDAN and its two baselines, target evaluation and
//! drift sweeps.

mod config;
mod evaluate;
mod report;
mod run;
mod sweep;

pub use config::{CountSource, Method, OtMode, TrainConfig};
pub use evaluate::{evaluate, predict, Evaluation};
pub use report::{EpochRecord, RunReport, StepRecord};
pub use run::{train, train_dann, train_lmdan, train_source_only, TrainOptions, TrainOutcome};
pub use sweep::{drift_sweep, summarize, sweep_csv, summary_csv, SweepConfig, SweepRow, SweepSummary};
