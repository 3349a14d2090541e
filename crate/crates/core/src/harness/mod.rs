//! Episode orchestration, training, evaluation and file output.

pub mod ablate;
pub mod env;
pub mod evaluate;
pub mod export;
pub mod io;
pub mod run;
pub mod scenario;
pub mod stats;
pub mod trace;
pub mod train;

pub use ablate::{ablate, AblationReport};
pub use env::{Episode, Outcome, Regime, ShieldMode};
pub use evaluate::{evaluate, EvalReport, PolicySource};
pub use run::{run_episode, Controller, FullThrottle, LearnedPolicy, SpeedLimitPid};
pub use scenario::Scenario;
pub use trace::{EpisodeSummary, EpisodeTrace, TraceRow};
pub use train::{train, EpisodeRecord, TrainOutcome, UpdateRecord};
