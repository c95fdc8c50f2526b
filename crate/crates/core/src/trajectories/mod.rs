//! Conditioned wave-particle correlator trajectories: homodyne SSE with
//! APD and spontaneous-emission jumps.

pub mod accumulate;
pub mod beat;
pub mod ensemble;
pub mod filter;
pub mod run;
pub mod state;

pub use accumulate::{AccumulatorSpec, StartConditionedAccumulator, StartEstimate};
pub use beat::{beat_revival_detector, compare_gains, dominant_peak, isolated_events, BeatReport, BeatSeries, BeatSpec, GainComparison, Peak, Spectrum};
pub use ensemble::{ensemble_accumulate, ensemble_records, ensemble_snapshots, map_chunks, SnapshotEnsemble, DEFAULT_CHUNK};
pub use filter::{filter_step, PhotocurrentFilter};
pub use run::{run_trajectory, Observer, Protocol, RunOptions, RunStats, StepSample, TrajectoryEngine, TrajectoryRecord};
pub use state::{collapse, maybe_jump, signal_gain, sse_step, ConditionedState, JumpEvent, JumpKind, StepKernel};
