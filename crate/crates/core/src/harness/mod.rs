//! Experiment harness: synthetic drift streams and the four drift protocols
//! (intra-class, inter-class, retention, memory tracking).

pub mod protocols;
pub mod report;
pub mod stream;

pub use protocols::{
    run_inter_class, run_intra_class, run_memory_tracking, run_retention, split_parts, DriftData,
    DEFAULT_PARTS, DEFAULT_REPEATS, Z_FACTOR,
};
pub use report::{ExperimentReport, MetricSeries, Reentry, TraceSummary};
pub use stream::{generate_stream, Class, GeneratedStream, LabeledSample, StreamSpec};
