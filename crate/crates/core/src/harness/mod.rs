//! End-to-end continual adaptation: pretrain on labelled source subjects,
//! then absorb unlabeled subjects one at a time while the synaptic network
//! consolidates and renormalizes.

mod engine;
mod metrics;
mod prep;
mod rundir;
mod stream;

pub use engine::{pretrain_source, Adaptation, Engine};
pub use metrics::{metrics, Metrics};
pub use prep::{
    extract_subjects, incoming_subject, is_held_out, learner_input, source_subject, EvalSet, InputScaler,
    SourceSubject, SubjectFeatures, UnlabeledSubject,
};
pub use rundir::{
    read_summary, report_csv, trajectory_csv, write_atomic, write_run_dir, RepeatSummary, RunSummary,
    CONFIG_FILE, LOG_FILE, REPORT_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};
pub use stream::{
    derive_seed, run_ablation, run_experiment, run_repeats, run_stream, stream_order, Aggregate, EvalReport,
    Experiment, MeanStd, RepeatResult, SubjectReport, TrajectoryPoint,
};
