//! Backfiring conversion ratios calibrated per fuzzy language level.
//!
//! - [`domain`]: backfiring arithmetic, programming-language table, project records.
//! - [`fuzzy`]: fuzzy language levels and centroid inference of a ratio.
//! - [`calibration`]: clamped online training of per-level ratios.
//! - [`metrics`]: MRE/MER/PRED evaluation and improvement rows.
//! - [`experiments`]: the seven train/test protocols.
//! - [`io`]: dataset, weights, report and curve files; synthetic datasets.

pub mod calibration;
mod csv_util;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod fuzzy;
pub mod io;
pub mod metrics;

pub use calibration::{
    calibrated_conversion_table, predict, train, train_observed, CalibratedWeights,
    TrainingConfig, TrainingRecord, UpdateStep,
};
pub use domain::{
    backfire, load_programming_table, resolve_language_level, reverse_backfire, LanguageEntry,
    ProgrammingTable, ProjectRecord,
};
pub use error::{Error, Result};
pub use experiments::{
    label_projects, run_all, run_experiment, split_by_size, split_random_stratified,
    ExperimentResult, LabeledProject, SplitKind, SplitSpec, TrainSide,
};
pub use fuzzy::{
    assign_fuzzy_level, build_fuzzy_levels, fuzzify, infer_ratio, FuzzyLevel, FuzzyLevelSet,
    MembershipFunction,
};
pub use metrics::{evaluate, improvement, mer, mre, EvaluationReport, Improvement, ImprovementRow};
