//! Benchmark harness: episode configs, the single-episode driver, suite
//! expansion/aggregation, and the metrics they report.

pub mod config;
pub mod episode;
pub mod metrics;
pub mod suite;

pub use config::{
    Arm, EpisodeConfig, SeedRange, StartSpec, SuiteConfig, SuiteTemplate, WorldSource,
    DEFAULT_BUDGET,
};
pub use episode::{
    run_episode, run_episode_with, validate_trajectory, EpisodeResult, RmseCheckpoint,
};
pub use metrics::{paired_sign_test, percentile_buckets, rmse, Bucket, PercentileBuckets, SignTest};
pub use suite::{render_table, run_suite, run_suite_with, AggRow, SignTestRow, SuiteReport};
