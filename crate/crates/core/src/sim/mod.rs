//! Discrete-time spectrum-sharing simulation.

mod analysis;
mod engine;
mod metrics;
mod scenario;
mod trace;

pub use analysis::{analyze, compare, Analysis, BandAnalysis, BlockingFigure, ComparisonReport, ComparisonRow, NoncompletionFigure};
pub use engine::{run, run_with, RunOptions, RunOutput, Timeseries, TimeseriesRow, World};
pub use metrics::{summarize, MetricSummary, Metrics, ModeHistogram};
pub use scenario::{
    BandSpec, DispositionSpec, HandoverSettings, NegotiationSettings, Repeat, Scenario, SessionLength, SessionSpec,
};
pub use trace::{Event, EventTrace, TraceRecord, TraceRecorder};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `seeds.len()` independent copies of `scenario`, one per seed, in
/// parallel. Results are in seed order.
pub fn run_replications(scenario: &Scenario, seeds: &[u64], options: &RunOptions) -> Result<Vec<RunOutput>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut s = scenario.clone();
            s.seed = seed;
            run_with(&s, options.clone())
        })
        .collect()
}
