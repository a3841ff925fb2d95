//! Run configuration, end-to-end pipeline and figures.

mod config;
mod pipeline;
mod plot;

pub use config::{BootstrapConfig, CorpusSpec, Hypotheses, RunConfig, ScoreFiles, ScorerConfig, OUTPUT_DIR_ENV};
pub use pipeline::{derive_seed, run_pipeline, BootstrapRow, Pipeline, PipelineOutput, PrepareManifest, Stage};
pub use plot::{render_scatter, render_stack, PlotDocument};
