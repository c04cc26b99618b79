//! Accuracy metrics, map rendering and the experiment runner.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod render;

pub use config::{ExperimentConfig, Method, Source};
pub use experiment::{parameter_sweep, run_experiment, CellResult, ExperimentReport, SweepReport};
pub use metrics::{confusion, ConfusionMatrix};
pub use render::{read_ppm, render_map, write_ppm, Palette, RgbImage};
