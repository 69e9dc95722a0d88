//! End-to-end experiment commands, shared by the `hdff` binary, the runnable
//! examples and the acceptance suite.

mod bench;
mod commands;
mod config;
pub mod export;
pub mod synth;

pub use bench::{cmd_bench, linear_fit, BenchConfig, BenchReport, BenchRow};
pub use commands::{
    ablate_layers_multi, cmd_ablate_dims, cmd_ablate_layers, cmd_eval, cmd_fit, cmd_score,
    cmd_similarity, mean_ci95, repeat_seed, score_source, AblationRow, DimRow, FitSummary,
    LayerAblation, ScoreRow, SimilarityRow,
};
pub use config::ExperimentConfig;
pub use synth::{generate as cmd_synth, SynthOutput, SyntheticSpec};
