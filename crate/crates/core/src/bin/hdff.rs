use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdff::descriptor::PoolingMode;
use hdff::harness::export::{self, write_file};
use hdff::harness::{self, BenchConfig, ExperimentConfig, SyntheticSpec};
use hdff::io::{load_model, FeaturePack};
use hdff::metrics::DetErrMode;
use hdff::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hdff",
    version,
    about = "Hyperdimensional feature fusion OOD detection"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Hyperspace dimension m.
    #[arg(long, global = true, default_value_t = 10_000)]
    hd_dim: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "max")]
    pooling: PoolingMode,
    /// Comma-separated layer ids to fuse (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    layers: Option<Vec<u32>>,
    #[arg(long, global = true, default_value = "min")]
    det_err_mode: DetErrMode,
    /// Step of the F1 threshold sweep, in degrees.
    #[arg(long, global = true, default_value_t = 0.1)]
    f1_step: f64,
    /// Histogram bin width, in degrees.
    #[arg(long, global = true, default_value_t = 1.0)]
    bins: f64,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit class descriptors on a labelled feature pack.
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every sample of a pack (CSV to --out or stdout).
    Score {
        #[arg(long)]
        pack: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Flag samples with θ > θ* as OOD.
        #[arg(long, allow_hyphen_values = true)]
        theta_star: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics for an ID/OOD pair: report.json, f1_curve.csv, histogram.csv.
    Eval {
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        ood: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-layer metrics plus the fusion row, for each OOD pack.
    AblateLayers {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        id: PathBuf,
        #[arg(long, required = true)]
        ood: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// AUROC mean and 95% CI over projection seeds, per hyperspace dimension.
    AblateDims {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        ood: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,5000,10000")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic train/test/ood feature packs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        spec: SynthArgs,
    },
    /// Angles between image descriptors of sample pairs.
    Similarity {
        #[arg(long)]
        pack: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Pairs as `i:j`, comma-separated.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        /// Additionally draw this many random pairs (seeded by --seed).
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time projection + bundling against the channel count.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
        channels: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    train_per_class: usize,
    #[arg(long, default_value_t = 100)]
    test_per_class: usize,
    #[arg(long, default_value_t = 400)]
    ood_samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    channels: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    height: usize,
    #[arg(long, default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 1.0)]
    prototype_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    noise_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    ood_shift: f64,
    #[arg(long, value_delimiter = ',')]
    layer_signal: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    layer_shift: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config(c: &Common) -> ExperimentConfig {
    ExperimentConfig {
        hd_dim: c.hd_dim,
        master_seed: c.seed,
        pooling: c.pooling,
        layers: c.layers.clone(),
        det_err_mode: c.det_err_mode,
        f1_step: c.f1_step,
        bin_width: c.bins,
        threads: c.threads,
    }
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => write_file(p, |w| f(w)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("pair {s:?} is not of the form i:j"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli.common);
    match cli.command {
        Command::Fit { train, out } => {
            let pack = FeaturePack::open(&train)?;
            let summary = harness::cmd_fit(&pack, &cfg, Some(&out))?;
            for (class, count) in &summary.class_counts {
                eprintln!("class {class}: {count} samples");
            }
            eprintln!(
                "fitted {} classes over {} layers in {:.2?} -> {}",
                summary.class_counts.len(),
                summary.model.layers.len(),
                summary.elapsed,
                out.display()
            );
        }
        Command::Score {
            pack,
            model,
            theta_star,
            out,
        } => {
            let pack = FeaturePack::open(&pack)?;
            let model = load_model(&model)?;
            let rows = harness::cmd_score(&pack, &model, theta_star, &cfg)?;
            emit(out.as_deref(), |w| {
                export::write_scores_csv(&mut { w }, &rows)
            })?;
        }
        Command::Eval {
            id,
            ood,
            model,
            out,
        } => {
            let id = FeaturePack::open(&id)?;
            let ood = FeaturePack::open(&ood)?;
            let model = load_model(&model)?;
            let report = harness::cmd_eval(&id, &ood, &model, &cfg)?;
            export::write_eval_outputs(&out, &report)?;
            println!(
                "auroc={:.4} fpr95={:.4} detection_error={:.4} max_f1={:.4}",
                report.auroc, report.fpr_at_95tpr, report.detection_error, report.max_f1
            );
        }
        Command::AblateLayers {
            train,
            id,
            ood,
            out,
        } => {
            let train = FeaturePack::open(&train)?;
            let id = FeaturePack::open(&id)?;
            let oods = ood
                .iter()
                .map(FeaturePack::open)
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&FeaturePack> = oods.iter().collect();
            let tables = harness::ablate_layers_multi(&train, &id, &refs, &cfg)?;
            let named: Vec<(String, _)> = ood
                .iter()
                .map(|p| p.display().to_string())
                .zip(tables)
                .collect();
            emit(out.as_deref(), |w| {
                export::write_layer_ablation_csv(&mut { w }, &named)
            })?;
        }
        Command::AblateDims {
            train,
            id,
            ood,
            dims,
            repeats,
            out,
        } => {
            let train = FeaturePack::open(&train)?;
            let id = FeaturePack::open(&id)?;
            let ood = FeaturePack::open(&ood)?;
            let rows = harness::cmd_ablate_dims(&train, &id, &ood, &dims, repeats, &cfg)?;
            emit(out.as_deref(), |w| {
                export::write_dims_csv(&mut { w }, &rows)
            })?;
        }
        Command::Synth { out, spec } => {
            let spec = SyntheticSpec {
                num_classes: spec.classes,
                train_per_class: spec.train_per_class,
                test_per_class: spec.test_per_class,
                ood_samples: spec.ood_samples,
                channels: spec.channels,
                height: spec.height,
                width: spec.width,
                prototype_scale: spec.prototype_scale,
                noise_scale: spec.noise_scale,
                ood_shift: spec.ood_shift,
                layer_signal: spec.layer_signal,
                layer_shift: spec.layer_shift,
                seed: cfg.master_seed,
            };
            let paths = harness::cmd_synth(&spec, &out)?;
            eprintln!(
                "wrote {}, {}, {}",
                paths.train.display(),
                paths.test.display(),
                paths.ood.display()
            );
        }
        Command::Similarity {
            pack,
            model,
            pairs,
            random,
            out,
        } => {
            let pack = FeaturePack::open(&pack)?;
            let model = load_model(&model)?;
            let mut list = pairs
                .iter()
                .map(|s| parse_pair(s))
                .collect::<Result<Vec<_>>>()?;
            list.extend(harness::synth::random_pairs(
                pack.manifest().num_samples,
                random,
                cfg.master_seed,
            ));
            if list.is_empty() {
                return Err(Error::Usage("give --pairs and/or --random".into()));
            }
            let rows = cfg.run(|| harness::cmd_similarity(&pack, &model, &list))?;
            emit(out.as_deref(), |w| {
                export::write_similarity_csv(&mut { w }, &rows)
            })?;
        }
        Command::Bench {
            channels,
            reps,
            batch,
            out,
        } => {
            let report = harness::cmd_bench(&BenchConfig {
                hd_dim: cfg.hd_dim,
                channels,
                reps,
                batch,
                seed: cfg.master_seed,
            })?;
            emit(out.as_deref(), |w| {
                export::write_bench_csv(&mut { w }, &report)
            })?;
        }
    }
    Ok(())
}
