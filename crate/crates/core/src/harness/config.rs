use crate::descriptor::{FitConfig, PoolingMode};
use crate::error::{Error, Result};
use crate::metrics::{DetErrMode, EvalOptions};

/// Settings shared by the harness commands. Defaults: m = 10⁴, max pooling,
/// all layers, mean-centering always on.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub hd_dim: usize,
    pub master_seed: u64,
    pub pooling: PoolingMode,
    /// `None` fuses every layer of the training pack.
    pub layers: Option<Vec<u32>>,
    pub det_err_mode: DetErrMode,
    pub f1_step: f64,
    pub bin_width: f64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hd_dim: 10_000,
            master_seed: 0,
            pooling: PoolingMode::Max,
            layers: None,
            det_err_mode: DetErrMode::Min,
            f1_step: 0.1,
            bin_width: 1.0,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hd_dim == 0 {
            return Err(Error::usage("--hd-dim must be >= 1"));
        }
        if self.f1_step.is_nan() || self.f1_step <= 0.0 {
            return Err(Error::usage("--f1-step must be positive"));
        }
        if self.bin_width.is_nan() || self.bin_width <= 0.0 {
            return Err(Error::usage("--bins must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::usage("--threads must be >= 1"));
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            hd_dim: self.hd_dim,
            master_seed: self.master_seed,
            pooling: self.pooling,
            layers: self.layers.clone(),
            classes: None,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            det_err_mode: self.det_err_mode,
            f1_step: self.f1_step,
            bin_width: self.bin_width,
        }
    }

    /// Runs `f` on a pool of `threads` workers, or directly when unset.
    pub fn run<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.threads {
            None => f(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::usage(format!("cannot start {n} worker threads: {e}")))?
                .install(f),
        }
    }
}
