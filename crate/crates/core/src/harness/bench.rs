//! Timing of projection + bundling against the channel count.

use std::hint::black_box;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hdc::seed::{derive_seed, rng_from_seed};
use crate::hdc::{generate_semi_orthogonal, HdVector};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub hd_dim: usize,
    pub channels: Vec<usize>,
    /// Timed repetitions per channel count (after two warm-up runs).
    pub reps: usize,
    /// Vectors projected and bundled per repetition.
    pub batch: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            hd_dim: 10_000,
            channels: vec![64, 128, 256, 512, 1024],
            reps: 20,
            batch: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub channels: usize,
    pub median_seconds: f64,
    pub min_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub hd_dim: usize,
    pub rows: Vec<BenchRow>,
    /// Seconds per channel from the least-squares line.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Times `batch` projections plus their bundle at each channel count. Runs on
/// the calling thread only. Repetitions are interleaved across channel
/// counts so slow drifts in machine load hit every count alike.
pub fn cmd_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.channels.len() < 2 || config.reps == 0 || config.batch == 0 {
        return Err(Error::usage(
            "bench needs >= 2 channel counts, >= 1 repetition and a batch >= 1",
        ));
    }
    if let Some(&c) = config
        .channels
        .iter()
        .find(|&&c| c == 0 || c > config.hd_dim)
    {
        return Err(Error::dim(format!(
            "channel count {c} must be in 1..={}",
            config.hd_dim
        )));
    }

    let setups = config
        .channels
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let p = generate_semi_orthogonal(derive_seed(config.seed, k as u64), config.hd_dim, c)?;
            let mut rng = rng_from_seed(derive_seed(config.seed, 1000 + k as u64));
            let inputs: Vec<Vec<f32>> = (0..config.batch)
                .map(|_| (0..c).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            Ok((p, inputs))
        })
        .collect::<Result<Vec<_>>>()?;

    let run = |(p, inputs): &(crate::hdc::ProjectionMatrix, Vec<Vec<f32>>)| -> Result<f64> {
        let start = Instant::now();
        let mut acc = HdVector::zeros(config.hd_dim)?;
        for v in inputs {
            acc.add_assign(&p.project(v)?)?;
        }
        black_box(&acc);
        Ok(start.elapsed().as_secs_f64())
    };

    for setup in &setups {
        run(setup)?;
        run(setup)?;
    }
    let mut samples = vec![Vec::with_capacity(config.reps); setups.len()];
    for _ in 0..config.reps {
        for (k, setup) in setups.iter().enumerate() {
            samples[k].push(run(setup)?);
        }
    }

    let rows: Vec<BenchRow> = config
        .channels
        .iter()
        .zip(samples)
        .map(|(&channels, mut times)| {
            times.sort_by(f64::total_cmp);
            BenchRow {
                channels,
                median_seconds: median_sorted(&times),
                min_seconds: times[0],
            }
        })
        .collect();

    let xs: Vec<f64> = rows.iter().map(|r| r.channels as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(BenchReport {
        hd_dim: config.hd_dim,
        rows,
        slope,
        intercept,
        r_squared,
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least squares `y = slope·x + intercept` and its R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_r2() {
        let (s, i, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = BenchConfig {
            hd_dim: 64,
            channels: vec![8],
            ..Default::default()
        };
        assert!(cmd_bench(&c).is_err());
        c.channels = vec![8, 128];
        assert!(matches!(cmd_bench(&c), Err(Error::Dimension(_))));
    }

    #[test]
    fn small_bench_runs() {
        let r = cmd_bench(&BenchConfig {
            hd_dim: 256,
            channels: vec![16, 32, 64],
            reps: 3,
            batch: 2,
            seed: 1,
        })
        .unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.median_seconds > 0.0));
    }
}
