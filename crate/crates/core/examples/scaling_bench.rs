// Projection + bundling time against channel count, with a linear fit.

use hdff::harness::{cmd_bench, BenchConfig};

pub fn run_example() -> hdff::Result<()> {
    let config = BenchConfig {
        hd_dim: 4000,
        channels: vec![32, 64, 128, 256],
        reps: 5,
        batch: 4,
        seed: 0,
    };
    let report = cmd_bench(&config)?;
    for r in &report.rows {
        println!("c = {:4}: {:8.3} ms", r.channels, r.median_seconds * 1e3);
    }
    println!(
        "slope {:.3} µs/channel, R² {:.4}",
        report.slope * 1e6,
        report.r_squared
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
