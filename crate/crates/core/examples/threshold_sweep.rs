// Metrics on fixed score lists: AUROC, FPR95, detection error, the F1
// sweep with its near-optimal band, and the angle histogram.

use hdff::metrics::{
    angle_histogram, evaluate, f1_sweep, near_optimal_band, DetErrMode, EvalOptions,
};

pub fn run_example() -> hdff::Result<()> {
    let id = [12.0, 14.5, 15.0, 18.2, 21.0, 22.4, 25.0, 31.0];
    let ood = [24.0, 29.5, 33.0, 38.0, 41.2, 47.0, 52.5, 60.0];
    let opts = EvalOptions {
        det_err_mode: DetErrMode::Tpr95,
        f1_step: 0.5,
        bin_width: 10.0,
    };
    let r = evaluate(&id, &ood, &opts)?;
    println!(
        "AUROC {:.4}, FPR95 {:.3}, DetErr({}) {:.3}, maxF1 {:.3}",
        r.auroc, r.fpr_at_95tpr, r.detection_error_mode, r.detection_error, r.max_f1
    );

    let a = f1_sweep(&id, &ood, 0.5)?;
    let b = f1_sweep(&id, &ood[2..], 0.5)?;
    println!("best θ* {:.1} (F1 {:.3})", a.best_threshold, a.max_f1);
    if let (Some(lo), Some(hi)) = (a.near_optimal_band.first(), a.near_optimal_band.last()) {
        println!("within 5% of max F1: θ* in [{lo}, {hi}]");
    }
    println!(
        "shared band across two OOD sets: {} thresholds",
        near_optimal_band(&[a, b])?.len()
    );

    let h = angle_histogram(&ood, 10.0)?;
    for k in 0..h.num_bins() {
        let (lo, hi) = h.bin_edges(k);
        println!("[{lo:>4}, {hi:>4}) {}", "#".repeat(h.counts[k] as usize));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hdff::Result<()> {
    run_example()
}
