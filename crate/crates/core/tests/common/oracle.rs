//! Exhaustive reference implementations of the OOD metrics.
//!
//! Thresholds here are midpoints between consecutive distinct scores plus
//! `±∞`, with the strict rule `θ > t` for "predicted OOD"; the library uses
//! observed scores with `θ >= t`. Both realise the same confusion matrices.

pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fneg: u64,
}

pub fn thresholds(id: &[f64], ood: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = id.iter().chain(ood).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut t = vec![f64::NEG_INFINITY];
    for w in all.windows(2) {
        t.push(0.5 * (w[0] + w[1]));
    }
    t.push(f64::INFINITY);
    t
}

pub fn confusion(id: &[f64], ood: &[f64], t: f64) -> Confusion {
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        fneg: 0,
    };
    for &o in ood {
        if o > t {
            c.tp += 1;
        } else {
            c.fneg += 1;
        }
    }
    for &i in id {
        if i > t {
            c.fp += 1;
        }
    }
    c
}

pub fn auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut twice = 0u64;
    for &o in ood {
        for &i in id {
            if o > i {
                twice += 2;
            } else if o == i {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * id.len() as u64 * ood.len() as u64) as f64
}

/// `(threshold, fpr)` at the largest threshold with TPR >= 0.95.
pub fn fpr95(id: &[f64], ood: &[f64]) -> (f64, f64) {
    let mut best: Option<(f64, f64, Confusion)> = None;
    for t in thresholds(id, ood) {
        let c = confusion(id, ood, t);
        let tpr = c.tp as f64 / ood.len() as f64;
        if tpr >= 0.95 && best.as_ref().is_none_or(|b| t > b.0) {
            best = Some((t, c.fp as f64 / id.len() as f64, c));
        }
    }
    let (t, fpr, _) = best.expect("-inf threshold captures everything");
    (t, fpr)
}

fn half_error(id: &[f64], ood: &[f64], c: &Confusion) -> f64 {
    0.5 * (c.fp as f64 / id.len() as f64) + 0.5 * (c.fneg as f64 / ood.len() as f64)
}

pub fn detection_error_min(id: &[f64], ood: &[f64]) -> f64 {
    thresholds(id, ood)
        .into_iter()
        .map(|t| half_error(id, ood, &confusion(id, ood, t)))
        .fold(f64::INFINITY, f64::min)
}

pub fn detection_error_tpr95(id: &[f64], ood: &[f64]) -> f64 {
    let (t, _) = fpr95(id, ood);
    half_error(id, ood, &confusion(id, ood, t))
}

pub fn f1(c: &Confusion) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / (2 * c.tp + c.fp + c.fneg) as f64
    }
}

pub fn max_f1(id: &[f64], ood: &[f64]) -> f64 {
    thresholds(id, ood)
        .into_iter()
        .map(|t| f1(&confusion(id, ood, t)))
        .fold(0.0, f64::max)
}

/// F1 at an explicit threshold, strict rule.
pub fn f1_at(id: &[f64], ood: &[f64], t: f64) -> f64 {
    f1(&confusion(id, ood, t))
}
