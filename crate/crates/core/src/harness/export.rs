//! Plot-ready CSV and JSON writers. Every CSV starts with a
//! `# schema: <name>` line; JSON documents carry a `schema_version` field.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::bench::BenchReport;
use super::commands::{DimRow, LayerAblation, ScoreRow, SimilarityRow};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

pub const SCORES_SCHEMA: &str = "hdff.scores.v1";
pub const F1_SCHEMA: &str = "hdff.f1_curve.v1";
pub const HISTOGRAM_SCHEMA: &str = "hdff.histogram.v1";
pub const LAYERS_SCHEMA: &str = "hdff.ablate_layers.v1";
pub const DIMS_SCHEMA: &str = "hdff.ablate_dims.v1";
pub const SIMILARITY_SCHEMA: &str = "hdff.similarity.v1";
pub const BENCH_SCHEMA: &str = "hdff.bench.v1";

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn header(w: &mut impl Write, schema: &str, columns: &str) -> Result<()> {
    writeln!(w, "# schema: {schema}").map_err(io_err)?;
    writeln!(w, "{columns}").map_err(io_err)
}

/// `sample_id,theta,nearest_class[,decision]`.
pub fn write_scores_csv(w: &mut impl Write, rows: &[ScoreRow]) -> Result<()> {
    let with_decision = rows.first().is_some_and(|r| r.decision.is_some());
    let cols = if with_decision {
        "sample_id,theta,nearest_class,decision"
    } else {
        "sample_id,theta,nearest_class"
    };
    header(w, SCORES_SCHEMA, cols)?;
    for r in rows {
        write!(
            w,
            "{},{},{}",
            r.record.sample_id, r.record.theta_degrees, r.record.nearest_class
        )
        .map_err(io_err)?;
        if let Some(d) = r.decision {
            write!(w, ",{}", d.as_str()).map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    Ok(())
}

/// `threshold,f1`.
pub fn write_f1_csv(w: &mut impl Write, report: &MetricReport) -> Result<()> {
    header(w, F1_SCHEMA, "threshold,f1")?;
    for (t, f) in &report.f1_curve {
        writeln!(w, "{t},{f}").map_err(io_err)?;
    }
    Ok(())
}

/// `bin_lo,bin_hi,count_id,count_ood`.
pub fn write_histogram_csv(w: &mut impl Write, report: &MetricReport) -> Result<()> {
    header(w, HISTOGRAM_SCHEMA, "bin_lo,bin_hi,count_id,count_ood")?;
    for h in &report.histogram {
        writeln!(
            w,
            "{},{},{},{}",
            h.bin_lo, h.bin_hi, h.count_id, h.count_ood
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(w: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)
        .map_err(|e| Error::io("<output>", std::io::Error::other(e)))?;
    writeln!(w).map_err(io_err)
}

/// `ood,label,layer_id,auroc,fpr95,detection_error,max_f1`, one block per OOD pack.
pub fn write_layer_ablation_csv(
    w: &mut impl Write,
    tables: &[(String, LayerAblation)],
) -> Result<()> {
    header(
        w,
        LAYERS_SCHEMA,
        "ood,label,layer_id,auroc,fpr95,detection_error,max_f1",
    )?;
    for (name, table) in tables {
        for r in &table.rows {
            let layer = r.layer_id.map(|l| l.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{name},{},{layer},{},{},{},{}",
                r.label, r.auroc, r.fpr_at_95tpr, r.detection_error, r.max_f1
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// `hd_dim,repeats,mean_auroc,ci95_low,ci95_high`.
pub fn write_dims_csv(w: &mut impl Write, rows: &[DimRow]) -> Result<()> {
    header(
        w,
        DIMS_SCHEMA,
        "hd_dim,repeats,mean_auroc,ci95_low,ci95_high",
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.hd_dim,
            r.aurocs.len(),
            r.mean,
            r.mean - r.ci95_half_width,
            r.mean + r.ci95_half_width
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// `a,b,angle_degrees`.
pub fn write_similarity_csv(w: &mut impl Write, rows: &[SimilarityRow]) -> Result<()> {
    header(w, SIMILARITY_SCHEMA, "a,b,angle_degrees")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.a, r.b, r.angle_degrees).map_err(io_err)?;
    }
    Ok(())
}

/// `channels,median_seconds,min_seconds`, then the fit as comment lines.
pub fn write_bench_csv(w: &mut impl Write, report: &BenchReport) -> Result<()> {
    header(w, BENCH_SCHEMA, "channels,median_seconds,min_seconds")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", r.channels, r.median_seconds, r.min_seconds).map_err(io_err)?;
    }
    writeln!(
        w,
        "# slope={} intercept={} r_squared={}",
        report.slope, report.intercept, report.r_squared
    )
    .map_err(io_err)
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `report.json`, `f1_curve.csv` and `histogram.csv` into `dir`.
pub fn write_eval_outputs(dir: &Path, report: &MetricReport) -> Result<()> {
    write_file(&dir.join("report.json"), |w| write_json(w, report))?;
    write_file(&dir.join("f1_curve.csv"), |w| write_f1_csv(w, report))?;
    write_file(&dir.join("histogram.csv"), |w| {
        write_histogram_csv(w, report)
    })
}
