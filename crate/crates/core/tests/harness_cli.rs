mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::oracle;
use hdff::descriptor::{encode_source, SampleSource};
use hdff::harness::{
    cmd_ablate_dims, cmd_ablate_layers, cmd_bench, cmd_eval, cmd_fit, cmd_score, cmd_similarity,
    cmd_synth, score_source, BenchConfig, ExperimentConfig, SynthOutput, SyntheticSpec,
};
use hdff::hdc::angle_degrees;
use hdff::io::{load_model, FeaturePack};
use hdff::metrics::{evaluate, Decision, DetErrMode, EvalOptions};

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        train_per_class: 30,
        test_per_class: 20,
        ood_samples: 80,
        channels: vec![8, 16, 32],
        seed,
        ..SyntheticSpec::default()
    }
}

fn cfg() -> ExperimentConfig {
    ExperimentConfig {
        hd_dim: 2000,
        ..ExperimentConfig::default()
    }
}

struct Packs {
    _dir: tempfile::TempDir,
    paths: SynthOutput,
    train: FeaturePack,
    test: FeaturePack,
    ood: FeaturePack,
}

fn packs(spec: &SyntheticSpec) -> Packs {
    let dir = tempfile::tempdir().unwrap();
    let paths = cmd_synth(spec, dir.path()).unwrap();
    Packs {
        train: FeaturePack::open(&paths.train).unwrap(),
        test: FeaturePack::open(&paths.test).unwrap(),
        ood: FeaturePack::open(&paths.ood).unwrap(),
        paths,
        _dir: dir,
    }
}

#[test]
fn fit_is_reproducible_and_seed_robust() {
    let p = packs(&small_spec(1));
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.hdff"), dir.path().join("b.hdff"));
    let summary = cmd_fit(&p.train, &cfg(), Some(&a)).unwrap();
    cmd_fit(&p.train, &cfg(), Some(&b)).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        summary.class_counts,
        vec![(0, 30), (1, 30), (2, 30), (3, 30)]
    );

    let model = load_model(&a).unwrap();
    for i in 0..4 {
        for j in i + 1..4 {
            assert!(
                angle_degrees(&model.classes[i].descriptor, &model.classes[j].descriptor).unwrap()
                    > 0.0
            );
        }
    }

    let other = cmd_fit(
        &p.train,
        &ExperimentConfig {
            master_seed: 77,
            ..cfg()
        },
        None,
    )
    .unwrap()
    .model;
    assert_ne!(other.classes, model.classes);
    let (ra, rb) = (
        score_source(&p.train, &model).unwrap(),
        score_source(&p.train, &other).unwrap(),
    );
    let same = ra
        .iter()
        .zip(&rb)
        .filter(|(x, y)| x.nearest_class == y.nearest_class)
        .count();
    assert!(same * 100 >= ra.len() * 95);
}

#[test]
fn fit_rejects_unlabelled_packs() {
    let p = packs(&small_spec(2));
    assert!(cmd_fit(&p.ood, &cfg(), None).is_err());
}

#[test]
fn scores_and_decisions() {
    let p = packs(&small_spec(3));
    let model = cmd_fit(&p.train, &cfg(), None).unwrap().model;
    let mean = |rows: &[hdff::harness::ScoreRow]| {
        rows.iter().map(|r| r.record.theta_degrees).sum::<f64>() / rows.len() as f64
    };
    let train = cmd_score(&p.train, &model, None, &cfg()).unwrap();
    let ood = cmd_score(&p.ood, &model, None, &cfg()).unwrap();
    assert!(mean(&train) < mean(&ood));
    assert!(train.iter().all(|r| r.decision.is_none()));

    let lenient = cmd_score(&p.ood, &model, Some(90.0), &cfg()).unwrap();
    assert!(lenient
        .iter()
        .all(|r| r.decision == Some(Decision::InDistribution)));
    let strict = cmd_score(&p.test, &model, Some(-1.0), &cfg()).unwrap();
    assert!(strict
        .iter()
        .all(|r| r.decision == Some(Decision::OutOfDistribution)));
}

#[test]
fn score_rejects_mismatched_layers() {
    let p = packs(&small_spec(4));
    let q = packs(&SyntheticSpec {
        channels: vec![8, 16, 33],
        ..small_spec(4)
    });
    let model = cmd_fit(&p.train, &cfg(), None).unwrap().model;
    assert!(cmd_score(&q.test, &model, None, &cfg()).is_err());
}

#[test]
fn eval_consistency() {
    let p = packs(&small_spec(5));
    let model = cmd_fit(&p.train, &cfg(), None).unwrap().model;
    let report = cmd_eval(&p.test, &p.ood, &model, &cfg()).unwrap();
    assert!(report.auroc >= 0.95);
    assert_eq!(
        cmd_eval(&p.test, &p.test, &model, &cfg()).unwrap().auroc,
        0.5
    );
    let swapped = cmd_eval(&p.ood, &p.test, &model, &cfg()).unwrap();
    assert!((swapped.auroc - (1.0 - report.auroc)).abs() < 1e-12);

    // Oracle on a 20-sample subset of each split.
    let theta = |s: &FeaturePack| -> Vec<f64> {
        score_source(s, &model)
            .unwrap()
            .iter()
            .take(20)
            .map(|r| r.theta_degrees)
            .collect()
    };
    let (id, ood) = (theta(&p.test), theta(&p.ood));
    for mode in [DetErrMode::Min, DetErrMode::Tpr95] {
        let r = evaluate(
            &id,
            &ood,
            &EvalOptions {
                det_err_mode: mode,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.auroc, oracle::auroc(&id, &ood));
        assert_eq!(r.fpr_at_95tpr, oracle::fpr95(&id, &ood).1);
        assert_eq!(r.max_f1, oracle::max_f1(&id, &ood));
        let expected = match mode {
            DetErrMode::Min => oracle::detection_error_min(&id, &ood),
            DetErrMode::Tpr95 => oracle::detection_error_tpr95(&id, &ood),
        };
        assert_eq!(r.detection_error, expected);
    }
}

#[test]
fn layer_ablation_tables() {
    let single = packs(&SyntheticSpec {
        channels: vec![12],
        ..small_spec(6)
    });
    let t = cmd_ablate_layers(&single.test, &single.ood, &single.train, &cfg()).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.rows[0].auroc, t.fusion().auroc);
    assert_eq!(t.rows[0].max_f1, t.fusion().max_f1);

    let only3 = SyntheticSpec {
        channels: vec![8, 8, 8, 8, 8],
        layer_signal: Some(vec![0.0, 0.0, 0.0, 1.0, 0.0]),
        layer_shift: Some(vec![0.0, 0.0, 0.0, 1.0, 0.0]),
        ..small_spec(7)
    };
    let p = packs(&only3);
    let t = cmd_ablate_layers(&p.test, &p.ood, &p.train, &cfg()).unwrap();
    let layer3 = t.rows.iter().find(|r| r.layer_id == Some(3)).unwrap();
    for r in t.layer_rows().iter().filter(|r| r.layer_id != Some(3)) {
        assert!(layer3.auroc > r.auroc, "{} vs {}", layer3.auroc, r.auroc);
    }

    let default_like = packs(&small_spec(12));
    let t = cmd_ablate_layers(
        &default_like.test,
        &default_like.ood,
        &default_like.train,
        &cfg(),
    )
    .unwrap();
    assert!(t.fusion().auroc >= t.best_layer().auroc - 0.05);
}

#[test]
fn dimension_ablation() {
    let p = packs(&small_spec(8));
    let c = ExperimentConfig {
        master_seed: 3,
        ..cfg()
    };
    let rows = cmd_ablate_dims(&p.train, &p.test, &p.ood, &[500], 1, &c).unwrap();
    let model = cmd_fit(
        &p.train,
        &ExperimentConfig {
            hd_dim: 500,
            ..c.clone()
        },
        None,
    )
    .unwrap()
    .model;
    assert_eq!(
        rows[0].aurocs,
        vec![cmd_eval(&p.test, &p.ood, &model, &c).unwrap().auroc]
    );
    assert_eq!(rows[0].ci95_half_width, 0.0);

    let a = cmd_ablate_dims(&p.train, &p.test, &p.ood, &[64, 256], 10, &c).unwrap();
    let b = cmd_ablate_dims(&p.train, &p.test, &p.ood, &[64, 256], 10, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[1].aurocs.len(), 10);

    assert!(cmd_ablate_dims(&p.train, &p.test, &p.ood, &[16], 1, &c).is_err());
}

#[test]
fn synthetic_packs() {
    let spec = SyntheticSpec {
        noise_scale: 0.0,
        ..small_spec(9)
    };
    let p = packs(&spec);
    for split in [&p.paths.train, &p.paths.test, &p.paths.ood] {
        FeaturePack::open(split).unwrap();
    }
    assert_eq!(p.train.num_samples(), 120);
    // Noise-free: every sample of a class is identical.
    for l in 0..3 {
        assert_eq!(
            p.train.read_slab(0, l).unwrap(),
            p.train.read_slab(4, l).unwrap()
        );
        assert_ne!(
            p.train.read_slab(0, l).unwrap(),
            p.train.read_slab(1, l).unwrap()
        );
    }
    // All samples per class identical means every centred vector equals its
    // class offset; descriptors stay well defined.
    cmd_fit(&p.train, &cfg(), None).unwrap();

    let null = packs(&SyntheticSpec {
        ood_shift: 0.0,
        ..small_spec(10)
    });
    let model = cmd_fit(&null.train, &cfg(), None).unwrap().model;
    let auroc = cmd_eval(&null.test, &null.ood, &model, &cfg())
        .unwrap()
        .auroc;
    assert!((0.4..=0.6).contains(&auroc), "{auroc}");

    assert!(cmd_synth(
        &SyntheticSpec {
            num_classes: 0,
            ..small_spec(1)
        },
        tempfile::tempdir().unwrap().path()
    )
    .is_err());
}

#[test]
fn similarity_table() {
    let p = packs(&SyntheticSpec {
        noise_scale: 0.0,
        ..small_spec(11)
    });
    let model = cmd_fit(&p.train, &cfg(), None).unwrap().model;
    let pairs = [(0, 0), (0, 4), (1, 2), (3, 10)];
    let rows = cmd_similarity(&p.train, &model, &pairs).unwrap();
    assert_eq!(rows[0].angle_degrees, 0.0);
    // Samples 0 and 4 share class 0 and the data is noise-free.
    assert_eq!(rows[1].angle_degrees, 0.0);
    let ys = encode_source(&p.train, &model.encoder().unwrap()).unwrap();
    for r in &rows {
        assert_eq!(r.angle_degrees, angle_degrees(&ys[r.a], &ys[r.b]).unwrap());
    }
    assert!(cmd_similarity(&p.train, &model, &[(0, 120)]).is_err());
}

#[test]
fn bench_table_scales() {
    let report = cmd_bench(&BenchConfig::default()).unwrap();
    let t: Vec<f64> = report.rows.iter().map(|r| r.median_seconds).collect();
    assert!(t.windows(2).all(|w| w[0] <= w[1]), "{t:?}");
    for w in t.windows(2) {
        let ratio = w[1] / w[0];
        assert!((1.4..=2.6).contains(&ratio), "{t:?}");
    }
    assert!(report.r_squared >= 0.95);
    assert!(cmd_bench(&BenchConfig {
        channels: vec![64],
        ..Default::default()
    })
    .is_err());
}

fn hdff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hdff"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hdff(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&[
        "synth",
        "--out",
        &d("data"),
        "--seed",
        "5",
        "--train-per-class",
        "20",
        "--test-per-class",
        "10",
        "--ood-samples",
        "40",
        "--channels",
        "8,16",
    ]);
    let (train, test, ood) = (d("data/train"), d("data/test"), d("data/ood"));
    ok(&[
        "fit",
        "--train",
        &train,
        "--out",
        &d("m.hdff"),
        "--hd-dim",
        "1000",
    ]);

    let scores = ok(&[
        "score",
        "--pack",
        &ood,
        "--model",
        &d("m.hdff"),
        "--theta-star",
        "-1",
    ]);
    let mut lines = scores.lines();
    assert_eq!(lines.next(), Some("# schema: hdff.scores.v1"));
    assert_eq!(lines.next(), Some("sample_id,theta,nearest_class,decision"));
    assert_eq!(lines.clone().count(), 40);
    assert!(lines.all(|l| l.ends_with(",ood")));

    let summary = ok(&[
        "eval",
        "--id",
        &test,
        "--ood",
        &ood,
        "--model",
        &d("m.hdff"),
        "--out",
        &d("eval"),
        "--f1-step",
        "0.5",
    ]);
    assert!(summary.starts_with("auroc="));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d("eval/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "hdff.metrics.v1");
    assert_eq!(report["f1_curve"].as_array().unwrap().len(), 181);
    assert_eq!(
        first_line(&dir.path().join("eval/f1_curve.csv")),
        "# schema: hdff.f1_curve.v1"
    );
    assert_eq!(
        first_line(&dir.path().join("eval/histogram.csv")),
        "# schema: hdff.histogram.v1"
    );

    ok(&[
        "ablate-layers",
        "--train",
        &train,
        "--id",
        &test,
        "--ood",
        &ood,
        "--ood",
        &ood,
        "--hd-dim",
        "500",
        "--out",
        &d("layers.csv"),
    ]);
    let layers = fs::read_to_string(d("layers.csv")).unwrap();
    assert!(layers.starts_with("# schema: hdff.ablate_layers.v1\n"));
    assert_eq!(layers.lines().count(), 2 + 2 * 3);

    let dims = ok(&[
        "ablate-dims",
        "--train",
        &train,
        "--id",
        &test,
        "--ood",
        &ood,
        "--dims",
        "16,64",
        "--repeats",
        "2",
    ]);
    assert!(dims.starts_with("# schema: hdff.ablate_dims.v1\n"));

    let sim = ok(&[
        "similarity",
        "--pack",
        &test,
        "--model",
        &d("m.hdff"),
        "--pairs",
        "0:0,1:2",
        "--random",
        "3",
    ]);
    assert!(sim.starts_with("# schema: hdff.similarity.v1\na,b,angle_degrees\n0,0,0\n"));
    assert_eq!(sim.lines().count(), 2 + 5);

    let bench = ok(&[
        "bench",
        "--hd-dim",
        "256",
        "--channels",
        "8,16",
        "--reps",
        "2",
        "--batch",
        "1",
    ]);
    assert!(bench.starts_with("# schema: hdff.bench.v1\n"));
}

#[test]
fn cli_exit_codes() {
    assert_eq!(hdff(&["--help"]).status.code(), Some(0));
    assert_eq!(hdff(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(hdff(&["fit", "--train", "x"]).status.code(), Some(1));
    assert_eq!(
        hdff(&[
            "score",
            "--pack",
            "x",
            "--model",
            "y",
            "--pooling",
            "median"
        ])
        .status
        .code(),
        Some(1)
    );
    let missing = hdff(&[
        "fit",
        "--train",
        "/nonexistent/pack",
        "--out",
        "/tmp/never.hdff",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/pack"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s").to_str().unwrap().to_string();
    assert_eq!(
        hdff(&["synth", "--out", &out, "--classes", "0"])
            .status
            .code(),
        Some(1)
    );
}
