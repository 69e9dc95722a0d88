mod common;

use hdff::descriptor::{
    center, encode_source, ensemble_descriptor, ensemble_image_descriptor, fit, pool, Encoder,
    FitConfig, InMemorySource, LayerFeatureMap, LayerShape, LayerSpec, LayerStats, PooledVector,
    PoolingMode, SampleSource,
};
use hdff::harness::{cmd_fit, cmd_synth, ExperimentConfig, SyntheticSpec};
use hdff::hdc::{angle_degrees, bind, cosine, random_rademacher, ProjectionMatrix, ProjectionSet};
use hdff::io::FeaturePack;
use hdff::{Error, HdVector};
use proptest::prelude::*;

fn map(layer_id: u32, h: usize, w: usize, c: usize, values: Vec<f32>) -> LayerFeatureMap {
    LayerFeatureMap::new(layer_id, 0, h, w, c, values).unwrap()
}

fn rel_diff(a: &HdVector, b: &HdVector) -> f64 {
    let d: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    d / a.norm()
}

#[test]
fn pooling_and_centering_examples() {
    let m = map(0, 2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(pool(&m, PoolingMode::Max).values, vec![4.0]);
    assert_eq!(pool(&m, PoolingMode::Avg).values, vec![2.5]);
    let single = map(0, 1, 1, 3, vec![1.0, -2.0, 7.0]);
    assert_eq!(
        pool(&single, PoolingMode::Max),
        pool(&single, PoolingMode::Avg)
    );

    let v = PooledVector {
        layer_id: 0,
        values: vec![3.0, 5.0],
    };
    let stats = LayerStats {
        mean: vec![1.0, 2.0],
        count: 1,
    };
    assert_eq!(center(&v, &stats).unwrap().values, vec![2.0, 3.0]);
    assert_eq!(center(&v, &LayerStats::zero(2)).unwrap(), v);
    let own = LayerStats {
        mean: v.values.clone(),
        count: 1,
    };
    assert_eq!(center(&v, &own).unwrap().values, vec![0.0, 0.0]);
    assert!(matches!(
        center(&v, &LayerStats::zero(3)),
        Err(Error::Dimension(_))
    ));
}

fn naive_pool_max(values: &[f32], positions: usize, c: usize) -> Vec<f64> {
    (0..c)
        .map(|ch| {
            (0..positions)
                .map(|p| values[p * c + ch] as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// pool -> center -> project -> sum, all with explicit loops in f64.
#[test]
fn three_layer_descriptor_matches_naive_reference() {
    let layers = [(5, 3, 2), (9, 2, 2), (3, 1, 4)];
    let source = common::random_source(3, &layers, 2, 10);
    let model = fit(
        &source,
        &FitConfig {
            hd_dim: 256,
            master_seed: 4,
            ..Default::default()
        },
    )
    .unwrap();
    let encoder = model.encoder().unwrap();

    // Means by direct summation over pooled training vectors.
    for (l, &(c, h, w)) in layers.iter().enumerate() {
        let mut sum = vec![0.0f64; c];
        for i in 0..source.num_samples() {
            let maps = source.load(i, &[l as u32]).unwrap();
            for (s, v) in sum
                .iter_mut()
                .zip(naive_pool_max(maps[0].values(), h * w, c))
            {
                *s += v;
            }
        }
        for (mean, s) in model.stats[l].mean.iter().zip(&sum) {
            assert!((*mean as f64 - s / source.num_samples() as f64).abs() < 1e-5);
        }
    }

    let m = model.hd_dim;
    for i in 0..source.num_samples() {
        let maps = source.load(i, &[0, 1, 2]).unwrap();
        let mut y = vec![0.0f64; m];
        for (l, &(c, h, w)) in layers.iter().enumerate() {
            let pooled = naive_pool_max(maps[l].values(), h * w, c);
            let centered: Vec<f64> = pooled
                .iter()
                .zip(&model.stats[l].mean)
                .map(|(v, mu)| v - *mu as f64)
                .collect();
            let p = &encoder.projections().matrices()[l];
            for (row, yr) in y.iter_mut().enumerate() {
                for (col, x) in centered.iter().enumerate() {
                    *yr += p.get(row, col) as f64 * x;
                }
            }
        }
        let fast = encoder.image_descriptor(&maps).unwrap();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = fast
            .values()
            .iter()
            .zip(&y)
            .map(|(a, b)| (*a as f64 - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-5 * norm, "sample {i}: {err} vs {norm}");
    }
}

fn single_layer_encoder(c: usize, m: usize, mean: Vec<f32>) -> Encoder {
    let p = ProjectionMatrix::generate(0, 77, m, c).unwrap();
    Encoder::new(
        PoolingMode::Max,
        vec![LayerSpec {
            layer_id: 0,
            channels: c,
        }],
        vec![LayerStats { mean, count: 1 }],
        ProjectionSet::from_matrices(0, vec![p]).unwrap(),
    )
    .unwrap()
}

#[test]
fn single_layer_is_plain_projection() {
    let mut r = common::rng(5);
    let values = common::gaussian(&mut r, 2 * 3 * 6);
    let mean = common::gaussian(&mut r, 6);
    let enc = single_layer_encoder(6, 64, mean.clone());
    let m = map(0, 2, 3, 6, values);
    let v = center(&pool(&m, PoolingMode::Max), &LayerStats { mean, count: 1 }).unwrap();
    let expected = enc.projections().matrices()[0].project(&v.values).unwrap();
    assert_eq!(enc.image_descriptor(&[m]).unwrap(), expected);
}

#[test]
fn identical_layers_double_the_projection() {
    let mut r = common::rng(6);
    let (c, m) = (7, 100);
    // Same seed for both layers gives the same matrix.
    let p0 = ProjectionMatrix::generate(0, 5, m, c).unwrap();
    let p1 = ProjectionMatrix::generate(1, 5, m, c).unwrap();
    assert_eq!(p0.entries(), p1.entries());
    let enc = Encoder::new(
        PoolingMode::Avg,
        vec![
            LayerSpec {
                layer_id: 0,
                channels: c,
            },
            LayerSpec {
                layer_id: 1,
                channels: c,
            },
        ],
        vec![LayerStats::zero(c), LayerStats::zero(c)],
        ProjectionSet::from_matrices(0, vec![p0.clone(), p1]).unwrap(),
    )
    .unwrap();
    let v = common::gaussian(&mut r, c);
    let maps = [
        LayerFeatureMap::from_vector(0, 0, v.clone()).unwrap(),
        LayerFeatureMap::from_vector(1, 0, v.clone()).unwrap(),
    ];
    let y = enc.image_descriptor(&maps).unwrap();
    assert_eq!(y, p0.project(&v).unwrap().scaled(2.0));

    let missing = enc.image_descriptor(&maps[..1]).unwrap_err();
    assert!(missing.to_string().contains("layer 1"));
}

#[test]
fn class_descriptors_separate_two_classes() {
    let a = vec![vec![1.0f32, 0.0, 2.0, 0.5]];
    let b = vec![vec![0.0f32, 3.0, -1.0, 1.0]];
    let samples = vec![
        (a.clone(), Some(0)),
        (a.clone(), Some(0)),
        (b.clone(), Some(1)),
        (b.clone(), Some(1)),
    ];
    let source = InMemorySource::from_vectors(&[0], samples).unwrap();
    let model = fit(
        &source,
        &FitConfig {
            hd_dim: 64,
            ..Default::default()
        },
    )
    .unwrap();
    let (d0, d1) = (&model.classes[0].descriptor, &model.classes[1].descriptor);
    assert!(angle_degrees(d0, d1).unwrap() > 0.0);
    let ys = encode_source(&source, &model.encoder().unwrap()).unwrap();
    for (i, y) in ys.iter().enumerate() {
        let (own, other) = if i < 2 { (d0, d1) } else { (d1, d0) };
        assert!(angle_degrees(y, own).unwrap() < angle_degrees(y, other).unwrap());
    }
}

#[test]
fn single_sample_fit_is_degenerate() {
    let source = InMemorySource::from_vectors(&[0], vec![(vec![vec![1.0, 2.0]], Some(0))]).unwrap();
    assert!(matches!(
        fit(
            &source,
            &FitConfig {
                hd_dim: 8,
                ..Default::default()
            }
        ),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn declared_class_without_samples_fails() {
    let source = common::random_source(7, &[(4, 1, 1)], 2, 3);
    let cfg = FitConfig {
        hd_dim: 16,
        classes: Some(vec![0, 1, 2]),
        ..Default::default()
    };
    let err = fit(&source, &cfg).unwrap_err();
    assert!(matches!(err, Error::Fit(_)));
    assert!(err.to_string().contains('2'));
}

#[test]
fn shape_mismatch_names_sample_and_layer() {
    let mut source = InMemorySource::new(vec![LayerShape {
        layer_id: 3,
        height: 1,
        width: 1,
        channels: 2,
    }]);
    source
        .push(vec![map(3, 1, 1, 2, vec![1.0, 2.0])], Some(0))
        .unwrap();
    let err = source
        .push(vec![map(3, 1, 1, 3, vec![1.0, 2.0, 3.0])], Some(0))
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("sample 1") && msg.contains("layer 3"), "{msg}");
}

#[test]
fn fit_is_deterministic_and_thread_independent() {
    let source = common::random_source(8, &[(6, 2, 2), (10, 1, 3)], 3, 40);
    let cfg = |threads| ExperimentConfig {
        hd_dim: 500,
        threads: Some(threads),
        ..Default::default()
    };
    let a = cmd_fit(&source, &cfg(1), None).unwrap().model;
    let b = cmd_fit(&source, &cfg(1), None).unwrap().model;
    let c = cmd_fit(&source, &cfg(4), None).unwrap().model;
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn shuffled_training_order_barely_moves_descriptors() {
    let layers = [(6, 2, 2), (10, 1, 3)];
    let source = common::random_source(9, &layers, 3, 40);
    let n = source.num_samples();
    let mut shuffled = InMemorySource::new(source.layer_shapes());
    let order: Vec<usize> = (0..n).rev().collect();
    for &i in &order {
        shuffled
            .push(source.load(i, &[0, 1]).unwrap(), source.label(i))
            .unwrap();
    }
    let cfg = FitConfig {
        hd_dim: 500,
        ..Default::default()
    };
    let (a, b) = (fit(&source, &cfg).unwrap(), fit(&shuffled, &cfg).unwrap());
    for (ca, cb) in a.classes.iter().zip(&b.classes) {
        assert_eq!(ca.count, cb.count);
        assert!(rel_diff(&ca.descriptor, &cb.descriptor) <= 1e-5);
    }
}

#[test]
fn training_images_are_nearest_their_own_class() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        train_per_class: 40,
        test_per_class: 1,
        ood_samples: 1,
        seed: 12,
        ..Default::default()
    };
    let out = cmd_synth(&spec, tmp.path()).unwrap();
    let train = FeaturePack::open(&out.train).unwrap();
    let model = fit(
        &train,
        &FitConfig {
            hd_dim: 2000,
            ..Default::default()
        },
    )
    .unwrap();
    let ys = encode_source(&train, &model.encoder().unwrap()).unwrap();
    let hits = ys
        .iter()
        .enumerate()
        .filter(|(i, y)| {
            let label = train.label(*i).unwrap();
            let own = angle_degrees(y, &model.classes[label as usize].descriptor).unwrap();
            model
                .classes
                .iter()
                .all(|c| own <= angle_degrees(y, &c.descriptor).unwrap())
        })
        .count();
    assert!(hits * 10 >= ys.len() * 9, "{hits}/{}", ys.len());
}

fn small_model(seed: u64) -> hdff::descriptor::FittedModel {
    let source = common::random_source(seed, &[(8, 2, 2)], 3, 10);
    fit(
        &source,
        &FitConfig {
            hd_dim: 10_000,
            master_seed: seed,
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn ensemble_of_one_preserves_class_geometry() {
    let model = small_model(20);
    let ens = ensemble_descriptor(std::slice::from_ref(&model), &[5]).unwrap();
    let z = random_rademacher(5, model.hd_dim).unwrap();
    let star = &ens.ensemble.as_ref().unwrap().classes;
    for (c, s) in model.classes.iter().zip(star) {
        assert_eq!(s.descriptor, bind(&c.descriptor, &z).unwrap());
    }
    for a in 0..3 {
        for b in 0..3 {
            let plain = cosine(&model.classes[a].descriptor, &model.classes[b].descriptor).unwrap();
            let bound = cosine(&star[a].descriptor, &star[b].descriptor).unwrap();
            assert!((plain - bound).abs() <= 1e-6);
        }
    }
}

#[test]
fn ensemble_of_two_identical_members_is_a_bundle_of_two() {
    let model = small_model(21);
    let ens = ensemble_descriptor(&[model.clone(), model.clone()], &[1, 2]).unwrap();
    let z1 = random_rademacher(1, model.hd_dim).unwrap();
    for (c, s) in model
        .classes
        .iter()
        .zip(&ens.ensemble.as_ref().unwrap().classes)
    {
        let cos = cosine(&s.descriptor, &bind(&c.descriptor, &z1).unwrap()).unwrap();
        assert!(
            (cos - std::f64::consts::FRAC_1_SQRT_2).abs() <= 0.05,
            "{cos}"
        );
        assert_eq!(s.count, 2 * c.count);
    }
}

#[test]
fn ensemble_errors() {
    assert!(matches!(
        ensemble_descriptor(&[], &[]),
        Err(Error::Usage(_))
    ));
    let a = small_model(22);
    let mut b = a.clone();
    b.classes.pop();
    assert!(ensemble_descriptor(&[a.clone(), b], &[1, 2]).is_err());
    assert!(ensemble_descriptor(std::slice::from_ref(&a), &[1, 2]).is_err());
    let ens = ensemble_descriptor(std::slice::from_ref(&a), &[1]).unwrap();
    let y = a.classes[0].descriptor.clone();
    assert!(ensemble_image_descriptor(&[y.clone(), y], &ens).is_err());
    assert!(ensemble_image_descriptor(&[a.classes[0].descriptor.clone()], &a).is_err());
}

#[test]
fn ensemble_image_descriptor_matches_elementwise_reference() {
    let model = small_model(23);
    let ens = ensemble_descriptor(&[model.clone(), model.clone()], &[7, 8]).unwrap();
    let (z1, z2) = (
        random_rademacher(7, model.hd_dim).unwrap(),
        random_rademacher(8, model.hd_dim).unwrap(),
    );

    let mut r = common::rng(24);
    let y = HdVector::new(common::gaussian(&mut r, model.hd_dim)).unwrap();
    let same = ensemble_image_descriptor(&[y.clone(), y.clone()], &ens).unwrap();
    for (k, v) in same.values().iter().enumerate() {
        assert_eq!(*v, y.values()[k] * (z1.values()[k] + z2.values()[k]));
    }

    let y2 = HdVector::new(common::gaussian(&mut r, model.hd_dim)).unwrap();
    let mixed = ensemble_image_descriptor(&[y.clone(), y2.clone()], &ens).unwrap();
    for k in 0..model.hd_dim {
        let expected = y.values()[k] * z1.values()[k] + y2.values()[k] * z2.values()[k];
        assert_eq!(mixed.values()[k], expected);
    }

    let single = ensemble_descriptor(std::slice::from_ref(&model), &[7]).unwrap();
    assert_eq!(
        ensemble_image_descriptor(std::slice::from_ref(&y), &single).unwrap(),
        bind(&y, &z1).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_pooling_commutes_with_centering(
        (h, w, c, values, mean) in (1usize..4, 1usize..4, 1usize..6).prop_flat_map(|(h, w, c)| (
            Just(h), Just(w), Just(c),
            prop::collection::vec(-100.0f32..100.0, h * w * c),
            prop::collection::vec(-100.0f32..100.0, c),
        ))
    ) {
        let m = map(0, h, w, c, values.clone());
        let pooled_first = center(&pool(&m, PoolingMode::Max), &LayerStats { mean: mean.clone(), count: 1 }).unwrap();
        let shifted: Vec<f32> = values.iter().enumerate().map(|(i, v)| v - mean[i % c]).collect();
        let centered_first = pool(&map(0, h, w, c, shifted), PoolingMode::Max);
        prop_assert_eq!(pooled_first.values, centered_first.values);
    }

    #[test]
    fn descriptor_is_linear_in_its_input(
        values in prop::collection::vec(-10.0f32..10.0, 2 * 2 * 5),
        exp in -3i32..4,
    ) {
        let alpha = 2f32.powi(exp);
        let enc = single_layer_encoder(5, 40, vec![0.0; 5]);
        let y = enc.image_descriptor(&[map(0, 2, 2, 5, values.clone())]).unwrap();
        let scaled: Vec<f32> = values.iter().map(|v| v * alpha).collect();
        let ya = enc.image_descriptor(&[map(0, 2, 2, 5, scaled)]).unwrap();
        prop_assert_eq!(ya, y.scaled(alpha));
    }
}
