mod common;

use common::{away_from_kinks, max_gradient_error, random_instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfcr::classify::{
    logreg_gradient, logreg_objective, softmax, svm_gradient, svm_objective, train_logreg,
    train_svm, ClassifierKind, LinearModel, LinearParams, TrainConfig,
};

#[test]
fn logreg_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (xs, ys, params) = random_instance(&mut rng, 5, 4, 3);
    let (_, grad) = logreg_gradient(&params, &xs, &ys, 0.01);
    let err = max_gradient_error(&params, &grad, 1e-6, |p| logreg_objective(p, &xs, &ys, 0.01));
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn svm_subgradient_matches_finite_differences_off_kinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (xs, ys, params) = loop {
        let inst = random_instance(&mut rng, 5, 4, 3);
        if away_from_kinks(&inst.2, &inst.0, &inst.1, 1e-3) {
            break inst;
        }
    };
    let (_, grad) = svm_gradient(&params, &xs, &ys, 0.01);
    let err = max_gradient_error(&params, &grad, 1e-6, |p| svm_objective(p, &xs, &ys, 0.01));
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn zero_features_converge_to_class_priors() {
    let ys = [0, 0, 0, 0, 0, 1, 1, 1, 2, 2];
    let xs = vec![vec![0.0; 3]; ys.len()];
    let cfg = TrainConfig {
        batch_size: 0,
        epochs: 500,
        learning_rate: 1.0,
        tolerance: 0.0,
        ..Default::default()
    };
    let model = train_logreg(&xs, &ys, 3, &cfg).unwrap();
    let probs = model.predict(&[0.0; 3]).unwrap().scores;
    for (p, expected) in probs.iter().zip([0.5, 0.3, 0.2]) {
        assert!((p - expected).abs() < 1e-3, "{probs:?}");
    }
}

#[test]
fn full_batch_objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (xs, ys, _) = random_instance(&mut rng, 60, 6, 4);
    for lr in [0.05, 1.0, 50.0] {
        let cfg = TrainConfig {
            batch_size: 0,
            epochs: 200,
            learning_rate: lr,
            tolerance: 0.0,
            ..Default::default()
        };
        let model = train_logreg(&xs, &ys, 4, &cfg).unwrap();
        assert!(!model.training_log.is_empty());
        for pair in model.training_log.windows(2) {
            assert!(pair[1] <= pair[0], "lr {lr}: {} then {}", pair[0], pair[1]);
        }
    }
}

#[test]
fn mini_batch_training_reduces_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (xs, ys, _) = random_instance(&mut rng, 200, 5, 3);
    let model = train_logreg(&xs, &ys, 3, &TrainConfig::default()).unwrap();
    let start = logreg_objective(&LinearParams::zeros(3, 5), &xs, &ys, 1e-4);
    assert!(*model.training_log.last().unwrap() < start);
}

/// Minimum over a grid of one class's objective for 1-D inputs.
fn grid_minimum(xs: &[f64], signs: &[f64], l2: f64) -> f64 {
    let objective = |w: f64, b: f64| {
        let hinge: f64 = xs
            .iter()
            .zip(signs)
            .map(|(x, s)| (1.0 - s * (w * x + b)).max(0.0))
            .sum();
        hinge / xs.len() as f64 + 0.5 * l2 * (w * w + b * b)
    };
    let search = |center: (f64, f64), radius: f64, step: f64| {
        let steps = (2.0 * radius / step).round() as i64;
        let mut best = (f64::INFINITY, center);
        for i in 0..=steps {
            for j in 0..=steps {
                let w = center.0 - radius + i as f64 * step;
                let b = center.1 - radius + j as f64 * step;
                let v = objective(w, b);
                if v < best.0 {
                    best = (v, (w, b));
                }
            }
        }
        best
    };
    let coarse = search((0.0, 0.0), 10.0, 0.05);
    search(coarse.1, 0.1, 0.0005).0
}

#[test]
fn svm_objective_near_grid_search_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let l2 = 0.1;
    let raw: Vec<f64> = (0..20).map(|_| rng.gen_range(-2.0..2.0)).collect();
    // Mostly split by sign, with a few flipped labels so the problem is not separable.
    let ys: Vec<usize> = raw
        .iter()
        .enumerate()
        .map(|(i, &x)| usize::from((x > 0.3) ^ (i % 7 == 0)))
        .collect();
    let xs: Vec<Vec<f64>> = raw.iter().map(|&x| vec![x]).collect();
    let cfg = TrainConfig {
        l2,
        batch_size: 1,
        epochs: 2000,
        seed: 3,
        ..Default::default()
    };
    let model = train_svm(&xs, &ys, 2, &cfg).unwrap();
    let trained = svm_objective(&model.params, &xs, &ys, l2);
    let oracle: f64 = (0..2)
        .map(|k| {
            let signs: Vec<f64> = ys.iter().map(|&y| if y == k { 1.0 } else { -1.0 }).collect();
            grid_minimum(&raw, &signs, l2)
        })
        .sum();
    assert!(trained <= oracle * 1.01, "trained {trained}, grid {oracle}");
    assert!(trained >= oracle * 0.99, "trained {trained} below grid optimum {oracle}");
}

#[test]
fn softmax_is_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let (xs, _, params) = random_instance(&mut rng, 4, 5, 4);
        let shift_w: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let shift_b = rng.gen_range(-3.0..3.0);
        let mut shifted = params.clone();
        for k in 0..4 {
            for (w, s) in shifted.weights[k * 5..(k + 1) * 5].iter_mut().zip(&shift_w) {
                *w += s;
            }
            shifted.biases[k] += shift_b;
        }
        let a = LinearModel::from_params(ClassifierKind::LogReg, params);
        let b = LinearModel::from_params(ClassifierKind::LogReg, shifted);
        for x in &xs {
            let pa = a.predict(x).unwrap();
            let pb = b.predict(x).unwrap();
            assert_eq!(pa.label, pb.label);
            for (u, v) in pa.scores.iter().zip(&pb.scores) {
                assert!((u - v).abs() < 1e-12);
            }
            assert!((pa.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn same_seed_same_model_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (xs, ys, _) = random_instance(&mut rng, 150, 4, 3);
    let cfg = TrainConfig {
        batch_size: 16,
        epochs: 30,
        seed: 77,
        ..Default::default()
    };
    for kind in ClassifierKind::ALL {
        let a = tfcr::classify::train(kind, &xs, &ys, 3, &cfg).unwrap();
        let b = tfcr::classify::train(kind, &xs, &ys, 3, &cfg).unwrap();
        let bits = |m: &LinearModel| -> Vec<u64> {
            m.params
                .weights
                .iter()
                .chain(&m.params.biases)
                .chain(&m.training_log)
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(&a), bits(&b), "{kind}");
    }
}

#[test]
fn softmax_helper_sums_to_one() {
    let p = softmax(&[1000.0, 1000.0, -1000.0]);
    assert!((p[0] - 0.5).abs() < 1e-12 && p[2] == 0.0);
}
