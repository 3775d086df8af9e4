//! Hat-matrix trackers, stopping criteria and folds against direct
//! computations.

use l2boost::boosting::{boost_fit, BoostConfig, Variant};
use l2boost::data::{exact_mse, standardize, Dataset, SparseCoefficients};
use l2boost::model_selection::{
    aic_bernoulli, aicc, aicc_stop, bernoulli_aic_stop, kfold_split, oracle_stop, select_m, HatBackend, HatState,
    StoppingRule, SubspaceHat,
};
use l2boost::Error;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_data(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal));
    let y: Array1<f64> = (0..n).map(|i| x[[i, 0]] + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    Dataset::new(x, y).unwrap()
}

/// `I − Π (I − ν H_k)` formed by explicit matrix products.
fn explicit_hat(cols: &[Vec<f64>], nu: f64) -> Array2<f64> {
    let n = cols[0].len();
    let mut prod = Array2::<f64>::eye(n);
    for x in cols {
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let h = Array2::from_shape_fn((n, n), |(i, j)| x[i] * x[j] / xx);
        prod = (Array2::<f64>::eye(n) - h * nu).dot(&prod);
    }
    Array2::<f64>::eye(n) - prod
}

#[test]
fn dense_hat_matches_product_form_and_trace() {
    let d = random_data(1, 12, 8);
    let g = standardize(&d).unwrap();
    let path = boost_fit(&g, &BoostConfig { nu: 0.3, m_max: 30, variant: Variant::L2Boost }).unwrap();
    let mut hat = HatState::new(12);
    let mut cols = Vec::new();
    for s in &path.steps {
        hat.update(g.column(s.index), 0.3).unwrap();
        cols.push(g.column(s.index).to_vec());
        let b = explicit_hat(&cols, 0.3);
        let err = (&hat.b - &b).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-10);
        assert!((hat.trace - b.diag().sum()).abs() < 1e-10);
        assert!((hat.trace - hat.exact_trace()).abs() < 1e-10);
    }
}

#[test]
fn subspace_tracker_agrees_with_dense() {
    for seed in 0..10 {
        let n = 10 + seed as usize;
        let d = random_data(seed, n, 25);
        let g = standardize(&d).unwrap();
        let nu = 0.05 + 0.09 * seed as f64;
        let path = boost_fit(&g, &BoostConfig { nu, m_max: 120, variant: Variant::L2Boost }).unwrap();
        let mut dense = HatState::new(n);
        let mut sub = SubspaceHat::new(g.p(), g.y_centered());
        for s in &path.steps {
            dense.update(g.column(s.index), nu).unwrap();
            sub.update(s.index, g.column(s.index), nu).unwrap();
            assert!((dense.trace - sub.trace()).abs() < 1e-9, "seed {seed}");
            let by = dense.apply(g.y_centered());
            for (a, b) in by.iter().zip(sub.fitted()) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((sub.rss() - s.rss).abs() < 1e-8 * path.rss0);
        }
    }
}

#[test]
fn trace_bounded_by_selected_rank() {
    let d = random_data(4, 15, 30);
    let g = standardize(&d).unwrap();
    let path = boost_fit(&g, &BoostConfig { nu: 0.5, m_max: 200, variant: Variant::L2Boost }).unwrap();
    let mut sub = SubspaceHat::new(g.p(), g.y_centered());
    for s in &path.steps {
        sub.update(s.index, g.column(s.index), 0.5).unwrap();
        assert!(sub.trace() <= sub.dim() as f64 + 1e-9);
        assert!(sub.trace() >= -1e-12);
    }
}

#[test]
fn nu_one_repeated_column_is_idempotent() {
    let d = random_data(5, 9, 3);
    let g = standardize(&d).unwrap();
    let mut hat = HatState::new(9);
    hat.update(g.column(1), 1.0).unwrap();
    let once = hat.b.clone();
    hat.update(g.column(1), 1.0).unwrap();
    assert!((&hat.b - &once).iter().all(|v| v.abs() < 1e-12));
    assert!((hat.trace - 1.0).abs() < 1e-12);
}

#[test]
fn zero_column_rejected() {
    let mut hat = HatState::new(3);
    assert_eq!(hat.update(&[0.0, 0.0, 0.0], 0.1).unwrap_err(), Error::ZeroColumn);
}

#[test]
fn aicc_hand_values() {
    // σ̂² = 1, tr = 0, n = 10: 0 + 1 / 0.8.
    assert!((aicc(10.0, 0.0, 10).unwrap() - 1.25).abs() < 1e-15);
    assert!(matches!(aicc(1.0, 8.0, 10), Err(Error::DegenerateDenominator { .. })));
    assert_eq!(aicc(0.0, 1.0, 10).unwrap_err(), Error::ZeroSigma);
}

#[test]
fn aicc_path_matches_recomputation_from_fits() {
    let d = random_data(6, 20, 10);
    let g = standardize(&d).unwrap();
    let mut path = boost_fit(&g, &BoostConfig { m_max: 300, ..Default::default() }).unwrap();
    let res = aicc_stop(&mut path, &g, HatBackend::Dense).unwrap();
    let mut hat = HatState::new(20);
    for (m, s) in path.steps.iter().enumerate() {
        hat.update(g.column(s.index), 0.1).unwrap();
        let theta = path.theta_at(m + 1).unwrap();
        let f = g.fitted_standardized(&theta);
        let rss: f64 = f.iter().zip(d.y()).map(|(a, b)| (a - b).powi(2)).sum();
        let expected = aicc(rss, hat.exact_trace(), 20).ok();
        match (expected, res.criterion_values[m + 1]) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
            (None, None) => {}
            other => panic!("mismatch at m = {}: {other:?}", m + 1),
        }
    }
    let best = res.criterion_values[res.m_hat].unwrap();
    assert!(res.criterion_values.iter().flatten().all(|v| *v >= best));
    assert!(res.criterion_values[..res.m_hat].iter().flatten().all(|v| *v > best));
}

#[test]
fn backends_select_same_iteration() {
    for seed in 10..15 {
        let d = random_data(seed, 25, 40);
        let g = standardize(&d).unwrap();
        let mut a = boost_fit(&g, &BoostConfig { m_max: 400, ..Default::default() }).unwrap();
        let mut b = a.clone();
        let ra = aicc_stop(&mut a, &g, HatBackend::Dense).unwrap();
        let rb = aicc_stop(&mut b, &g, HatBackend::Subspace).unwrap();
        assert_eq!(ra.m_hat, rb.m_hat);
    }
}

#[test]
fn aicc_rejects_fslr_paths() {
    let d = random_data(7, 12, 4);
    let g = standardize(&d).unwrap();
    let mut path = boost_fit(&g, &BoostConfig { variant: Variant::Fslr, m_max: 10, ..Default::default() }).unwrap();
    assert!(matches!(aicc_stop(&mut path, &g, HatBackend::Subspace), Err(Error::InvalidConfig(_))));
}

#[test]
fn bernoulli_aic_coin_flip() {
    // Four fair-coin probabilities: −2·4·log(1/2) = 8 log 2; plus 2·tr.
    let v = aic_bernoulli(&[1.0, 0.0, 1.0, 0.0], &[0.5; 4], 0.0).unwrap();
    assert!((v - 8.0 * 2f64.ln()).abs() < 1e-12);
    let clamped = aic_bernoulli(&[1.0], &[1.7], 0.0).unwrap();
    assert!((clamped + 2.0 * (1.0 - 1e-6f64).ln()).abs() < 1e-12);
}

#[test]
fn bernoulli_stop_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 30;
    let x = Array2::from_shape_simple_fn((n, 6), || rng.sample(StandardNormal));
    let labels: Vec<f64> = (0..n).map(|i| if x[[i, 0]] + 0.5 * rng.sample::<f64, _>(StandardNormal) > 0.0 { 1.0 } else { 0.0 }).collect();
    let d = Dataset::new(x, Array1::from(labels.clone())).unwrap();
    let g = standardize(&d).unwrap();
    let mut path = boost_fit(&g, &BoostConfig { m_max: 200, ..Default::default() }).unwrap();
    let res = bernoulli_aic_stop(&mut path, &g, &labels, 0.0, HatBackend::Subspace).unwrap();
    let mut hat = HatState::new(n);
    for (m, s) in path.steps.iter().enumerate() {
        hat.update(g.column(s.index), 0.1).unwrap();
        let probs = g.fitted_standardized(&path.theta_at(m + 1).unwrap());
        let v = aic_bernoulli(&labels, probs.as_slice().unwrap(), hat.exact_trace()).unwrap();
        assert!((v - res.criterion_values[m + 1].unwrap()).abs() < 1e-8);
    }
}

#[test]
fn oracle_stop_matches_direct_exact_mse() {
    let d = random_data(9, 20, 5);
    let g = standardize(&d).unwrap();
    let path = boost_fit(&g, &BoostConfig { m_max: 1100, ..Default::default() }).unwrap();
    let truth = SparseCoefficients::new(0.3, Array1::from(vec![1.0, 0.0, -0.5, 0.0, 0.0]));
    let v = Array2::from_shape_fn((5, 5), |(i, j)| 0.4f64.powi((i as i32 - j as i32).abs()));
    let res = oracle_stop(&path, &truth, v.view()).unwrap();
    for m in (0..=path.len()).step_by(37).chain([499, 500, 501, 1000, 1001]) {
        let direct = exact_mse(&path.coefficients_at(m).unwrap(), &truth, v.view()).unwrap();
        assert!((res.criterion_values[m].unwrap() - direct).abs() < 1e-10, "m = {m}");
    }
}

#[test]
fn select_m_skips_invalid_and_breaks_ties_low() {
    let r = select_m(&[None, Some(2.0), Some(1.0), None, Some(1.0)], StoppingRule::Aicc).unwrap();
    assert_eq!(r.m_hat, 2);
    assert_eq!(select_m(&[None, None], StoppingRule::Aicc).unwrap_err(), Error::NoValidIteration);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn folds_balanced_and_deterministic(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let f = kfold_split(n, k, seed, None).unwrap();
        prop_assert_eq!(&f, &kfold_split(n, k, seed, None).unwrap());
        let counts: Vec<usize> = (0..k).map(|c| f.iter().filter(|&&x| x == c).count()).collect();
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn stratified_folds_balanced_per_class(labels in proptest::collection::vec(0usize..3, 10..120), k in 2usize..6, seed in any::<u64>()) {
        let n = labels.len();
        let f = kfold_split(n, k, seed, Some(&labels)).unwrap();
        for class in 0..3 {
            let counts: Vec<usize> = (0..k).map(|c| (0..n).filter(|&i| labels[i] == class && f[i] == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn bad_fold_counts() {
    assert_eq!(kfold_split(5, 6, 0, None).unwrap_err(), Error::BadFoldCount { k: 6, n: 5 });
    assert_eq!(kfold_split(5, 1, 0, None).unwrap_err(), Error::BadFoldCount { k: 1, n: 5 });
    let loo = kfold_split(7, 7, 3, None).unwrap();
    let mut sorted = loo.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..7).collect::<Vec<_>>());
}
