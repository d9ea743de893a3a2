#![allow(dead_code)]

use nalgebra::DMatrix;
use popf_core::gmm::{fit_em, EmOptions, GaussianMixture, GmmError, InitMethod};
use popf_core::lds::CounterRng;
use statrs::distribution::{Continuous, Normal};

pub fn one_d(weights: &[f64], means: &[f64], vars: &[f64]) -> GaussianMixture {
    GaussianMixture::new(
        weights.to_vec(),
        means.iter().map(|&m| vec![m]).collect(),
        vars.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
    )
    .unwrap()
}

/// Random mixture with well-conditioned covariances built as A A^T + 0.05 I.
pub fn random_model(rng: &mut CounterRng, m: usize, d: usize) -> GaussianMixture {
    let raw: Vec<f64> = (0..m).map(|_| 0.2 + rng.next_f64()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let means = (0..m).map(|_| (0..d).map(|_| 4.0 * rng.next_f64()).collect()).collect();
    let covs = (0..m)
        .map(|_| {
            let a = DMatrix::from_fn(d, d, |_, _| rng.next_f64() - 0.5);
            &a * a.transpose() + DMatrix::identity(d, d) * 0.05
        })
        .collect();
    GaussianMixture::new(weights, means, covs).unwrap()
}

pub fn two_component_density_at_origin() {
    let g = one_d(&[0.5, 0.5], &[-1.0, 1.0], &[1.0, 1.0]);
    let by_hand = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let n1 = Normal::new(-1.0, 1.0).unwrap();
    let n2 = Normal::new(1.0, 1.0).unwrap();
    let summed = 0.5 * n1.pdf(0.0) + 0.5 * n2.pdf(0.0);
    let p = g.pdf(&[0.0]).unwrap();
    assert!((p - 0.241971).abs() < 1e-6);
    assert!((p - by_hand).abs() < 1e-15);
    assert!((p - summed).abs() < 1e-15);
}

pub fn weights_must_sum_to_one() {
    let e = GaussianMixture::new(vec![0.6, 0.6], vec![vec![0.0], vec![1.0]], vec![DMatrix::identity(1, 1); 2]).unwrap_err();
    assert!(e.to_string().contains("weights must sum to 1"), "{e}");
}

pub fn log_likelihood_examples() {
    let g = one_d(&[1.0], &[0.0], &[1.0]);
    let one = DMatrix::from_element(1, 1, 0.0);
    assert!((g.log_likelihood(&one).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-12);

    let model = random_model(&mut CounterRng::new(3), 3, 2);
    let data = model.sample_direct(300, 4);
    let twice = DMatrix::from_fn(600, 2, |i, j| data[(i % 300, j)]);
    let l1 = model.log_likelihood(&data).unwrap();
    assert!((model.log_likelihood(&twice).unwrap() - 2.0 * l1).abs() <= 1e-9 * l1.abs());
}

pub fn true_model_beats_shifted_model() {
    let mut rng = CounterRng::new(17);
    for trial in 0..10 {
        let model = random_model(&mut rng, 2, 2);
        let data = model.sample_direct(500, trial);
        let means = (0..2).map(|k| model.mean(k).iter().map(|v| v + 5.0).collect()).collect();
        let covs = (0..2).map(|k| model.covariance(k).clone()).collect();
        let shifted = GaussianMixture::new(model.weights(), means, covs).unwrap();
        assert!(model.log_likelihood(&data).unwrap() > shifted.log_likelihood(&data).unwrap());
    }
}

pub fn far_outliers_stay_finite() {
    let g = one_d(&[1.0], &[0.0], &[1e-4]);
    let v = g.log_likelihood(&DMatrix::from_element(1, 1, 1e3)).unwrap();
    assert!(v.is_finite());
}

/// Composite Simpson rule over `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn one_d_pdf_integrates_to_one() {
    let mut rng = CounterRng::new(5);
    for _ in 0..50 {
        let m = 1 + rng.below(5) as usize;
        let raw: Vec<f64> = (0..m).map(|_| 0.1 + rng.next_f64()).collect();
        let t: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / t).collect();
        let mu: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
        let sd: Vec<f64> = (0..m).map(|_| 0.02 + 0.2 * rng.next_f64()).collect();
        let g = one_d(&w, &mu, &sd.iter().map(|s| s * s).collect::<Vec<_>>());
        let smax = sd.iter().cloned().fold(0.0, f64::max);
        let lo = mu.iter().cloned().fold(f64::INFINITY, f64::min) - 8.0 * smax;
        let hi = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 8.0 * smax;
        let q = simpson(|x| g.pdf(&[x]).unwrap(), lo, hi, 20_000);
        assert!((q - 1.0).abs() < 1e-6, "integral {q}");
    }
}

pub fn em_trace_non_decreasing_on_random_datasets() {
    let mut rng = CounterRng::new(2024);
    for case in 0..100u64 {
        let d = 1 + (case % 3) as usize;
        let m_true = 1 + (case % 4) as usize;
        let model = random_model(&mut rng, m_true, d);
        let n = 60 + rng.below(400) as usize;
        let data = model.sample_direct(n, case);
        let opts = EmOptions {
            reg_eps: if case % 2 == 0 { 1e-6 } else { 0.0 },
            init: if case % 3 == 0 { InitMethod::RandomRestart } else { InitMethod::KmeansPp },
            seed: case,
            max_iter: 200,
            ..EmOptions::default()
        };
        let fit = match fit_em(&data, 1 + (case % 5) as usize, &opts) {
            Ok(f) => f,
            Err(GmmError::Degenerate(_)) if opts.reg_eps == 0.0 => continue,
            Err(e) => panic!("case {case}: {e}"),
        };
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "case {case}: {} -> {}", w[0], w[1]);
        }
    }
}

pub fn recovers_one_d_gaussian() {
    let truth = one_d(&[1.0], &[0.5], &[0.01]);
    let data = truth.sample_direct(5000, 8);
    let fit = fit_em(&data, 1, &EmOptions::default()).unwrap();
    let mu = fit.model.mean(0)[0];
    let var = fit.model.covariance(0)[(0, 0)];
    assert!((mu - 0.5).abs() < 0.005, "mean {mu}");
    assert!((var - 0.01).abs() < 0.2 * 0.01, "variance {var}");
}

pub fn recovers_correlation_in_two_d_mixture() {
    let rho = 0.8;
    let truth = GaussianMixture::new(
        vec![0.5, 0.5],
        vec![vec![0.25, 0.25], vec![0.75, 0.75]],
        vec![
            DMatrix::from_row_slice(2, 2, &[0.004, rho * 0.004, rho * 0.004, 0.004]),
            DMatrix::from_row_slice(2, 2, &[0.003, 0.0, 0.0, 0.005]),
        ],
    )
    .unwrap();
    let data = truth.sample_direct(5000, 9);
    let fit = fit_em(&data, 2, &EmOptions { restarts: 3, ..EmOptions::default() }).unwrap();
    let k = (0..2)
        .min_by(|&a, &b| {
            let da = (fit.model.mean(a) - truth.mean(0)).norm();
            let db = (fit.model.mean(b) - truth.mean(0)).norm();
            da.total_cmp(&db)
        })
        .unwrap();
    let c = fit.model.covariance(k);
    let ratio = c[(0, 1)] / c[(0, 0)];
    assert!((ratio - rho).abs() < 0.1, "ratio {ratio}");
}

pub fn more_components_than_points_is_an_error() {
    let data = DMatrix::from_row_slice(3, 1, &[0.1, 0.2, 0.3]);
    assert!(matches!(fit_em(&data, 4, &EmOptions::default()), Err(GmmError::TooFewPoints { n: 3, m: 4 })));
}

pub fn identical_data_needs_regularization() {
    let data = DMatrix::from_element(20, 2, 0.4);
    let opts = EmOptions { reg_eps: 0.0, ..EmOptions::default() };
    assert!(matches!(fit_em(&data, 2, &opts), Err(GmmError::Degenerate(_))));
    assert!(fit_em(&data, 2, &EmOptions::default()).is_ok());
}

pub fn sample_direct_examples() {
    let g = GaussianMixture::new(vec![1.0], vec![vec![0.3, 0.6]], vec![DMatrix::identity(2, 2) * 1e-12]).unwrap();
    let s = g.sample_direct(1000, 1);
    assert!(s.row_iter().all(|r| (r[0] - 0.3).abs() < 1e-5 && (r[1] - 0.6).abs() < 1e-5));
    assert_eq!(g.sample_direct(0, 1).nrows(), 0);

    // c_1 = 0.3 at n = 1e5: the binomial sd is 0.00145, so [0.29, 0.31] is ~7 sd wide.
    let two = one_d(&[0.3, 0.7], &[-10.0, 10.0], &[1.0, 1.0]);
    let s = two.sample_direct(100_000, 2);
    let f = s.column(0).iter().filter(|&&x| x < 0.0).count() as f64 / 1e5;
    assert!((0.29..=0.31).contains(&f), "{f}");
}

pub fn json_round_trip_of_fitted_model() {
    let truth = random_model(&mut CounterRng::new(44), 3, 3);
    let fit = fit_em(&truth.sample_direct(800, 1), 3, &EmOptions::default()).unwrap();
    let back = GaussianMixture::from_json(&fit.model.to_json()).unwrap();
    let x = [1.0, 2.0, 0.5];
    assert_eq!(back.log_pdf(&x).unwrap().to_bits(), fit.model.log_pdf(&x).unwrap().to_bits());
}


