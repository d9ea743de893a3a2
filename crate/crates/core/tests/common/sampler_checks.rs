#![allow(dead_code)]

use nalgebra::DMatrix;
use popf_core::gmm::GaussianMixture;
use popf_core::lds::{StreamKind, StreamSpec, UniformSource};
use popf_core::sampler::{run_chain, Chain, FnTarget, MhConfig, SupportBox};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn one_d(weights: &[f64], means: &[f64], sds: &[f64]) -> GaussianMixture {
    GaussianMixture::new(
        weights.to_vec(),
        means.iter().map(|&m| vec![m]).collect(),
        sds.iter().map(|&s| DMatrix::from_element(1, 1, s * s)).collect(),
    )
    .unwrap()
}

/// The QMC driver used throughout: shuffled 256-point Sobol blocks with a digital shift.
pub fn qmc(dim: usize, seed: u64) -> StreamSpec {
    StreamSpec::new(StreamKind::Sobol, dim, seed).with_shuffle_block(Some(256)).with_digital_shift(true)
}

pub fn chain_mean(g: &GaussianMixture, n: usize, scale: f64, stream: StreamSpec) -> f64 {
    let mut cfg = MhConfig::new(1, n, stream.seed);
    cfg.proposal_scale = vec![scale];
    cfg.stream = stream;
    run_chain(g, &cfg, vec![0.5]).unwrap().diagnostics.per_dim_mean[0]
}

/// The target truncated to [0,1]: F(x) = (G(x) - G(0)) / (G(1) - G(0)).
pub fn truncated_cdf(w: &[f64], mu: &[f64], sd: &[f64]) -> impl Fn(f64) -> f64 {
    let comps: Vec<(f64, Normal)> = w.iter().zip(mu.iter().zip(sd)).map(|(&w, (&m, &s))| (w, Normal::new(m, s).unwrap())).collect();
    let g = move |x: f64| comps.iter().map(|(w, n)| w * n.cdf(x)).sum::<f64>();
    let (g0, g1) = (g(0.0), g(1.0));
    move |x| (g(x) - g0) / (g1 - g0)
}

pub fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn bimodal_mean_from_srs_chain() {
    // Modes at 0.3 and 0.7 with sd 0.05: the mean of a 50k chain has sd near
    // 0.003 here, so a small share of seeds lands outside 0.005.
    let g = one_d(&[0.5, 0.5], &[0.3, 0.7], &[0.05, 0.05]);
    let errs: Vec<f64> = (5000..5020).map(|s| (chain_mean(&g, 50_000, 0.4, StreamSpec::new(StreamKind::Srs, 2, s)) - 0.5).abs()).collect();
    let within = errs.iter().filter(|&&e| e < 0.005).count();
    assert!(within >= 18, "{within}/20 within 0.005: {errs:?}");
}

pub fn qmc_mean_error_below_srs_at_two_thousand() {
    let g = one_d(&[0.5, 0.5], &[0.3, 0.7], &[0.05, 0.05]);
    let mae = |f: &dyn Fn(u64) -> StreamSpec| (1000..1020).map(|s| (chain_mean(&g, 2000, 0.4, f(s)) - 0.5).abs()).sum::<f64>() / 20.0;
    let srs = mae(&|s| StreamSpec::new(StreamKind::Srs, 2, s));
    let q = mae(&|s| qmc(2, s));
    assert!(q < srs, "qmc {q} vs srs {srs}");
}

pub fn ks_against_analytic_cdf() {
    let (w, mu, sd) = ([0.4, 0.6], [0.35, 0.6], [0.08, 0.1]);
    let g = one_d(&w, &mu, &sd);
    let cdf = truncated_cdf(&w, &mu, &sd);
    for spec in [StreamSpec::new(StreamKind::Srs, 2, 77), qmc(2, 77)] {
        let mut cfg = MhConfig::new(1, 50_000, 77);
        cfg.proposal_scale = vec![0.25];
        cfg.stream = spec.clone();
        let out = run_chain(&g, &cfg, vec![0.5]).unwrap();
        let d = ks(out.samples.column(0).iter().copied().collect(), &cdf);
        assert!(d < 0.015, "{:?}: KS {d}", spec.kind);
    }
}

pub fn three_bin_detailed_balance() {
    let (w, mu, sd) = ([0.4, 0.6], [0.35, 0.6], [0.08, 0.1]);
    let g = one_d(&w, &mu, &sd);
    let cdf = truncated_cdf(&w, &mu, &sd);
    let mut cfg = MhConfig::new(1, 1, 3);
    cfg.proposal_scale = vec![0.3];
    let mut chain = Chain::new(&g, &cfg, vec![0.5]).unwrap();
    let bin = |x: f64| ((x * 3.0) as usize).min(2);
    for _ in 0..1000 {
        chain.step(&g).unwrap();
    }
    let steps = 1_000_000;
    let mut counts = [[0u64; 3]; 3];
    let mut prev = bin(chain.state.x[0]);
    for _ in 0..steps {
        chain.step(&g).unwrap();
        let b = bin(chain.state.x[0]);
        counts[prev][b] += 1;
        prev = b;
    }
    let total = steps as f64;
    for i in 0..3 {
        let pi = counts[i].iter().sum::<u64>() as f64 / total;
        let exact = cdf((i + 1) as f64 / 3.0) - cdf(i as f64 / 3.0);
        assert!((pi - exact).abs() < 0.01, "bin {i}: {pi} vs {exact}");
        for j in i + 1..3 {
            // pi_i T_ij and pi_j T_ji are both estimated by the pair counts.
            let (a, b) = (counts[i][j] as f64 / total, counts[j][i] as f64 / total);
            assert!((a - b).abs() <= 0.03 * a.max(b) + 1e-5, "flow {i}->{j} {a} vs {j}->{i} {b}");
        }
    }
}

pub fn replay_from_checkpoint_is_identical() {
    let g = one_d(&[0.4, 0.6], &[0.35, 0.6], &[0.08, 0.1]);
    for spec in [StreamSpec::new(StreamKind::Srs, 2, 9), StreamSpec::new(StreamKind::Lhs, 2, 9), qmc(2, 9)] {
        let mut cfg = MhConfig::new(1, 1, 9);
        cfg.stream = spec;
        let mut straight = Chain::new(&g, &cfg, vec![0.5]).unwrap();
        let mut a = Chain::new(&g, &cfg, vec![0.5]).unwrap();
        for _ in 0..777 {
            straight.step(&g).unwrap();
            a.step(&g).unwrap();
        }
        let mut b = a.clone();
        for _ in 0..1500 {
            straight.step(&g).unwrap();
            a.step(&g).unwrap();
            b.step(&g).unwrap();
            assert_eq!(a.state.x[0].to_bits(), b.state.x[0].to_bits());
        }
        assert_eq!(a.state, b.state);
        assert_eq!(straight.state, a.state);
    }
}

pub fn uniform_target_rate_equals_in_box_fraction() {
    let target = FnTarget { dim: 2, f: |_: &[f64]| 0.0 };
    let mut cfg = MhConfig::new(2, 5000, 1);
    cfg.proposal_scale = vec![0.3, 0.3];
    cfg.burn_in = 0;
    let mut chain = Chain::new(&target, &cfg, vec![0.5, 0.5]).unwrap();
    let mut inside = 0;
    for _ in 0..5000 {
        let before = chain.state.x.clone();
        let accepted = chain.step(&target).unwrap();
        let moved = chain.state.x != before;
        assert_eq!(accepted, moved);
        inside += accepted as u32;
    }
    assert_eq!(chain.state.accepted, inside as u64);
    assert_eq!(chain.state.proposed, 5000);
    let rate = chain.state.acceptance_rate().unwrap();
    assert!(rate > 0.3 && rate < 1.0, "{rate}");
}

pub fn box_support_is_respected() {
    let g = GaussianMixture::new(vec![1.0], vec![vec![0.5, 0.5]], vec![DMatrix::identity(2, 2)]).unwrap();
    let mut cfg = MhConfig::new(2, 3000, 4);
    cfg.support = SupportBox { lo: vec![0.2, 0.4], hi: vec![0.3, 0.9] };
    cfg.proposal_scale = vec![0.05, 0.05];
    let out = run_chain(&g, &cfg, vec![0.25, 0.5]).unwrap();
    for r in out.samples.row_iter() {
        assert!((0.2..=0.3).contains(&r[0]) && (0.4..=0.9).contains(&r[1]));
    }
}



/// Coordinates consumed = (burn_in + n thin)(D + 1) over a grid of settings.
pub fn stream_accounting_grid() {
    for kind in [StreamKind::Srs, StreamKind::Lhs, StreamKind::Sobol] {
        for d in 1..=3 {
            for (burn, n, thin) in [(0, 0, 1), (0, 5, 1), (17, 0, 3), (100, 250, 2), (1000, 73, 4)] {
                for tune in [false, true] {
                    let g = GaussianMixture::new(vec![1.0], vec![vec![0.5; d]], vec![DMatrix::identity(d, d) * 0.02]).unwrap();
                    let mut cfg = MhConfig::new(d, n, 5);
                    cfg.burn_in = burn;
                    cfg.thin = thin;
                    cfg.auto_tune = tune;
                    cfg.stream = StreamSpec::new(kind, d + 1, 5).with_lhs_block(64, true);
                    let out = run_chain(&g, &cfg, vec![0.5; d]).unwrap();
                    assert_eq!(out.diagnostics.coordinates_consumed, ((burn + n * thin) * (d + 1)) as u64, "{kind} d {d} burn {burn} n {n} thin {thin}");
                    assert_eq!(out.chain.state.proposed, (burn + n * thin) as u64);
                    assert_eq!(out.chain.stream.points_emitted(), (burn + n * thin) as u64);
                }
            }
        }
    }
}
