use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Component, GaussianMixture, GmmError};
use crate::lds::{derive_seed, CounterRng};
use crate::par::{map_indices, Execution};
use crate::special::log_sum_exp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    #[default]
    KmeansPp,
    RandomRestart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub reg_eps: f64,
    pub init: InitMethod,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-7,
            reg_eps: 1e-6,
            init: InitMethod::KmeansPp,
            restarts: 1,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl EmOptions {
    fn validate(&self) -> Result<(), GmmError> {
        if !(self.rel_tol > 0.0) {
            return Err(GmmError::InvalidOption(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.reg_eps >= 0.0) || !self.reg_eps.is_finite() {
            return Err(GmmError::InvalidOption(format!("reg_eps must be non-negative, got {}", self.reg_eps)));
        }
        if self.max_iter == 0 {
            return Err(GmmError::InvalidOption("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of [`fit_em`].
#[derive(Clone, Debug)]
pub struct EmFit {
    pub model: GaussianMixture,
    /// Objective after each E-step. With `reg_eps > 0` this is the
    /// log-likelihood minus `reg_eps * n / 2 * sum_m tr(Sigma_m^-1)`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Restart that produced `model`.
    pub restart: usize,
}

impl EmFit {
    pub fn final_objective(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

/// Fit an `m`-component mixture to the rows of `data` by EM.
///
/// The M-step covariance is `S_m + reg_eps * (n / N_m) I`, which is the
/// maximizer of the penalized objective recorded in the trace, so the trace
/// is non-decreasing and every covariance has eigenvalues `>= reg_eps`.
pub fn fit_em(data: &DMatrix<f64>, m: usize, opts: &EmOptions) -> Result<EmFit, GmmError> {
    opts.validate()?;
    let (n, d) = data.shape();
    if m == 0 {
        return Err(GmmError::NoComponents);
    }
    if n < m {
        return Err(GmmError::TooFewPoints { n, m });
    }
    if d == 0 {
        return Err(GmmError::DimensionMismatch { expected: 1, got: 0 });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(GmmError::NonFinite("data"));
    }
    if opts.reg_eps == 0.0 {
        let first = data.row(0);
        if m > 1 && data.row_iter().all(|r| r == first) {
            return Err(GmmError::Degenerate("all points identical and reg_eps = 0".into()));
        }
    }
    let restarts = opts.restarts.max(1);
    let fits = map_indices(restarts, opts.execution, |r| run_once(data, m, opts, derive_seed(opts.seed, r as u64), r));
    let mut best: Option<EmFit> = None;
    let mut first_err = None;
    for f in fits {
        match f {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.final_objective() > b.final_objective()) {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one restart ran"))
}

struct Params {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
}

fn pooled_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows() as f64;
    let mean = data.row_mean();
    let centered = DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| data[(i, j)] - mean[j]);
    (centered.transpose() * &centered) / n
}

fn init_params(data: &DMatrix<f64>, m: usize, opts: &EmOptions, rng: &mut CounterRng) -> Params {
    let n = data.nrows();
    let mut centers: Vec<usize> = Vec::with_capacity(m);
    match opts.init {
        InitMethod::RandomRestart => {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            centers.extend_from_slice(&idx[..m]);
        }
        InitMethod::KmeansPp => {
            centers.push(rng.below(n as u64) as usize);
            let mut d2: Vec<f64> = vec![f64::INFINITY; n];
            while centers.len() < m {
                let c = data.row(*centers.last().unwrap());
                for (i, di) in d2.iter_mut().enumerate() {
                    let dist = (data.row(i) - c).norm_squared();
                    if dist < *di {
                        *di = dist;
                    }
                }
                let total: f64 = d2.iter().sum();
                let next = if total > 0.0 {
                    let u = rng.next_f64() * total;
                    let mut acc = 0.0;
                    let mut pick = n - 1;
                    for (i, &di) in d2.iter().enumerate() {
                        acc += di;
                        if u < acc {
                            pick = i;
                            break;
                        }
                    }
                    pick
                } else {
                    rng.below(n as u64) as usize
                };
                centers.push(next);
            }
        }
    }
    let d = data.ncols();
    let cov = pooled_covariance(data) + DMatrix::identity(d, d) * opts.reg_eps;
    Params {
        weights: vec![1.0 / m as f64; m],
        means: centers.iter().map(|&i| data.row(i).transpose()).collect(),
        covs: vec![cov; m],
    }
}

fn build(params: &Params) -> Result<Vec<Component>, GmmError> {
    params
        .weights
        .iter()
        .zip(&params.means)
        .zip(&params.covs)
        .enumerate()
        .map(|(k, ((&w, mu), cov))| GaussianMixture::component(k, w, mu.clone(), cov.clone()))
        .collect()
}

fn penalty(comps: &[Component], n: usize, reg_eps: f64) -> f64 {
    if reg_eps == 0.0 {
        return 0.0;
    }
    let mut tr = 0.0;
    for c in comps {
        // tr(Sigma^-1) = ||L^-1||_F^2
        let linv = c.chol_l.clone().solve_lower_triangular(&DMatrix::identity(c.mean.len(), c.mean.len()));
        tr += linv.map_or(f64::INFINITY, |l| l.norm_squared());
    }
    0.5 * reg_eps * n as f64 * tr
}

fn run_once(data: &DMatrix<f64>, m: usize, opts: &EmOptions, seed: u64, restart: usize) -> Result<EmFit, GmmError> {
    let (n, d) = data.shape();
    let mut rng = CounterRng::new(seed);
    let mut params = init_params(data, m, opts, &mut rng);
    let mut trace = Vec::new();
    let mut resp = DMatrix::<f64>::zeros(n, m);
    let mut lp = vec![0.0; m];
    let mut x = vec![0.0; d];
    let mut converged = false;
    let mut iterations = 0;
    let mut comps = build(&params).map_err(degenerate)?;

    loop {
        // E-step
        let model = GaussianMixture { dim: d, comps: comps.clone(), columns: None };
        let mut ll = 0.0;
        for i in 0..n {
            for j in 0..d {
                x[j] = data[(i, j)];
            }
            model.joint_log_densities(&x, &mut lp);
            let lse = log_sum_exp(&lp);
            ll += lse;
            for k in 0..m {
                resp[(i, k)] = (lp[k] - lse).exp();
            }
        }
        let obj = ll - penalty(&comps, n, opts.reg_eps);
        if !obj.is_finite() {
            return Err(GmmError::Degenerate("log-likelihood is not finite".into()));
        }
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            trace.push(obj);
            if ((obj - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < opts.rel_tol {
                converged = true;
            }
        } else {
            trace.push(obj);
        }
        if converged || iterations >= opts.max_iter {
            return Ok(EmFit { model, trace, iterations, converged, restart });
        }

        // M-step
        for k in 0..m {
            let nk: f64 = resp.column(k).sum();
            if nk <= 1e-12 * n as f64 {
                // empty component: keep its parameters, give it a floor weight
                params.weights[k] = 1e-12;
                continue;
            }
            let mut mu = DVector::zeros(d);
            for i in 0..n {
                let r = resp[(i, k)];
                for j in 0..d {
                    mu[j] += r * data[(i, j)];
                }
            }
            mu /= nk;
            let mut s = DMatrix::zeros(d, d);
            for i in 0..n {
                let r = resp[(i, k)];
                for a in 0..d {
                    let da = data[(i, a)] - mu[a];
                    for b in 0..=a {
                        s[(a, b)] += r * da * (data[(i, b)] - mu[b]);
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    s[(b, a)] = s[(a, b)];
                }
            }
            s /= nk;
            let ridge = opts.reg_eps * n as f64 / nk;
            for a in 0..d {
                s[(a, a)] += ridge;
            }
            params.weights[k] = nk;
            params.means[k] = mu;
            params.covs[k] = s;
        }
        let total: f64 = params.weights.iter().sum();
        for w in params.weights.iter_mut() {
            *w /= total;
        }
        comps = build(&params).map_err(degenerate)?;
        iterations += 1;
    }
}

fn degenerate(e: GmmError) -> GmmError {
    match e {
        GmmError::NotPositiveDefinite(k) => {
            GmmError::Degenerate(format!("covariance of component {k} became singular; use reg_eps > 0"))
        }
        other => other,
    }
}

/// Bayesian information criterion `-2 ln L + p ln n` with
/// `p = (M - 1) + M D + M D (D + 1) / 2`.
pub fn bic(model: &GaussianMixture, data: &DMatrix<f64>) -> Result<f64, GmmError> {
    let (n, d) = data.shape();
    let m = model.n_components();
    let p = (m - 1) + m * d + m * d * (d + 1) / 2;
    Ok(-2.0 * model.log_likelihood(data)? + p as f64 * (n as f64).ln())
}

/// Fit every `M` in `ms` and report `(M, BIC, fit)`; the lowest BIC wins.
pub fn bic_sweep(
    data: &DMatrix<f64>,
    ms: impl IntoIterator<Item = usize>,
    opts: &EmOptions,
) -> Result<Vec<(usize, f64, EmFit)>, GmmError> {
    let mut out = Vec::new();
    for m in ms {
        if m > data.nrows() {
            break;
        }
        let fit = fit_em(data, m, opts)?;
        let b = bic(&fit.model, data)?;
        out.push((m, b, fit));
    }
    Ok(out)
}
