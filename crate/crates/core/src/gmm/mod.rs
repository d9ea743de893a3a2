//! Multivariate Gaussian mixtures: evaluation, EM fitting, direct sampling
//! and a lossless JSON form.

mod em;
mod io;

pub use em::{bic, bic_sweep, fit_em, EmFit, EmOptions, InitMethod};
pub use io::{ColumnBounds, MODEL_SCHEMA_VERSION};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::lds::CounterRng;
use crate::special::{inv_norm_cdf, log_sum_exp, UNIFORM_FLOOR};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
/// Density floor applied before taking logs in [`GaussianMixture::log_likelihood`].
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmmError {
    #[error("weights must sum to 1 (sum = {0})")]
    WeightsSum(f64),
    #[error("weight {index} is {value}; every weight must be positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("mixture needs at least one component")]
    NoComponents,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance of component {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("covariance of component {0} is not positive definite")]
    NotPositiveDefinite(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("need at least as many points as components (n = {n}, M = {m})")]
    TooFewPoints { n: usize, m: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid EM option: {0}")]
    InvalidOption(String),
    #[error("model JSON: {0}")]
    Json(String),
}

#[derive(Clone, Debug)]
struct Component {
    weight: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    /// log c_m - 0.5 (D ln 2pi + ln det Sigma_m)
    log_norm: f64,
}

/// `sum_m c_m N(x | mu_m, Sigma_m)` over `D` dimensions.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    dim: usize,
    comps: Vec<Component>,
    columns: Option<Vec<ColumnBounds>>,
}

impl PartialEq for GaussianMixture {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.columns == other.columns
            && self.comps.len() == other.comps.len()
            && self
                .comps
                .iter()
                .zip(&other.comps)
                .all(|(a, b)| a.weight == b.weight && a.mean == b.mean && a.cov == b.cov)
    }
}

fn factor(index: usize, cov: &DMatrix<f64>) -> Result<DMatrix<f64>, GmmError> {
    let chol = Cholesky::<f64, Dyn>::new(cov.clone()).ok_or(GmmError::NotPositiveDefinite(index))?;
    let l = chol.l();
    if l.diagonal().iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(GmmError::NotPositiveDefinite(index));
    }
    Ok(l)
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self, GmmError> {
        let m = weights.len();
        if m == 0 {
            return Err(GmmError::NoComponents);
        }
        if means.len() != m || covariances.len() != m {
            return Err(GmmError::DimensionMismatch { expected: m, got: means.len().min(covariances.len()) });
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(GmmError::DimensionMismatch { expected: 1, got: 0 });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(GmmError::NonFinite("weights"));
        }
        for (index, &value) in weights.iter().enumerate() {
            if value <= 0.0 {
                return Err(GmmError::NonPositiveWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GmmError::WeightsSum(sum));
        }
        let mut comps = Vec::with_capacity(m);
        for (k, ((w, mu), cov)) in weights.into_iter().zip(means).zip(covariances).enumerate() {
            if mu.len() != dim {
                return Err(GmmError::DimensionMismatch { expected: dim, got: mu.len() });
            }
            if cov.nrows() != dim || cov.ncols() != dim {
                return Err(GmmError::DimensionMismatch { expected: dim, got: cov.nrows() });
            }
            if mu.iter().any(|x| !x.is_finite()) {
                return Err(GmmError::NonFinite("means"));
            }
            if cov.iter().any(|x| !x.is_finite()) {
                return Err(GmmError::NonFinite("covariances"));
            }
            let scale = cov.amax().max(f64::MIN_POSITIVE);
            for i in 0..dim {
                for j in 0..i {
                    if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                        return Err(GmmError::NotSymmetric(k));
                    }
                }
            }
            comps.push(Self::component(k, w, DVector::from_vec(mu), cov)?);
        }
        Ok(Self { dim, comps, columns: None })
    }

    fn component(k: usize, weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Component, GmmError> {
        let chol_l = factor(k, &cov)?;
        let log_det = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let d = mean.len() as f64;
        let log_norm = weight.ln() - 0.5 * (d * LN_2PI + log_det);
        Ok(Component { weight, mean, cov, chol_l, log_norm })
    }

    /// Attach per-column names and normalization bounds.
    pub fn with_columns(mut self, columns: Vec<ColumnBounds>) -> Result<Self, GmmError> {
        if columns.len() != self.dim {
            return Err(GmmError::DimensionMismatch { expected: self.dim, got: columns.len() });
        }
        self.columns = Some(columns);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.weight).collect()
    }

    pub fn mean(&self, k: usize) -> &DVector<f64> {
        &self.comps[k].mean
    }

    pub fn covariance(&self, k: usize) -> &DMatrix<f64> {
        &self.comps[k].cov
    }

    pub fn columns(&self) -> Option<&[ColumnBounds]> {
        self.columns.as_deref()
    }

    /// Overall mean `sum_m c_m mu_m`.
    pub fn mixture_mean(&self) -> DVector<f64> {
        self.comps.iter().fold(DVector::zeros(self.dim), |acc, c| acc + &c.mean * c.weight)
    }

    fn component_log_density(c: &Component, x: &[f64], work: &mut [f64]) -> f64 {
        let d = x.len();
        // forward substitution L y = x - mu
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - c.mean[i];
            for j in 0..i {
                s -= c.chol_l[(i, j)] * work[j];
            }
            work[i] = s / c.chol_l[(i, i)];
            maha += work[i] * work[i];
        }
        c.log_norm - 0.5 * maha
    }

    fn check_dim(&self, got: usize) -> Result<(), GmmError> {
        if got != self.dim {
            return Err(GmmError::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }

    /// Per-component `log c_m + log N(x | mu_m, Sigma_m)`, written into `out`.
    pub(crate) fn joint_log_densities(&self, x: &[f64], out: &mut [f64]) {
        let mut work = vec![0.0; self.dim];
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = Self::component_log_density(c, x, &mut work);
        }
    }

    /// Log density; `-inf` only if every component underflows.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64, GmmError> {
        self.check_dim(x.len())?;
        let mut lp = vec![0.0; self.comps.len()];
        self.joint_log_densities(x, &mut lp);
        Ok(log_sum_exp(&lp))
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64, GmmError> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// `sum_i log max(pdf(x_i), 1e-300)` over the rows of `data`.
    pub fn log_likelihood(&self, data: &DMatrix<f64>) -> Result<f64, GmmError> {
        self.check_dim(data.ncols())?;
        let floor = DENSITY_FLOOR.ln();
        let mut x = vec![0.0; self.dim];
        let mut lp = vec![0.0; self.comps.len()];
        let mut total = 0.0;
        for i in 0..data.nrows() {
            for j in 0..self.dim {
                x[j] = data[(i, j)];
            }
            self.joint_log_densities(&x, &mut lp);
            total += log_sum_exp(&lp).max(floor);
        }
        Ok(total)
    }

    /// Ancestral sampling: categorical draw on the weights, then
    /// `mu + L z` with `z` from inverse-CDF normals. Rows are samples.
    pub fn sample_direct(&self, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = CounterRng::new(seed);
        let mut out = DMatrix::zeros(n, self.dim);
        let cum: Vec<f64> = self
            .comps
            .iter()
            .scan(0.0, |s, c| {
                *s += c.weight;
                Some(*s)
            })
            .collect();
        let mut z = vec![0.0; self.dim];
        for i in 0..n {
            let u = rng.next_f64() * cum[cum.len() - 1];
            let k = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1);
            let c = &self.comps[k];
            for zj in z.iter_mut() {
                *zj = inv_norm_cdf(rng.next_f64().max(UNIFORM_FLOOR));
            }
            for r in 0..self.dim {
                let mut v = c.mean[r];
                for s in 0..=r {
                    v += c.chol_l[(r, s)] * z[s];
                }
                out[(i, r)] = v;
            }
        }
        out
    }

    /// Same mixture with components reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { dim: self.dim, comps: perm.iter().map(|&k| self.comps[k].clone()).collect(), columns: self.columns.clone() }
    }
}
