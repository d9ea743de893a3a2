//! Random-walk Metropolis-Hastings driven by an external uniform stream.
//!
//! Every step consumes exactly one `(D+1)`-dimensional point: the first `D`
//! coordinates become the Gaussian increment through the inverse normal CDF,
//! the last one is the acceptance uniform. Proposals outside the support box
//! have zero density and are rejected.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmm::GaussianMixture;
use crate::lds::{LdsError, StreamKind, StreamSpec, UniformSource, UniformStream};
use crate::special::inv_norm_cdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MhError {
    #[error("target density returned NaN at {0:?}")]
    TargetNan(Vec<f64>),
    #[error("initial point has zero density")]
    ZeroDensityStart,
    #[error("no proposals made yet")]
    NoProposals,
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("stream exhausted: {0}")]
    Stream(#[from] LdsError),
}

/// Unnormalized log density. Return `-inf` for zero density.
pub trait Target {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
}

impl Target for GaussianMixture {
    fn dim(&self) -> usize {
        GaussianMixture::dim(self)
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_pdf(x).unwrap_or(f64::NAN)
    }
}

/// Closure-backed target.
pub struct FnTarget<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Target for FnTarget<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Axis-aligned box `[lo, hi]^D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn unit(dim: usize) -> Self {
        Self { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    pub dim: usize,
    /// Random-walk standard deviation per dimension.
    pub proposal_scale: Vec<f64>,
    pub burn_in: usize,
    pub n_samples: usize,
    pub thin: usize,
    pub support: SupportBox,
    /// Adapt the scale during burn-in towards an acceptance rate in [0.2, 0.5].
    #[serde(default)]
    pub auto_tune: bool,
    /// Must have dimension `dim + 1`.
    pub stream: StreamSpec,
}

impl MhConfig {
    /// Defaults: scale 0.1, burn-in 1000, thin 1, unit-cube support, SRS stream.
    pub fn new(dim: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            dim,
            proposal_scale: vec![0.1; dim],
            burn_in: 1000,
            n_samples,
            thin: 1,
            support: SupportBox::unit(dim),
            auto_tune: false,
            stream: StreamSpec::new(StreamKind::Srs, dim + 1, seed),
        }
    }

    pub fn validate(&self) -> Result<(), MhError> {
        let bad = |m: String| Err(MhError::Config(m));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.proposal_scale.len() != self.dim || self.proposal_scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad(format!("proposal_scale needs {} positive entries", self.dim));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if self.stream.dim != self.dim + 1 {
            return bad(format!("stream dimension {} != D + 1 = {}", self.stream.dim, self.dim + 1));
        }
        if self.support.lo.len() != self.dim || self.support.hi.len() != self.dim {
            return bad("support box dimension mismatch".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub log_p: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    pub fn new<T: Target + ?Sized>(target: &T, x0: Vec<f64>) -> Result<Self, MhError> {
        let log_p = target.log_density(&x0);
        if log_p.is_nan() {
            return Err(MhError::TargetNan(x0));
        }
        if log_p == f64::NEG_INFINITY {
            return Err(MhError::ZeroDensityStart);
        }
        Ok(Self { x: x0, log_p, accepted: 0, proposed: 0 })
    }

    pub fn acceptance_rate(&self) -> Result<f64, MhError> {
        acceptance_rate(self)
    }
}

pub fn acceptance_rate(state: &ChainState) -> Result<f64, MhError> {
    if state.proposed == 0 {
        return Err(MhError::NoProposals);
    }
    Ok(state.accepted as f64 / state.proposed as f64)
}

/// One MH transition from a given stream point `u` (length `D + 1`).
/// Returns whether the proposal was accepted.
pub fn mh_step_with_point<T: Target + ?Sized>(
    state: &mut ChainState,
    target: &T,
    scale: &[f64],
    support: &SupportBox,
    u: &[f64],
    proposal: &mut [f64],
) -> Result<bool, MhError> {
    let d = state.x.len();
    for j in 0..d {
        proposal[j] = state.x[j] + scale[j] * inv_norm_cdf(u[j]);
    }
    state.proposed += 1;
    if !support.contains(proposal) {
        return Ok(false);
    }
    let lp = target.log_density(proposal);
    if lp.is_nan() {
        return Err(MhError::TargetNan(proposal.to_vec()));
    }
    let z = u[d];
    // z < min(1, p'/p)
    let accept = lp >= state.log_p || z.ln() < lp - state.log_p;
    if accept {
        state.x.copy_from_slice(proposal);
        state.log_p = lp;
        state.accepted += 1;
    }
    Ok(accept)
}

/// One MH transition drawing its point from `stream`.
pub fn mh_step<T: Target + ?Sized, S: UniformSource + ?Sized>(
    state: &mut ChainState,
    target: &T,
    scale: &[f64],
    support: &SupportBox,
    stream: &mut S,
) -> Result<bool, MhError> {
    let d = state.x.len();
    if stream.dim() != d + 1 {
        return Err(MhError::Config(format!("stream dimension {} != D + 1 = {}", stream.dim(), d + 1)));
    }
    let mut u = vec![0.0; d + 1];
    stream.fill_point(&mut u)?;
    let mut prop = vec![0.0; d];
    mh_step_with_point(state, target, scale, support, &u, &mut prop)
}

/// A running chain: state, stream and the (possibly tuned) proposal scale.
/// Cloning it checkpoints the whole Markov state.
#[derive(Clone, Debug)]
pub struct Chain {
    pub state: ChainState,
    pub stream: UniformStream,
    pub scale: Vec<f64>,
    pub support: SupportBox,
    u: Vec<f64>,
    prop: Vec<f64>,
}

impl Chain {
    pub fn new<T: Target + ?Sized>(target: &T, cfg: &MhConfig, x0: Vec<f64>) -> Result<Self, MhError> {
        cfg.validate()?;
        if target.dim() != cfg.dim || x0.len() != cfg.dim {
            return Err(MhError::Config(format!("target/start dimension must be {}", cfg.dim)));
        }
        if !cfg.support.contains(&x0) {
            return Err(MhError::ZeroDensityStart);
        }
        let d = cfg.dim;
        Ok(Self {
            state: ChainState::new(target, x0)?,
            stream: cfg.stream.build()?,
            scale: cfg.proposal_scale.clone(),
            support: cfg.support.clone(),
            u: vec![0.0; d + 1],
            prop: vec![0.0; d],
        })
    }

    pub fn step<T: Target + ?Sized>(&mut self, target: &T) -> Result<bool, MhError> {
        self.stream.fill_point(&mut self.u)?;
        mh_step_with_point(&mut self.state, target, &self.scale, &self.support, &self.u, &mut self.prop)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Accepted / proposed over the recorded (post-burn-in) phase.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: Option<f64>,
    pub n: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub per_dim_mean: Vec<f64>,
    pub per_dim_std: Vec<f64>,
    pub proposal_scale: Vec<f64>,
    pub stream_kind: StreamKind,
    pub seed: u64,
    pub coordinates_consumed: u64,
}

impl ChainDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// `n_samples x D`, one recorded state per row.
    pub samples: DMatrix<f64>,
    pub diagnostics: ChainDiagnostics,
    pub chain: Chain,
}

const TUNE_WINDOW: u64 = 100;

/// Burn in, then record every `thin`-th state until `n_samples` are kept.
pub fn run_chain<T: Target + ?Sized>(target: &T, cfg: &MhConfig, x0: Vec<f64>) -> Result<ChainOutput, MhError> {
    let mut chain = Chain::new(target, cfg, x0)?;
    let d = cfg.dim;
    let mut window = (0u64, 0u64);
    for _ in 0..cfg.burn_in {
        let acc = chain.step(target)?;
        if cfg.auto_tune {
            window.0 += acc as u64;
            window.1 += 1;
            if window.1 == TUNE_WINDOW {
                let rate = window.0 as f64 / window.1 as f64;
                let f = if rate < 0.2 {
                    0.7
                } else if rate > 0.5 {
                    1.4
                } else {
                    1.0
                };
                for s in chain.scale.iter_mut() {
                    *s *= f;
                }
                window = (0, 0);
            }
        }
    }
    let burn = (chain.state.accepted, chain.state.proposed);
    chain.state.accepted = 0;
    chain.state.proposed = 0;

    let mut samples = DMatrix::zeros(cfg.n_samples, d);
    for i in 0..cfg.n_samples {
        for _ in 0..cfg.thin {
            chain.step(target)?;
        }
        for j in 0..d {
            samples[(i, j)] = chain.state.x[j];
        }
    }
    let n = cfg.n_samples;
    let per_dim_mean: Vec<f64> = (0..d).map(|j| if n > 0 { samples.column(j).mean() } else { f64::NAN }).collect();
    let per_dim_std: Vec<f64> = (0..d)
        .map(|j| if n > 1 { samples.column(j).variance() * n as f64 / (n - 1) as f64 } else { f64::NAN }.sqrt())
        .collect();
    let diagnostics = ChainDiagnostics {
        acceptance_rate: acceptance_rate(&chain.state).unwrap_or(f64::NAN),
        burn_in_acceptance_rate: (burn.1 > 0).then(|| burn.0 as f64 / burn.1 as f64),
        n,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        per_dim_mean,
        per_dim_std,
        proposal_scale: chain.scale.clone(),
        stream_kind: cfg.stream.kind,
        seed: cfg.stream.seed,
        coordinates_consumed: chain.stream.coordinates_consumed(),
    };
    chain.state.accepted += burn.0;
    chain.state.proposed += burn.1;
    Ok(ChainOutput { samples, diagnostics, chain })
}
