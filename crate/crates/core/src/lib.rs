//! Probabilistic optimal power flow under correlated wind uncertainty.
//!
//! The crate is organized bottom-up:
//!
//! * [`netcase`] parses and validates power network cases and builds the bus
//!   admittance matrix.
//! * [`opf`] solves AC power flow, AC optimal power flow (primal-dual interior
//!   point) and the linearized DC optimal power flow.
//! * [`gmm`] evaluates, fits (EM) and samples multivariate Gaussian mixtures.
//! * [`lds`] produces pseudo-random, Latin hypercube and Sobol uniform streams
//!   and measures star discrepancy.
//! * [`sampler`] runs a random-walk Metropolis-Hastings chain whose proposal
//!   and acceptance uniforms come from any [`lds::UniformSource`].
//! * [`wind`] maps normalized wind speeds to farm active/reactive power.
//! * [`popf`] ties everything together: sample, solve per sample, aggregate,
//!   compare against a reference.
//!
//! Per-sample OPF solves run on rayon when the `parallel` feature is enabled
//! (the default); see [`par`].

pub mod gmm;
pub mod lds;
pub mod netcase;
pub mod opf;
pub mod par;
pub mod popf;
pub mod sampler;
pub mod special;
pub mod wind;

pub use gmm::{EmOptions, GaussianMixture};
pub use lds::{StreamKind, StreamSpec, UniformSource, UniformStream};
pub use netcase::{parse_case, NetworkCase};
pub use opf::{Injections, OpfSolution, OpfStatus};
pub use popf::{PopfConfig, PopfReport};
pub use wind::{TurbineModel, WindFarm};
