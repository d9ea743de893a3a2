//! Probabilistic OPF driver.
//!
//! A run draws `n_samples` wind-speed vectors per farm group (Metropolis-
//! Hastings on the group's mixture, or direct draws), perturbs bus loads,
//! turns everything into [`Injections`], solves one OPF per sample and
//! summarizes each tracked [`OutputVariable`].
//!
//! Samples are materialized sequentially before any solve, solves run through
//! [`crate::par`], and all reductions walk the results in sample order, so a
//! report depends only on its configuration.

mod compare;
mod loads;
mod output;

pub use compare::{compare_methods, compare_replicates, make_reference, ComparisonRow, ComparisonTable, ReferenceEntry, ReferenceStats};
pub use loads::{loaded_buses, sample_loads, LoadSample};
pub use output::{error_index, mean_std, Histogram, OutputKind, OutputVariable};

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmm::GaussianMixture;
use crate::lds::{derive_seed, LdsError, StreamKind, StreamSpec, UniformStream};
use crate::netcase::NetworkCase;
use crate::opf::{self, Injections, IpmOptions, OpfError, OpfSolution, OpfStatus};
use crate::par::{self, Execution};
use crate::sampler::{run_chain, ChainDiagnostics, MhConfig, MhError, SupportBox};
use crate::wind::{WindError, WindFarm};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const LOAD_TAG: u64 = 0x4c4f_4144;
const GROUP_TAG: u64 = 0x4752_5550;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopfError {
    #[error("{infeasible} of {n} samples failed (fraction {frac:.4} > allowed {allowed})")]
    TooManyInfeasible { infeasible: usize, n: usize, frac: f64, allowed: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown output variable '{0}'")]
    UnknownOutput(String),
    #[error("error index undefined for a zero reference")]
    ZeroReference,
    #[error("no reference statistics available")]
    MissingReference,
    #[error("reference JSON: {0}")]
    ReferenceJson(String),
    #[error("sampler: {0}")]
    Sampler(#[from] MhError),
    #[error("stream: {0}")]
    Stream(#[from] LdsError),
    #[error("wind model: {0}")]
    Wind(#[from] WindError),
    #[error("solver setup: {0}")]
    Solver(#[from] OpfError),
    #[error("output: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Ac,
    #[default]
    Dc,
}

impl std::str::FromStr for Solver {
    type Err = PopfError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ac" => Ok(Solver::Ac),
            "dc" => Ok(Solver::Dc),
            other => Err(PopfError::Config(format!("unknown solver '{other}'"))),
        }
    }
}

/// How wind-speed samples are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// MH driven by pseudo-random uniforms.
    Srs,
    /// MH driven by Latin hypercube blocks.
    Lhs,
    /// MH driven by (shuffled, shifted) Sobol points.
    Qmc,
    /// Independent ancestral draws from the mixture, rejected outside the unit box.
    Direct,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Srs => "srs",
            Method::Lhs => "lhs",
            Method::Qmc => "qmc",
            Method::Direct => "direct",
        }
    }

    pub fn stream_kind(self) -> Option<StreamKind> {
        match self {
            Method::Srs => Some(StreamKind::Srs),
            Method::Lhs => Some(StreamKind::Lhs),
            Method::Qmc => Some(StreamKind::Sobol),
            Method::Direct => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = PopfError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srs" | "srs-mcmc" => Ok(Method::Srs),
            "lhs" | "lhs-mcmc" => Ok(Method::Lhs),
            "qmc" | "sobol" | "qmc-mcmc" => Ok(Method::Qmc),
            "direct" | "iid" => Ok(Method::Direct),
            other => Err(PopfError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Stream options applied when a group's chain is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamOptions {
    /// Sobol block shuffling for MH; `None` uses the raw sequence order.
    pub sobol_shuffle_block: Option<usize>,
    pub sobol_digital_shift: bool,
    pub lhs_block: usize,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self { sobol_shuffle_block: Some(256), sobol_digital_shift: true, lhs_block: 1024 }
    }
}

/// Farms sharing one joint wind-speed mixture.
#[derive(Clone, Debug)]
pub struct FarmGroup {
    pub name: String,
    pub model: GaussianMixture,
    /// One farm per mixture dimension, in column order.
    pub farms: Vec<WindFarm>,
    pub proposal_scale: Vec<f64>,
    pub burn_in: usize,
    pub thin: usize,
    pub auto_tune: bool,
    /// MH start; `None` uses the mixture mean clamped into the unit box.
    pub x0: Option<Vec<f64>>,
}

impl FarmGroup {
    pub fn new(name: impl Into<String>, model: GaussianMixture, farms: Vec<WindFarm>) -> Self {
        let d = model.dim();
        Self {
            name: name.into(),
            model,
            farms,
            proposal_scale: vec![0.1; d],
            burn_in: 1000,
            thin: 1,
            auto_tune: false,
            x0: None,
        }
    }

    fn start(&self) -> Vec<f64> {
        self.x0
            .clone()
            .unwrap_or_else(|| self.model.mixture_mean().iter().map(|m| m.clamp(0.01, 0.99)).collect())
    }

    /// The MH configuration used for this group.
    pub fn mh_config(&self, kind: StreamKind, n: usize, seed: u64, opts: &StreamOptions) -> MhConfig {
        let d = self.model.dim();
        let mut stream = StreamSpec::new(kind, d + 1, seed);
        match kind {
            StreamKind::Sobol => {
                stream = stream.with_shuffle_block(opts.sobol_shuffle_block).with_digital_shift(opts.sobol_digital_shift)
            }
            StreamKind::Lhs => stream = stream.with_lhs_block(opts.lhs_block, true),
            StreamKind::Srs => {}
        }
        MhConfig {
            dim: d,
            proposal_scale: self.proposal_scale.clone(),
            burn_in: self.burn_in,
            n_samples: n,
            thin: self.thin,
            support: SupportBox::unit(d),
            auto_tune: self.auto_tune,
            stream,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PopfConfig {
    pub case: NetworkCase,
    pub groups: Vec<FarmGroup>,
    pub method: Method,
    pub stream: StreamOptions,
    /// Load standard deviation as a fraction of base load.
    pub load_sigma_frac: f64,
    /// Draw load uniforms from a stream of the wind method's kind instead of
    /// an independent pseudo-random one.
    pub loads_share_stream: bool,
    pub n_samples: usize,
    pub seed: u64,
    pub solver: Solver,
    pub ipm: IpmOptions,
    pub max_infeasible_frac: f64,
    /// Tracked outputs; empty tracks every variable of the case.
    pub outputs: Vec<OutputVariable>,
    pub histogram_bins: Option<usize>,
    pub reference: Option<ReferenceStats>,
    /// Keep per-sample values for a CSV dump.
    pub record_samples: bool,
    pub execution: Execution,
    pub threads: Option<usize>,
}

impl PopfConfig {
    pub fn new(case: NetworkCase, groups: Vec<FarmGroup>, n_samples: usize, seed: u64) -> Self {
        Self {
            case,
            groups,
            method: Method::Qmc,
            stream: StreamOptions::default(),
            load_sigma_frac: 0.05,
            loads_share_stream: false,
            n_samples,
            seed,
            solver: Solver::Dc,
            ipm: IpmOptions::default(),
            max_infeasible_frac: 0.05,
            outputs: Vec::new(),
            histogram_bins: None,
            reference: None,
            record_samples: false,
            execution: Execution::Parallel,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), PopfError> {
        let bad = |m: String| Err(PopfError::Config(m));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if !(self.load_sigma_frac >= 0.0) || !self.load_sigma_frac.is_finite() {
            return bad(format!("load_sigma_frac {} must be a finite non-negative fraction", self.load_sigma_frac));
        }
        if !(0.0..=1.0).contains(&self.max_infeasible_frac) {
            return bad(format!("max_infeasible_frac {} outside [0, 1]", self.max_infeasible_frac));
        }
        for g in &self.groups {
            if g.model.dim() != g.farms.len() {
                return bad(format!(
                    "group '{}': mixture dimension {} but {} farms",
                    g.name,
                    g.model.dim(),
                    g.farms.len()
                ));
            }
            for f in &g.farms {
                f.validate()?;
                self.case.require_bus(f.bus).map_err(|_| PopfError::Config(format!("group '{}': farm bus {} not in case", g.name, f.bus)))?;
            }
        }
        for v in &self.outputs {
            v.check(&self.case)?;
        }
        Ok(())
    }

    pub fn tracked_outputs(&self) -> Vec<OutputVariable> {
        if self.outputs.is_empty() {
            OutputVariable::all(&self.case)
        } else {
            self.outputs.clone()
        }
    }
}

/// One tracked variable in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub name: String,
    pub kind: OutputKind,
    pub index: u32,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub eps_mu_pct: Option<f64>,
    pub eps_sigma_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<Histogram>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub optimal: usize,
    pub infeasible: usize,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDiagnostics {
    pub group: String,
    /// `None` for direct sampling.
    pub chain: Option<ChainDiagnostics>,
    /// Direct sampling: draws rejected for leaving the unit box.
    pub rejected_draws: Option<u64>,
}

/// Wall-clock breakdown, kept out of the report JSON.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub sampling_s: f64,
    pub solve_s: f64,
    pub summarize_s: f64,
}

/// Per-sample outputs for the CSV dump; `None` marks a failed solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    pub names: Vec<String>,
    pub rows: Vec<(OpfStatus, Option<Vec<f64>>)>,
}

impl SampleTable {
    /// Header `sample_id,status,<names...>`; failed samples leave values empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), PopfError> {
        let io = |e: csv::Error| PopfError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["sample_id".to_string(), "status".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header).map_err(io)?;
        for (i, (status, vals)) in self.rows.iter().enumerate() {
            let mut rec = vec![i.to_string(), status_name(*status).to_string()];
            match vals {
                Some(v) => rec.extend(v.iter().map(|x| format!("{x:e}"))),
                None => rec.extend(std::iter::repeat_n(String::new(), self.names.len())),
            }
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| PopfError::Io(e.to_string()))
    }
}

fn status_name(s: OpfStatus) -> &'static str {
    match s {
        OpfStatus::Optimal => "optimal",
        OpfStatus::Infeasible => "infeasible",
        OpfStatus::MaxIter => "max_iter",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopfReport {
    pub schema_version: u32,
    pub method: Method,
    pub solver: Solver,
    pub seed: u64,
    pub n_samples: usize,
    /// Successful solves; `sample_count + infeasible_count = n_samples`.
    pub sample_count: usize,
    /// Samples without an optimal solution (infeasible or iteration limit).
    pub infeasible_count: usize,
    pub status_counts: StatusCounts,
    pub load_sigma_frac: f64,
    pub reference: Option<String>,
    pub variables: Vec<VariableSummary>,
    pub sampler: Vec<GroupDiagnostics>,
    #[serde(skip)]
    pub timings: Timings,
    #[serde(skip)]
    pub samples: Option<SampleTable>,
}

impl PopfReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSummary> {
        self.variables.iter().find(|v| v.name == name)
    }
}

/// Wind-speed samples (normalized, `n x D`) for one group.
pub fn sample_group(
    group: &FarmGroup,
    method: Method,
    n: usize,
    seed: u64,
    opts: &StreamOptions,
) -> Result<(DMatrix<f64>, GroupDiagnostics), PopfError> {
    match method.stream_kind() {
        Some(kind) => {
            let cfg = group.mh_config(kind, n, seed, opts);
            let out = run_chain(&group.model, &cfg, group.start())?;
            Ok((out.samples, GroupDiagnostics { group: group.name.clone(), chain: Some(out.diagnostics), rejected_draws: None }))
        }
        None => {
            let (samples, rejected) = sample_direct_in_box(&group.model, n, seed);
            Ok((samples, GroupDiagnostics { group: group.name.clone(), chain: None, rejected_draws: Some(rejected) }))
        }
    }
}

/// Independent draws from the mixture conditioned on `[0,1]^D`.
pub fn sample_direct_in_box(model: &GaussianMixture, n: usize, seed: u64) -> (DMatrix<f64>, u64) {
    let d = model.dim();
    let mut out = DMatrix::zeros(n, d);
    let mut filled = 0;
    let mut rejected = 0u64;
    let mut batch = 0u64;
    while filled < n {
        let want = (n - filled).max(64);
        let draws = model.sample_direct(want, derive_seed(seed, batch));
        batch += 1;
        for r in 0..draws.nrows() {
            if filled == n {
                break;
            }
            let row = draws.row(r);
            if row.iter().all(|v| (0.0..=1.0).contains(v)) {
                out.set_row(filled, &row);
                filled += 1;
            } else {
                rejected += 1;
            }
        }
    }
    (out, rejected)
}

/// Per-sample injections plus sampler diagnostics for `cfg`.
pub fn build_injections(cfg: &PopfConfig) -> Result<(Vec<Injections>, Vec<GroupDiagnostics>), PopfError> {
    cfg.validate()?;
    let n = cfg.n_samples;
    let mut inj = vec![Injections::new(); n];
    let mut diags = Vec::with_capacity(cfg.groups.len());
    for (g, group) in cfg.groups.iter().enumerate() {
        let seed = derive_seed(cfg.seed, GROUP_TAG + g as u64);
        let (u, diag) = sample_group(group, cfg.method, n, seed, &cfg.stream)?;
        for (i, target) in inj.iter_mut().enumerate() {
            for (j, farm) in group.farms.iter().enumerate() {
                let (p, q) = farm.output_normalized(u[(i, j)])?;
                *target.wind_p.entry(farm.bus).or_insert(0.0) += p;
                *target.wind_q.entry(farm.bus).or_insert(0.0) += q;
            }
        }
        diags.push(diag);
    }
    let buses = loaded_buses(&cfg.case);
    if !buses.is_empty() {
        let kind = match (cfg.loads_share_stream, cfg.method.stream_kind()) {
            (true, Some(k)) => k,
            _ => StreamKind::Srs,
        };
        let mut spec = StreamSpec::new(kind, buses.len(), derive_seed(cfg.seed, LOAD_TAG));
        if kind == StreamKind::Sobol {
            spec = spec.with_digital_shift(cfg.stream.sobol_digital_shift);
        }
        let mut stream: UniformStream = spec.build()?;
        let loads = sample_loads(&cfg.case, n, cfg.load_sigma_frac, &mut stream)?;
        for (target, sample) in inj.iter_mut().zip(loads) {
            for (bus, p, q) in sample {
                target.load_p.insert(bus, p);
                target.load_q.insert(bus, q);
            }
        }
    }
    Ok((inj, diags))
}

fn solve_one(cfg: &PopfConfig, inj: &Injections) -> Result<OpfSolution, OpfError> {
    match cfg.solver {
        Solver::Ac => opf::solve_acopf_with(&cfg.case, inj, &cfg.ipm),
        Solver::Dc => opf::solve_dcopf_with(&cfg.case, inj, &cfg.ipm),
    }
}

/// Solve a given sample list and summarize. `run_popf` is
/// [`build_injections`] followed by this.
pub fn solve_samples(
    cfg: &PopfConfig,
    samples: &[Injections],
    sampler: Vec<GroupDiagnostics>,
) -> Result<PopfReport, PopfError> {
    if samples.is_empty() {
        return Err(PopfError::Config("empty sample list".into()));
    }
    for v in &cfg.outputs {
        v.check(&cfg.case)?;
    }
    if let Some(first) = samples.first() {
        first.validate(&cfg.case)?;
    }
    let t0 = Instant::now();
    let vars = cfg.tracked_outputs();
    let results: Vec<Result<(OpfStatus, Option<Vec<f64>>), OpfError>> = par::with_threads(cfg.threads, || {
        par::map_ordered(samples, cfg.execution, |_, inj| {
            let sol = solve_one(cfg, inj)?;
            let vals = sol.is_optimal().then(|| vars.iter().map(|v| v.extract(&cfg.case, &sol)).collect());
            Ok((sol.status, vals))
        })
    });
    let solve_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let n = samples.len();
    let mut rows = Vec::with_capacity(n);
    let mut counts = StatusCounts::default();
    for r in results {
        let (status, vals) = r?;
        match status {
            OpfStatus::Optimal => counts.optimal += 1,
            OpfStatus::Infeasible => counts.infeasible += 1,
            OpfStatus::MaxIter => counts.max_iter += 1,
        }
        rows.push((status, vals));
    }
    let failed = n - counts.optimal;
    let frac = failed as f64 / n as f64;
    if frac > cfg.max_infeasible_frac || counts.optimal == 0 {
        return Err(PopfError::TooManyInfeasible { infeasible: failed, n, frac, allowed: cfg.max_infeasible_frac });
    }

    let ok: Vec<&Vec<f64>> = rows.iter().filter_map(|(_, v)| v.as_ref()).collect();
    let mut column = Vec::with_capacity(ok.len());
    let mut variables = Vec::with_capacity(vars.len());
    for (j, var) in vars.iter().enumerate() {
        column.clear();
        column.extend(ok.iter().map(|r| r[j]));
        let (mean, std) = mean_std(&column);
        let name = var.name();
        let (eps_mu_pct, eps_sigma_pct) = match cfg.reference.as_ref().and_then(|r| r.get(&name)) {
            Some(e) => (error_index(e.mean, mean).ok(), error_index(e.std, std).ok()),
            None => (None, None),
        };
        variables.push(VariableSummary {
            name,
            kind: var.kind,
            index: var.index,
            mean,
            std,
            count: column.len(),
            eps_mu_pct,
            eps_sigma_pct,
            histogram: cfg.histogram_bins.and_then(|b| Histogram::build(&column, b)),
        });
    }
    let samples = cfg.record_samples.then(|| SampleTable { names: vars.iter().map(|v| v.name()).collect(), rows });
    Ok(PopfReport {
        schema_version: REPORT_SCHEMA_VERSION,
        method: cfg.method,
        solver: cfg.solver,
        seed: cfg.seed,
        n_samples: n,
        sample_count: counts.optimal,
        infeasible_count: failed,
        status_counts: counts,
        load_sigma_frac: cfg.load_sigma_frac,
        reference: cfg.reference.as_ref().map(|r| r.label()),
        variables,
        sampler,
        timings: Timings { sampling_s: 0.0, solve_s, summarize_s: t1.elapsed().as_secs_f64() },
        samples,
    })
}

/// Sample, solve `n_samples` OPFs and summarize.
pub fn run_popf(cfg: &PopfConfig) -> Result<PopfReport, PopfError> {
    let t0 = Instant::now();
    let (inj, diags) = build_injections(cfg)?;
    let sampling_s = t0.elapsed().as_secs_f64();
    let mut report = solve_samples(cfg, &inj, diags)?;
    report.timings.sampling_s = sampling_s;
    Ok(report)
}
