//! Deterministic power flow and optimal power flow.
//!
//! * [`ac_power_flow`] - Newton-Raphson in polar coordinates.
//! * [`solve_acopf`] - AC-OPF by a primal-dual interior-point method.
//! * [`solve_dcopf`] - lossless linearized OPF on the same solver.
//!
//! Wind injections enter as negative load at their bus.

mod acopf;
mod dcopf;
mod flows;
pub mod ipm;
mod pf;

pub use acopf::{solve_acopf, solve_acopf_with};
pub use dcopf::{solve_dcopf, solve_dcopf_with};
pub use flows::{branch_flows, BranchFlow};
pub use ipm::IpmOptions;
pub use pf::{ac_power_flow, FlowSolution, FlowStatus, GenSetpoints, PfOptions};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netcase::NetworkCase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpfError {
    #[error("unknown bus {0} in injections")]
    UnknownBus(u32),
    #[error("bus {0} is not a declared wind bus")]
    NotWindBus(u32),
    #[error("wind injection {value} MW at bus {bus} outside [{min}, {max}]")]
    WindOutOfBounds { bus: u32, value: f64, min: f64, max: f64 },
    #[error("non-finite injection at bus {0}")]
    NonFinite(u32),
    #[error("singular Jacobian (islanded or degenerate network)")]
    SingularJacobian,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Realized per-sample inputs. Load maps override the case's base load at
/// the listed buses; buses not listed keep their base load.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Injections {
    pub wind_p: BTreeMap<u32, f64>,
    pub wind_q: BTreeMap<u32, f64>,
    pub load_p: BTreeMap<u32, f64>,
    pub load_q: BTreeMap<u32, f64>,
    /// Constant cost added to the objective (sum of per-farm wind costs), $/h.
    #[serde(default)]
    pub fixed_cost: f64,
    /// Optional declared wind buses with `(P_min, P_max)` in MW.
    #[serde(default)]
    pub wind_limits: BTreeMap<u32, (f64, f64)>,
}

impl Injections {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_wind(mut self, bus: u32, p: f64, q: f64) -> Self {
        self.wind_p.insert(bus, p);
        self.wind_q.insert(bus, q);
        self
    }

    pub fn with_load(mut self, bus: u32, p: f64, q: f64) -> Self {
        self.load_p.insert(bus, p);
        self.load_q.insert(bus, q);
        self
    }

    pub fn validate(&self, case: &NetworkCase) -> Result<(), OpfError> {
        for map in [&self.wind_p, &self.wind_q, &self.load_p, &self.load_q] {
            for (&bus, &v) in map {
                case.bus_index(bus).ok_or(OpfError::UnknownBus(bus))?;
                if !v.is_finite() {
                    return Err(OpfError::NonFinite(bus));
                }
            }
        }
        if !self.wind_limits.is_empty() {
            for bus in self.wind_p.keys().chain(self.wind_q.keys()) {
                if !self.wind_limits.contains_key(bus) {
                    return Err(OpfError::NotWindBus(*bus));
                }
            }
            for (&bus, &(min, max)) in &self.wind_limits {
                let value = self.wind_p.get(&bus).copied().unwrap_or(0.0);
                if value < min - 1e-9 || value > max + 1e-9 {
                    return Err(OpfError::WindOutOfBounds { bus, value, min, max });
                }
            }
        }
        Ok(())
    }

    /// Net demand per bus (load minus wind), MW and MVAr, in bus order.
    pub fn net_demand(&self, case: &NetworkCase) -> Result<(Vec<f64>, Vec<f64>), OpfError> {
        self.validate(case)?;
        let mut pd: Vec<f64> = case.buses().iter().map(|b| b.p_load).collect();
        let mut qd: Vec<f64> = case.buses().iter().map(|b| b.q_load).collect();
        for (&bus, &v) in &self.load_p {
            pd[case.bus_index(bus).expect("validated")] = v;
        }
        for (&bus, &v) in &self.load_q {
            qd[case.bus_index(bus).expect("validated")] = v;
        }
        for (&bus, &v) in &self.wind_p {
            pd[case.bus_index(bus).expect("validated")] -= v;
        }
        for (&bus, &v) in &self.wind_q {
            qd[case.bus_index(bus).expect("validated")] -= v;
        }
        Ok((pd, qd))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpfStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Solver bookkeeping attached to every solution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    /// Scaled stationarity condition at exit.
    pub stationarity: f64,
    /// Scaled feasibility condition at exit.
    pub feasibility: f64,
    /// Scaled complementarity condition at exit.
    pub complementarity: f64,
    /// Largest raw constraint violation at exit, p.u.
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    /// $/h, including `Injections::fixed_cost`.
    pub cost: f64,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// MW per generator.
    pub p_gen: Vec<f64>,
    /// MVAr per generator.
    pub q_gen: Vec<f64>,
    /// MW at the from end of each branch.
    pub branch_p: Vec<f64>,
    /// MVA at the from end of each branch.
    pub branch_s: Vec<f64>,
    /// MW at the to end.
    pub branch_p_to: Vec<f64>,
    /// MVA at the to end.
    pub branch_s_to: Vec<f64>,
    pub status: OpfStatus,
    pub stats: SolverStats,
}

impl OpfSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == OpfStatus::Optimal
    }
}

/// `sum_k cost_k(P_k) + fixed_cost` for generator outputs in MW.
pub fn dispatch_cost(case: &NetworkCase, p_gen_mw: &[f64], fixed_cost: f64) -> f64 {
    case.gens().iter().zip(p_gen_mw).map(|(g, &p)| g.cost.eval(p)).sum::<f64>() + fixed_cost
}

/// Shared exit classification: a run that stopped without converging is
/// `infeasible` when it is still far from feasible, otherwise `max_iter`.
fn classify(r: &ipm::IpmResult) -> OpfStatus {
    match r.status {
        ipm::IpmStatus::Converged => OpfStatus::Optimal,
        _ if r.max_violation > 1e-3 => OpfStatus::Infeasible,
        _ => OpfStatus::MaxIter,
    }
}

fn stats(r: &ipm::IpmResult) -> SolverStats {
    SolverStats {
        iterations: r.iterations,
        stationarity: r.gradcond,
        feasibility: r.feascond,
        complementarity: r.compcond,
        max_violation: r.max_violation,
    }
}
