use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::flows::{branch_flows, BranchFlow, PairTerm};
use super::{Injections, OpfError};
use crate::netcase::{BusType, NetworkCase};

#[derive(Clone, Debug, PartialEq)]
pub struct PfOptions {
    /// Convergence threshold on the largest mismatch, p.u.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 30 }
    }
}

/// Per-generator active power (MW) and voltage magnitude (p.u.) setpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSetpoints {
    pub p_mw: Vec<f64>,
    pub v: Vec<f64>,
}

impl GenSetpoints {
    /// The case's own `pg` / `vg` columns.
    pub fn from_case(case: &NetworkCase) -> Self {
        Self { p_mw: case.gens().iter().map(|g| g.pg).collect(), v: case.gens().iter().map(|g| g.vg).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSolution {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub flows: Vec<BranchFlow>,
    pub iterations: usize,
    /// Largest |P| or |Q| mismatch at the returned point, p.u.
    pub max_mismatch: f64,
    pub status: FlowStatus,
}

/// Bus injections `P_i(V, theta)`, `Q_i(V, theta)` in p.u.
pub(crate) fn bus_injections(case: &NetworkCase, v: &[f64], theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let y = case.admittance();
    let n = case.n_bus();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for &(j, yij) in y.row(i) {
            if j == i {
                p[i] += v[i] * v[i] * yij.re;
                q[i] -= v[i] * v[i] * yij.im;
            } else {
                let t = PairTerm::new(yij.re, yij.im, theta[i], theta[j], v[i], v[j], false);
                p[i] += t.p;
                q[i] += t.q;
            }
        }
    }
    (p, q)
}

/// Newton-Raphson power flow.
///
/// Slack and PV buses (PV with at least one generator) hold the voltage of
/// their first generator; PQ buses take generator output as given with zero
/// reactive power. Reactive output at a regulated bus is split evenly among
/// its generators; the first generator at the slack bus absorbs the balance.
pub fn ac_power_flow(case: &NetworkCase, inj: &Injections, set: &GenSetpoints) -> Result<FlowSolution, OpfError> {
    ac_power_flow_with(case, inj, set, &PfOptions::default())
}

pub fn ac_power_flow_with(
    case: &NetworkCase,
    inj: &Injections,
    set: &GenSetpoints,
    opts: &PfOptions,
) -> Result<FlowSolution, OpfError> {
    let ng = case.gens().len();
    for len in [set.p_mw.len(), set.v.len()] {
        if len != ng {
            return Err(OpfError::DimensionMismatch { expected: ng, got: len });
        }
    }
    let (pd, qd) = inj.net_demand(case)?;
    let n = case.n_bus();
    let base = case.base_mva();
    let gbus = case.gen_bus_indices();
    let slack = case.slack_index();

    let mut has_gen = vec![false; n];
    let mut v = vec![1.0; n];
    let mut first_gen = vec![usize::MAX; n];
    for (k, &b) in gbus.iter().enumerate() {
        if !has_gen[b] {
            v[b] = set.v[k];
            first_gen[b] = k;
        }
        has_gen[b] = true;
    }
    let kind: Vec<BusType> = (0..n)
        .map(|i| match case.buses()[i].bus_type {
            BusType::Slack => BusType::Slack,
            BusType::Pv if has_gen[i] => BusType::Pv,
            _ => BusType::Pq,
        })
        .collect();
    if !has_gen[slack] {
        v[slack] = 1.0;
    }

    let mut p_spec: Vec<f64> = pd.iter().map(|d| -d / base).collect();
    let q_spec: Vec<f64> = qd.iter().map(|d| -d / base).collect();
    for (k, &b) in gbus.iter().enumerate() {
        p_spec[b] += set.p_mw[k] / base;
    }

    let pvpq: Vec<usize> = (0..n).filter(|&i| kind[i] != BusType::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| kind[i] == BusType::Pq).collect();
    let mut ang_pos = vec![usize::MAX; n];
    let mut mag_pos = vec![usize::MAX; n];
    for (k, &i) in pvpq.iter().enumerate() {
        ang_pos[i] = k;
    }
    for (k, &i) in pq.iter().enumerate() {
        mag_pos[i] = pvpq.len() + k;
    }
    let nu = pvpq.len() + pq.len();
    let mut theta = vec![0.0; n];

    let mismatch = |v: &[f64], theta: &[f64]| -> (DVector<f64>, f64) {
        let (p, q) = bus_injections(case, v, theta);
        let mut f = DVector::zeros(nu);
        for (k, &i) in pvpq.iter().enumerate() {
            f[k] = p[i] - p_spec[i];
        }
        for (k, &i) in pq.iter().enumerate() {
            f[pvpq.len() + k] = q[i] - q_spec[i];
        }
        let m = f.amax();
        (f, m)
    };

    let (mut f, mut worst) = mismatch(&v, &theta);
    let mut it = 0;
    while worst >= opts.tol && it < opts.max_iter {
        it += 1;
        let y = case.admittance();
        let mut jac = DMatrix::zeros(nu, nu);
        for i in 0..n {
            let (rp, rq) = (ang_pos[i], mag_pos[i]);
            let row_p = (rp != usize::MAX).then_some(rp);
            let row_q = (rq != usize::MAX).then_some(rq);
            if row_p.is_none() && row_q.is_none() {
                continue;
            }
            for &(j, yij) in y.row(i) {
                if j == i {
                    // d(V_i^2 G_ii)/dV_i, d(-V_i^2 B_ii)/dV_i
                    if mag_pos[i] != usize::MAX {
                        if let Some(r) = row_p {
                            jac[(r, mag_pos[i])] += 2.0 * v[i] * yij.re;
                        }
                        if let Some(r) = row_q {
                            jac[(r, mag_pos[i])] -= 2.0 * v[i] * yij.im;
                        }
                    }
                    continue;
                }
                let t = PairTerm::new(yij.re, yij.im, theta[i], theta[j], v[i], v[j], false);
                let cols = [ang_pos[i], ang_pos[j], mag_pos[i], mag_pos[j]];
                for (l, &c) in cols.iter().enumerate() {
                    if c == usize::MAX {
                        continue;
                    }
                    if let Some(r) = row_p {
                        jac[(r, c)] += t.dp[l];
                    }
                    if let Some(r) = row_q {
                        jac[(r, c)] += t.dq[l];
                    }
                }
            }
        }
        let lu = jac.lu();
        let u: DMatrix<f64> = lu.u();
        let dmax = u.diagonal().amax();
        let dmin = u.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
        if nu > 0 && !(dmin > 1e-12 * dmax.max(1.0)) {
            return Err(OpfError::SingularJacobian);
        }
        let dx = lu.solve(&(-&f)).ok_or(OpfError::SingularJacobian)?;
        for &i in &pvpq {
            theta[i] += dx[ang_pos[i]];
        }
        for &i in &pq {
            v[i] += dx[mag_pos[i]];
        }
        (f, worst) = mismatch(&v, &theta);
        if !worst.is_finite() {
            break;
        }
    }
    let status = if worst < opts.tol { FlowStatus::Converged } else { FlowStatus::MaxIter };

    // generator outputs
    let (p, q) = bus_injections(case, &v, &theta);
    let mut p_gen = set.p_mw.clone();
    let mut q_gen = vec![0.0; ng];
    let mut count = vec![0usize; n];
    for &b in &gbus {
        count[b] += 1;
    }
    if first_gen[slack] != usize::MAX {
        let others: f64 = gbus.iter().enumerate().filter(|&(k, &b)| b == slack && k != first_gen[slack]).map(|(k, _)| set.p_mw[k]).sum();
        p_gen[first_gen[slack]] = (p[slack] * base + pd[slack]) - others;
    }
    for (k, &b) in gbus.iter().enumerate() {
        if kind[b] != BusType::Pq {
            q_gen[k] = (q[b] * base + qd[b]) / count[b] as f64;
        }
    }
    let flows = branch_flows(case, &v, &theta)?;
    Ok(FlowSolution { v, theta, p_gen, q_gen, flows, iterations: it, max_mismatch: worst, status })
}
