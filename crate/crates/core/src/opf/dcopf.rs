use nalgebra::{DMatrix, DVector};

use super::ipm::{self, IpmOptions, NlpProblem};
use super::{classify, dispatch_cost, stats, Injections, OpfError, OpfSolution, OpfStatus, SolverStats};
use crate::netcase::NetworkCase;

/// Lossless linearized OPF with variables `[theta, Pg]` (p.u.), `V = 1`.
struct DcOpf<'a> {
    case: &'a NetworkCase,
    nb: usize,
    ng: usize,
    /// Net demand plus shunt conductance, p.u.
    pd: Vec<f64>,
    gbus: Vec<usize>,
    /// `(from, to, b, injection)`: `P_f = b (theta_f - theta_t) + injection`
    lines: Vec<(usize, usize, f64, f64)>,
    /// `(branch, limit)` in p.u.
    limits: Vec<(usize, f64)>,
    jg: DMatrix<f64>,
    jh: DMatrix<f64>,
}

impl<'a> DcOpf<'a> {
    fn new(case: &'a NetworkCase, pd: Vec<f64>) -> Self {
        let base = case.base_mva();
        let nb = case.n_bus();
        let ng = case.gens().len();
        let gbus = case.gen_bus_indices();
        let lines: Vec<(usize, usize, f64, f64)> = case
            .branch_ends()
            .zip(case.branches())
            .map(|((f, t), br)| {
                let b = 1.0 / (br.x * br.tap);
                (f, t, b, -b * br.shift.to_radians())
            })
            .collect();
        let limits: Vec<(usize, f64)> = case
            .branches()
            .iter()
            .enumerate()
            .filter_map(|(k, br)| {
                let l = match (br.s_max, br.p_max) {
                    (Some(s), Some(p)) => s.min(p),
                    (Some(s), None) => s,
                    (None, Some(p)) => p,
                    (None, None) => return None,
                };
                Some((k, l / base))
            })
            .collect();
        let nx = nb + ng;
        let mut jg = DMatrix::zeros(nb, nx);
        for &(f, t, b, _) in &lines {
            jg[(f, f)] += b;
            jg[(f, t)] -= b;
            jg[(t, t)] += b;
            jg[(t, f)] -= b;
        }
        for (k, &bus) in gbus.iter().enumerate() {
            jg[(bus, nb + k)] = -1.0;
        }
        let mut jh = DMatrix::zeros(2 * limits.len(), nx);
        for (r, &(k, _)) in limits.iter().enumerate() {
            let (f, t, b, _) = lines[k];
            for (row, s) in [(2 * r, 1.0), (2 * r + 1, -1.0)] {
                jh[(row, f)] = s * b;
                jh[(row, t)] = -s * b;
            }
        }
        let pd = pd.iter().zip(case.buses()).map(|(d, bus)| (d + bus.gs) / base).collect();
        Self { case, nb, ng, pd, gbus, lines, limits, jg, jh }
    }

    fn line_flows(&self, theta: &[f64]) -> Vec<f64> {
        self.lines.iter().map(|&(f, t, b, inj)| b * (theta[f] - theta[t]) + inj).collect()
    }
}

impl NlpProblem for DcOpf<'_> {
    fn n_vars(&self) -> usize {
        self.nb + self.ng
    }

    fn n_eq(&self) -> usize {
        self.nb
    }

    fn n_ineq(&self) -> usize {
        2 * self.limits.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let base = self.case.base_mva();
        let mut lb = vec![f64::NEG_INFINITY; self.n_vars()];
        let mut ub = vec![f64::INFINITY; self.n_vars()];
        let s = self.case.slack_index();
        lb[s] = 0.0;
        ub[s] = 0.0;
        for (k, g) in self.case.gens().iter().enumerate() {
            lb[self.nb + k] = g.p_min / base;
            ub[self.nb + k] = g.p_max / base;
        }
        (lb, ub)
    }

    fn x0(&self) -> Vec<f64> {
        let (lb, ub) = self.bounds();
        let mut x = vec![0.0; self.n_vars()];
        for k in self.nb..self.n_vars() {
            x[k] = 0.5 * (lb[k] + ub[k]);
        }
        x
    }

    fn objective(&self, x: &[f64]) -> (f64, DVector<f64>) {
        let base = self.case.base_mva();
        let mut grad = DVector::zeros(self.n_vars());
        let mut f = 0.0;
        for (k, g) in self.case.gens().iter().enumerate() {
            let p = x[self.nb + k] * base;
            f += g.cost.eval(p);
            grad[self.nb + k] = base * (g.cost.b + 2.0 * g.cost.c * p);
        }
        (f, grad)
    }

    fn constraints(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let theta = &x[..self.nb];
        let pf = self.line_flows(theta);
        let mut g = DVector::from_column_slice(&self.pd);
        for (&(f, t, _, _), &p) in self.lines.iter().zip(&pf) {
            g[f] += p;
            g[t] -= p;
        }
        for (k, &bus) in self.gbus.iter().enumerate() {
            g[bus] -= x[self.nb + k];
        }
        let mut h = DVector::zeros(self.n_ineq());
        for (r, &(k, lim)) in self.limits.iter().enumerate() {
            h[2 * r] = pf[k] - lim;
            h[2 * r + 1] = -pf[k] - lim;
        }
        (g, self.jg.clone(), h, self.jh.clone())
    }

    fn lagrangian_hessian(&self, _x: &[f64], _lam: &[f64], _mu: &[f64], cm: f64) -> DMatrix<f64> {
        let base = self.case.base_mva();
        let mut hm = DMatrix::zeros(self.n_vars(), self.n_vars());
        for (k, g) in self.case.gens().iter().enumerate() {
            hm[(self.nb + k, self.nb + k)] = cm * 2.0 * g.cost.c * base * base;
        }
        hm
    }
}

pub fn solve_dcopf(case: &NetworkCase, inj: &Injections) -> Result<OpfSolution, OpfError> {
    solve_dcopf_with(case, inj, &IpmOptions::default())
}

pub fn solve_dcopf_with(case: &NetworkCase, inj: &Injections, opts: &IpmOptions) -> Result<OpfSolution, OpfError> {
    let (pd, _) = inj.net_demand(case)?;
    let prob = DcOpf::new(case, pd);
    let (nb, ng) = (prob.nb, prob.ng);
    let base = case.base_mva();
    let nl = case.branches().len();

    let demand: f64 = prob.pd.iter().sum::<f64>() * base;
    let cap_hi: f64 = case.gens().iter().map(|g| g.p_max).sum();
    let cap_lo: f64 = case.gens().iter().map(|g| g.p_min).sum();
    if demand > cap_hi + 1e-9 || demand < cap_lo - 1e-9 {
        let p_gen: Vec<f64> = case.gens().iter().map(|g| if demand > cap_hi { g.p_max } else { g.p_min }).collect();
        return Ok(OpfSolution {
            cost: dispatch_cost(case, &p_gen, inj.fixed_cost),
            v: vec![1.0; nb],
            theta: vec![0.0; nb],
            p_gen,
            q_gen: vec![0.0; ng],
            branch_p: vec![0.0; nl],
            branch_s: vec![0.0; nl],
            branch_p_to: vec![0.0; nl],
            branch_s_to: vec![0.0; nl],
            status: OpfStatus::Infeasible,
            stats: SolverStats { max_violation: (demand - cap_hi).max(cap_lo - demand) / base, ..Default::default() },
        });
    }

    let r = ipm::solve(&prob, opts);
    let slack_angle = r.x[case.slack_index()];
    let theta: Vec<f64> = r.x[..nb].iter().map(|t| t - slack_angle).collect();
    let p_gen: Vec<f64> = r.x[nb..].iter().map(|p| p * base).collect();
    let pf: Vec<f64> = prob.line_flows(&theta).iter().map(|p| p * base).collect();
    Ok(OpfSolution {
        cost: dispatch_cost(case, &p_gen, inj.fixed_cost),
        v: vec![1.0; nb],
        theta,
        p_gen,
        q_gen: vec![0.0; ng],
        branch_s: pf.iter().map(|p| p.abs()).collect(),
        branch_p_to: pf.iter().map(|p| -p).collect(),
        branch_s_to: pf.iter().map(|p| p.abs()).collect(),
        branch_p: pf,
        status: classify(&r),
        stats: stats(&r),
    })
}
