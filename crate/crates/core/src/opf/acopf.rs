use nalgebra::{DMatrix, DVector};

use super::flows::{branch_flows, PairTerm};
use super::ipm::{self, IpmOptions, NlpProblem};
use super::pf::bus_injections;
use super::{classify, dispatch_cost, stats, Injections, OpfError, OpfSolution};
use crate::netcase::NetworkCase;

#[derive(Clone, Copy)]
enum Limit {
    /// |S|^2 - s_max^2 at one end
    Apparent { branch: usize, to_end: bool, s2: f64 },
    /// sign * P - p_max at one end
    Active { branch: usize, to_end: bool, sign: f64, p_max: f64 },
    /// V_from - V_to - dv_max
    Voltage { branch: usize, dv_max: f64 },
}

/// Polar AC-OPF with variables `[theta, V, Pg, Qg]` (p.u.).
struct AcOpf<'a> {
    case: &'a NetworkCase,
    nb: usize,
    ng: usize,
    pd: Vec<f64>,
    qd: Vec<f64>,
    gbus: Vec<usize>,
    limits: Vec<Limit>,
}

/// P and Q leaving one branch end, with local derivatives in
/// `(theta_self, theta_other, V_self, V_other)` order.
struct EndFlow {
    vars: [usize; 4],
    t: PairTerm,
}

impl<'a> AcOpf<'a> {
    fn new(case: &'a NetworkCase, inj: &Injections) -> Result<Self, OpfError> {
        let (pd, qd) = inj.net_demand(case)?;
        let base = case.base_mva();
        let mut limits = Vec::new();
        for (k, br) in case.branches().iter().enumerate() {
            if let Some(s) = br.s_max {
                let s2 = (s / base).powi(2);
                limits.push(Limit::Apparent { branch: k, to_end: false, s2 });
                limits.push(Limit::Apparent { branch: k, to_end: true, s2 });
            }
            if let Some(p) = br.p_max {
                for to_end in [false, true] {
                    for sign in [1.0, -1.0] {
                        limits.push(Limit::Active { branch: k, to_end, sign, p_max: p / base });
                    }
                }
            }
            if let Some(dv) = br.dv_max {
                limits.push(Limit::Voltage { branch: k, dv_max: dv });
            }
        }
        Ok(Self {
            case,
            nb: case.n_bus(),
            ng: case.gens().len(),
            pd: pd.iter().map(|d| d / base).collect(),
            qd: qd.iter().map(|d| d / base).collect(),
            gbus: case.gen_bus_indices(),
            limits,
        })
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let nb = self.nb;
        (&x[..nb], &x[nb..2 * nb], &x[2 * nb..2 * nb + self.ng])
    }

    fn end_flow(&self, x: &[f64], branch: usize, to_end: bool, hessian: bool) -> EndFlow {
        let (th, v, _) = self.split(x);
        let b = &self.case.admittance().branches()[branch];
        let (a, c, yself, ycross) = if to_end { (b.to, b.from, b.ytt, b.ytf) } else { (b.from, b.to, b.yff, b.yft) };
        let mut t = PairTerm::new(ycross.re, ycross.im, th[a], th[c], v[a], v[c], hessian);
        let va = v[a];
        t.p += va * va * yself.re;
        t.q -= va * va * yself.im;
        t.dp[2] += 2.0 * va * yself.re;
        t.dq[2] -= 2.0 * va * yself.im;
        t.hp[2][2] += 2.0 * yself.re;
        t.hq[2][2] -= 2.0 * yself.im;
        EndFlow { vars: [a, c, self.nb + a, self.nb + c], t }
    }
}

impl NlpProblem for AcOpf<'_> {
    fn n_vars(&self) -> usize {
        2 * self.nb + 2 * self.ng
    }

    fn n_eq(&self) -> usize {
        2 * self.nb
    }

    fn n_ineq(&self) -> usize {
        self.limits.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let base = self.case.base_mva();
        let mut lb = vec![f64::NEG_INFINITY; self.n_vars()];
        let mut ub = vec![f64::INFINITY; self.n_vars()];
        let s = self.case.slack_index();
        lb[s] = 0.0;
        ub[s] = 0.0;
        for (i, b) in self.case.buses().iter().enumerate() {
            lb[self.nb + i] = b.v_min;
            ub[self.nb + i] = b.v_max;
        }
        for (k, g) in self.case.gens().iter().enumerate() {
            lb[2 * self.nb + k] = g.p_min / base;
            ub[2 * self.nb + k] = g.p_max / base;
            lb[2 * self.nb + self.ng + k] = g.q_min / base;
            ub[2 * self.nb + self.ng + k] = g.q_max / base;
        }
        (lb, ub)
    }

    fn x0(&self) -> Vec<f64> {
        let (lb, ub) = self.bounds();
        let mut x = vec![0.0; self.n_vars()];
        for i in 0..self.nb {
            x[self.nb + i] = 1.0f64.clamp(lb[self.nb + i], ub[self.nb + i]);
        }
        for k in 2 * self.nb..self.n_vars() {
            x[k] = if lb[k].is_finite() && ub[k].is_finite() { 0.5 * (lb[k] + ub[k]) } else { 0.0f64.clamp(lb[k], ub[k]) };
        }
        x
    }

    fn objective(&self, x: &[f64]) -> (f64, DVector<f64>) {
        let base = self.case.base_mva();
        let (_, _, pg) = self.split(x);
        let mut grad = DVector::zeros(self.n_vars());
        let mut f = 0.0;
        for (k, g) in self.case.gens().iter().enumerate() {
            let p = pg[k] * base;
            f += g.cost.eval(p);
            grad[2 * self.nb + k] = base * (g.cost.b + 2.0 * g.cost.c * p);
        }
        (f, grad)
    }

    fn constraints(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let (nb, ng) = (self.nb, self.ng);
        let nx = self.n_vars();
        let (th, v, _) = self.split(x);
        let (p, q) = bus_injections(self.case, v, th);
        let mut g = DVector::zeros(2 * nb);
        for i in 0..nb {
            g[i] = p[i] + self.pd[i];
            g[nb + i] = q[i] + self.qd[i];
        }
        let mut jg = DMatrix::zeros(2 * nb, nx);
        for (k, &b) in self.gbus.iter().enumerate() {
            g[b] -= x[2 * nb + k];
            g[nb + b] -= x[2 * nb + ng + k];
            jg[(b, 2 * nb + k)] = -1.0;
            jg[(nb + b, 2 * nb + ng + k)] = -1.0;
        }
        let y = self.case.admittance();
        for i in 0..nb {
            for &(j, yij) in y.row(i) {
                if j == i {
                    jg[(i, nb + i)] += 2.0 * v[i] * yij.re;
                    jg[(nb + i, nb + i)] -= 2.0 * v[i] * yij.im;
                    continue;
                }
                let t = PairTerm::new(yij.re, yij.im, th[i], th[j], v[i], v[j], false);
                for (l, c) in [i, j, nb + i, nb + j].into_iter().enumerate() {
                    jg[(i, c)] += t.dp[l];
                    jg[(nb + i, c)] += t.dq[l];
                }
            }
        }

        let nh = self.limits.len();
        let mut h = DVector::zeros(nh);
        let mut jh = DMatrix::zeros(nh, nx);
        for (r, lim) in self.limits.iter().enumerate() {
            match *lim {
                Limit::Apparent { branch, to_end, s2 } => {
                    let e = self.end_flow(x, branch, to_end, false);
                    h[r] = e.t.p * e.t.p + e.t.q * e.t.q - s2;
                    for l in 0..4 {
                        jh[(r, e.vars[l])] += 2.0 * (e.t.p * e.t.dp[l] + e.t.q * e.t.dq[l]);
                    }
                }
                Limit::Active { branch, to_end, sign, p_max } => {
                    let e = self.end_flow(x, branch, to_end, false);
                    h[r] = sign * e.t.p - p_max;
                    for l in 0..4 {
                        jh[(r, e.vars[l])] += sign * e.t.dp[l];
                    }
                }
                Limit::Voltage { branch, dv_max } => {
                    let b = &y.branches()[branch];
                    h[r] = v[b.from] - v[b.to] - dv_max;
                    jh[(r, nb + b.from)] = 1.0;
                    jh[(r, nb + b.to)] = -1.0;
                }
            }
        }
        (g, jg, h, jh)
    }

    fn lagrangian_hessian(&self, x: &[f64], lam: &[f64], mu: &[f64], cm: f64) -> DMatrix<f64> {
        let (nb, nx) = (self.nb, self.n_vars());
        let base = self.case.base_mva();
        let (th, v, _) = self.split(x);
        let mut hm = DMatrix::zeros(nx, nx);
        for (k, g) in self.case.gens().iter().enumerate() {
            hm[(2 * nb + k, 2 * nb + k)] = cm * 2.0 * g.cost.c * base * base;
        }
        let y = self.case.admittance();
        for i in 0..nb {
            let (lp, lq) = (lam[i], lam[nb + i]);
            for &(j, yij) in y.row(i) {
                if j == i {
                    hm[(nb + i, nb + i)] += 2.0 * (lp * yij.re - lq * yij.im);
                    continue;
                }
                let t = PairTerm::new(yij.re, yij.im, th[i], th[j], v[i], v[j], true);
                let idx = [i, j, nb + i, nb + j];
                for a in 0..4 {
                    for b in 0..4 {
                        hm[(idx[a], idx[b])] += lp * t.hp[a][b] + lq * t.hq[a][b];
                    }
                }
            }
        }
        for (r, lim) in self.limits.iter().enumerate() {
            let m = mu[r];
            match *lim {
                Limit::Apparent { branch, to_end, .. } => {
                    let e = self.end_flow(x, branch, to_end, true);
                    let t = &e.t;
                    for a in 0..4 {
                        for b in 0..4 {
                            let val = 2.0
                                * (t.dp[a] * t.dp[b] + t.p * t.hp[a][b] + t.dq[a] * t.dq[b] + t.q * t.hq[a][b]);
                            hm[(e.vars[a], e.vars[b])] += m * val;
                        }
                    }
                }
                Limit::Active { branch, to_end, sign, .. } => {
                    let e = self.end_flow(x, branch, to_end, true);
                    for a in 0..4 {
                        for b in 0..4 {
                            hm[(e.vars[a], e.vars[b])] += m * sign * e.t.hp[a][b];
                        }
                    }
                }
                Limit::Voltage { .. } => {}
            }
        }
        hm
    }
}

/// AC-OPF with default interior-point options.
pub fn solve_acopf(case: &NetworkCase, inj: &Injections) -> Result<OpfSolution, OpfError> {
    solve_acopf_with(case, inj, &IpmOptions::default())
}

pub fn solve_acopf_with(case: &NetworkCase, inj: &Injections, opts: &IpmOptions) -> Result<OpfSolution, OpfError> {
    let prob = AcOpf::new(case, inj)?;
    let r = ipm::solve(&prob, opts);
    let (nb, ng) = (prob.nb, prob.ng);
    let base = case.base_mva();
    let slack_angle = r.x[case.slack_index()];
    let theta: Vec<f64> = r.x[..nb].iter().map(|t| t - slack_angle).collect();
    let v = r.x[nb..2 * nb].to_vec();
    let p_gen: Vec<f64> = r.x[2 * nb..2 * nb + ng].iter().map(|p| p * base).collect();
    let q_gen: Vec<f64> = r.x[2 * nb + ng..].iter().map(|q| q * base).collect();
    let flows = branch_flows(case, &v, &theta)?;
    Ok(OpfSolution {
        cost: dispatch_cost(case, &p_gen, inj.fixed_cost),
        v,
        theta,
        p_gen,
        q_gen,
        branch_p: flows.iter().map(|f| f.p_from).collect(),
        branch_s: flows.iter().map(|f| f.s_from).collect(),
        branch_p_to: flows.iter().map(|f| f.p_to).collect(),
        branch_s_to: flows.iter().map(|f| f.s_to).collect(),
        status: classify(&r),
        stats: stats(&r),
    })
}
