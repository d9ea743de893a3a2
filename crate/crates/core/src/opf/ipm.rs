//! Primal-dual interior-point method for
//!
//! ```text
//! min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  x_min <= x <= x_max
//! ```
//!
//! Inequalities get slacks `z > 0` and multipliers `mu > 0`; each iteration
//! takes a Newton step on the perturbed KKT system with complementarity
//! target `gamma`, then cuts `gamma` to `sigma * z'mu / n_ineq`. Variable
//! bounds are handled as diagonal terms rather than dense constraint rows.

use nalgebra::{DMatrix, DVector};

/// Callbacks describing a smooth constrained problem.
pub trait NlpProblem {
    fn n_vars(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn n_ineq(&self) -> usize;
    /// Lower/upper variable bounds (may be infinite; equal bounds fix the variable).
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn x0(&self) -> Vec<f64>;
    /// Objective value and gradient.
    fn objective(&self, x: &[f64]) -> (f64, DVector<f64>);
    /// `g`, `dg/dx` (`n_eq x n_vars`), `h`, `dh/dx` (`n_ineq x n_vars`).
    fn constraints(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>);
    /// `cost_mult * d2f + sum lam_i d2g_i + sum mu_j d2h_j`.
    fn lagrangian_hessian(&self, x: &[f64], lam: &[f64], mu: &[f64], cost_mult: f64) -> DMatrix<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpmOptions {
    pub max_iter: usize,
    pub feas_tol: f64,
    pub grad_tol: f64,
    pub comp_tol: f64,
    pub cost_tol: f64,
    /// Fraction-to-boundary factor.
    pub xi: f64,
    /// Barrier reduction factor.
    pub sigma: f64,
    /// Initial slack / multiplier level.
    pub z0: f64,
    /// A primal step shorter than this (inf-norm) ends the run.
    pub step_floor: f64,
    /// Internal objective scaling.
    pub cost_mult: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            max_iter: 150,
            feas_tol: 1e-6,
            grad_tol: 1e-6,
            comp_tol: 1e-6,
            cost_tol: 1e-6,
            xi: 0.995,
            sigma: 0.2,
            z0: 1.0,
            step_floor: 1e-12,
            cost_mult: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpmStatus {
    Converged,
    MaxIter,
    /// Step length collapse, singular KKT matrix, NaN or barrier blow-up.
    Failed,
}

#[derive(Clone, Debug)]
pub struct IpmResult {
    pub x: Vec<f64>,
    /// Unscaled objective at `x`.
    pub f: f64,
    pub lam: Vec<f64>,
    /// Multipliers of the `h` constraints.
    pub mu: Vec<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub feascond: f64,
    pub gradcond: f64,
    pub compcond: f64,
    pub costcond: f64,
    /// Largest raw violation of `g` and `h` (and bounds) at `x`.
    pub max_violation: f64,
}

#[derive(Clone, Copy)]
struct Bound {
    var: usize,
    /// +1 for `x - ub <= 0`, -1 for `lb - x <= 0`.
    sign: f64,
    value: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Eval {
    f: f64,
    df: DVector<f64>,
    g: DVector<f64>,
    jg: DMatrix<f64>,
    h: DVector<f64>,
    jh: DMatrix<f64>,
    hb: Vec<f64>,
}

pub fn solve<P: NlpProblem + ?Sized>(p: &P, opts: &IpmOptions) -> IpmResult {
    let nx = p.n_vars();
    let (lb, ub) = p.bounds();
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    let mut bounds: Vec<Bound> = Vec::new();
    for i in 0..nx {
        if lb[i] == ub[i] {
            fixed.push((i, lb[i]));
            continue;
        }
        if ub[i].is_finite() {
            bounds.push(Bound { var: i, sign: 1.0, value: ub[i] });
        }
        if lb[i].is_finite() {
            bounds.push(Bound { var: i, sign: -1.0, value: lb[i] });
        }
    }
    let neq_user = p.n_eq();
    let neq = neq_user + fixed.len();
    let nh = p.n_ineq();
    let nb = bounds.len();
    let niq = nh + nb;
    let cm = opts.cost_mult;

    let eval = |x: &[f64]| -> Eval {
        let (f, df) = p.objective(x);
        let (gu, jgu, h, jh) = p.constraints(x);
        let mut g = DVector::zeros(neq);
        let mut jg = DMatrix::zeros(neq, nx);
        g.rows_mut(0, neq_user).copy_from(&gu);
        jg.view_mut((0, 0), (neq_user, nx)).copy_from(&jgu);
        for (k, &(i, v)) in fixed.iter().enumerate() {
            g[neq_user + k] = x[i] - v;
            jg[(neq_user + k, i)] = 1.0;
        }
        let hb = bounds.iter().map(|b| b.sign * (x[b.var] - b.value)).collect();
        Eval { f: f * cm, df: df * cm, g, jg, h, jh, hb }
    };

    let mut x = p.x0();
    let mut e = eval(&x);
    let mut lam = DVector::<f64>::zeros(neq);
    let mut z = vec![opts.z0; niq];
    let mut mu = vec![opts.z0; niq];
    for k in 0..niq {
        let hk = if k < nh { e.h[k] } else { e.hb[k - nh] };
        if hk < -opts.z0 {
            z[k] = -hk;
        }
    }
    let mut gamma = 1.0;

    let lagrangian_grad = |e: &Eval, lam: &DVector<f64>, mu: &[f64]| -> DVector<f64> {
        let mut lx = &e.df + e.jg.transpose() * lam;
        if nh > 0 {
            lx += e.jh.transpose() * DVector::from_column_slice(&mu[..nh]);
        }
        for (j, b) in bounds.iter().enumerate() {
            lx[b.var] += b.sign * mu[nh + j];
        }
        lx
    };
    let conditions = |x: &[f64], e: &Eval, lam: &DVector<f64>, z: &[f64], mu: &[f64], f0: f64| {
        let maxh = e.h.iter().chain(&e.hb).fold(0.0f64, |m, &v| m.max(v));
        let feas = inf_norm(e.g.as_slice()).max(maxh) / (1.0 + inf_norm(x).max(inf_norm(z)));
        let lx = lagrangian_grad(e, lam, mu);
        let grad = inf_norm(lx.as_slice()) / (1.0 + inf_norm(lam.as_slice()).max(inf_norm(mu)));
        let comp = z.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() / (1.0 + inf_norm(x));
        let cost = (e.f - f0).abs() / (1.0 + f0.abs());
        (feas, grad, comp, cost)
    };

    let mut f0 = e.f;
    let (mut feas, mut grad, mut comp, mut cost) = conditions(&x, &e, &lam, &z, &mu, f0);
    let converged = |feas: f64, grad: f64, comp: f64, cost: f64| {
        feas < opts.feas_tol && grad < opts.grad_tol && comp < opts.comp_tol && cost < opts.cost_tol
    };
    let mut status = if converged(feas, grad, comp, cost) { IpmStatus::Converged } else { IpmStatus::MaxIter };
    let mut it = 0;

    while status != IpmStatus::Converged && it < opts.max_iter {
        it += 1;
        let lx = lagrangian_grad(&e, &lam, &mu);
        let mu_user: Vec<f64> = mu[..nh].to_vec();
        let mut m = p.lagrangian_hessian(&x, &lam.as_slice()[..neq_user], &mu_user, cm);
        let mut n = lx.clone();
        if nh > 0 {
            let w = DVector::from_iterator(nh, (0..nh).map(|k| mu[k] / z[k]));
            let mut jw = e.jh.clone();
            for (k, mut row) in jw.row_iter_mut().enumerate() {
                row *= w[k];
            }
            m += e.jh.transpose() * &jw;
            let r = DVector::from_iterator(nh, (0..nh).map(|k| (mu[k] * e.h[k] + gamma) / z[k]));
            n += e.jh.transpose() * r;
        }
        for (j, b) in bounds.iter().enumerate() {
            let k = nh + j;
            m[(b.var, b.var)] += mu[k] / z[k];
            n[b.var] += b.sign * (mu[k] * e.hb[j] + gamma) / z[k];
        }
        let dim = nx + neq;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (nx, nx)).copy_from(&m);
        kkt.view_mut((0, nx), (nx, neq)).copy_from(&e.jg.transpose());
        kkt.view_mut((nx, 0), (neq, nx)).copy_from(&e.jg);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, nx).copy_from(&(-&n));
        rhs.rows_mut(nx, neq).copy_from(&(-&e.g));
        let Some(sol) = kkt.lu().solve(&rhs) else {
            status = IpmStatus::Failed;
            break;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            status = IpmStatus::Failed;
            break;
        }
        let dx = sol.rows(0, nx).into_owned();
        let dlam = sol.rows(nx, neq).into_owned();
        let mut dz = vec![0.0; niq];
        if nh > 0 {
            let jdx = &e.jh * &dx;
            for k in 0..nh {
                dz[k] = -e.h[k] - z[k] - jdx[k];
            }
        }
        for (j, b) in bounds.iter().enumerate() {
            let k = nh + j;
            dz[k] = -e.hb[j] - z[k] - b.sign * dx[b.var];
        }
        let dmu: Vec<f64> = (0..niq).map(|k| -mu[k] + (gamma - mu[k] * dz[k]) / z[k]).collect();

        let step = |v: &[f64], dv: &[f64]| {
            let mut a = 1.0f64;
            for (vi, di) in v.iter().zip(dv) {
                if *di < 0.0 {
                    a = a.min(opts.xi * vi / -di);
                }
            }
            a
        };
        let alphap = step(&z, &dz);
        let alphad = step(&mu, &dmu);
        for i in 0..nx {
            x[i] += alphap * dx[i];
        }
        for k in 0..niq {
            z[k] += alphap * dz[k];
            mu[k] += alphad * dmu[k];
        }
        lam += dlam * alphad;
        if niq > 0 {
            gamma = opts.sigma * z.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() / niq as f64;
        }

        e = eval(&x);
        (feas, grad, comp, cost) = conditions(&x, &e, &lam, &z, &mu, f0);
        f0 = e.f;
        if converged(feas, grad, comp, cost) {
            status = IpmStatus::Converged;
            break;
        }
        if x.iter().any(|v| !v.is_finite()) || e.f.is_nan() || gamma > 1.0 / f64::EPSILON {
            status = IpmStatus::Failed;
            break;
        }
        let stalled = alphap * inf_norm(dx.as_slice()) < opts.step_floor
            && alphap * inf_norm(&dz) < opts.step_floor
            && alphad * inf_norm(&dmu) < opts.step_floor;
        if gamma < f64::EPSILON || stalled {
            status = IpmStatus::MaxIter;
            break;
        }
    }

    let max_violation = inf_norm(e.g.as_slice()).max(e.h.iter().chain(&e.hb).fold(0.0f64, |m, &v| m.max(v)));
    IpmResult {
        x,
        f: e.f / cm,
        lam: lam.as_slice()[..neq_user].to_vec(),
        mu: mu[..nh].to_vec(),
        status,
        iterations: it,
        feascond: feas,
        gradcond: grad,
        compcond: comp,
        costcond: cost,
        max_violation,
    }
}
