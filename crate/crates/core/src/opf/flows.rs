use num_complex::Complex64;
use serde::Serialize;

use super::OpfError;
use crate::netcase::NetworkCase;

/// Flow on one branch, MW / MVAr / MVA, and `dv = V_from - V_to` in p.u.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
    pub s_from: f64,
    pub s_to: f64,
    pub dv: f64,
}

impl BranchFlow {
    /// Active power loss, MW.
    pub fn loss(&self) -> f64 {
        self.p_from + self.p_to
    }
}

pub fn branch_flows(case: &NetworkCase, v: &[f64], theta: &[f64]) -> Result<Vec<BranchFlow>, OpfError> {
    let n = case.n_bus();
    for len in [v.len(), theta.len()] {
        if len != n {
            return Err(OpfError::DimensionMismatch { expected: n, got: len });
        }
    }
    let base = case.base_mva();
    let ph: Vec<Complex64> = v.iter().zip(theta).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    Ok(case
        .admittance()
        .branches()
        .iter()
        .map(|b| {
            let (vf, vt) = (ph[b.from], ph[b.to]);
            let sf = vf * (b.yff * vf + b.yft * vt).conj() * base;
            let st = vt * (b.ytf * vf + b.ytt * vt).conj() * base;
            BranchFlow {
                p_from: sf.re,
                q_from: sf.im,
                p_to: st.re,
                q_to: st.im,
                s_from: sf.norm(),
                s_to: st.norm(),
                dv: v[b.from] - v[b.to],
            }
        })
        .collect())
}

/// One `V_a V_c (G cos t + B sin t)` / `V_a V_c (G sin t - B cos t)` pair with
/// `t = theta_a - theta_c`, differentiated in the local variable order
/// `(theta_a, theta_c, V_a, V_c)`.
pub(crate) struct PairTerm {
    pub p: f64,
    pub q: f64,
    pub dp: [f64; 4],
    pub dq: [f64; 4],
    pub hp: [[f64; 4]; 4],
    pub hq: [[f64; 4]; 4],
}

impl PairTerm {
    pub fn new(g: f64, b: f64, ta: f64, tc: f64, va: f64, vc: f64, hessian: bool) -> Self {
        let (s, c) = (ta - tc).sin_cos();
        let cc = g * c + b * s;
        let ss = g * s - b * c;
        let p = va * vc * cc;
        let q = va * vc * ss;
        let dp = [-q, q, vc * cc, va * cc];
        let dq = [p, -p, vc * ss, va * ss];
        let mut hp = [[0.0; 4]; 4];
        let mut hq = [[0.0; 4]; 4];
        if hessian {
            hp = [
                [-p, p, -vc * ss, -va * ss],
                [p, -p, vc * ss, va * ss],
                [-vc * ss, vc * ss, 0.0, cc],
                [-va * ss, va * ss, cc, 0.0],
            ];
            hq = [
                [-q, q, vc * cc, va * cc],
                [q, -q, -vc * cc, -va * cc],
                [vc * cc, -vc * cc, 0.0, ss],
                [va * cc, -va * cc, ss, 0.0],
            ];
        }
        Self { p, q, dp, dq, hp, hq }
    }
}
