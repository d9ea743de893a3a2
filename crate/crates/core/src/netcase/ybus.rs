use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{BranchRecord, BusRecord};

/// Two-port admittances of one branch, in p.u.:
/// `[I_f; I_t] = [[yff, yft], [ytf, ytt]] [V_f; V_t]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchAdmittance {
    pub from: usize,
    pub to: usize,
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

/// Sparse bus admittance matrix `Y = G + jB` plus per-branch two-ports.
#[derive(Clone, Debug, PartialEq)]
pub struct Admittance {
    n: usize,
    /// Row `i`: `(column, value)` sorted by column.
    rows: Vec<Vec<(usize, Complex64)>>,
    branches: Vec<BranchAdmittance>,
}

impl Admittance {
    pub(super) fn build(base_mva: f64, buses: &[BusRecord], branches: &[BranchRecord], index: &HashMap<u32, usize>) -> Self {
        let n = buses.len();
        let mut acc: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); n];
        let mut two_ports = Vec::with_capacity(branches.len());
        for br in branches {
            let f = index[&br.from_bus];
            let t = index[&br.to_bus];
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let bc = Complex64::new(0.0, br.b_charging / 2.0);
            let tau = Complex64::from_polar(br.tap, br.shift.to_radians());
            let ytt = ys + bc;
            let yff = ytt / (tau * tau.conj());
            let yft = -ys / tau.conj();
            let ytf = -ys / tau;
            *acc[f].entry(f).or_default() += yff;
            *acc[f].entry(t).or_default() += yft;
            *acc[t].entry(f).or_default() += ytf;
            *acc[t].entry(t).or_default() += ytt;
            two_ports.push(BranchAdmittance { from: f, to: t, yff, yft, ytf, ytt });
        }
        for (i, b) in buses.iter().enumerate() {
            if b.gs != 0.0 || b.bs != 0.0 {
                *acc[i].entry(i).or_default() += Complex64::new(b.gs, b.bs) / base_mva;
            }
        }
        let rows = acc.into_iter().map(|r| r.into_iter().collect()).collect();
        Self { n, rows, branches: two_ports }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].binary_search_by_key(&j, |&(c, _)| c).map(|k| self.rows[i][k].1).unwrap_or_default()
    }

    pub fn branches(&self) -> &[BranchAdmittance] {
        &self.branches
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `I = Y V`.
    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, y)| y * v[j]).sum()).collect()
    }
}
