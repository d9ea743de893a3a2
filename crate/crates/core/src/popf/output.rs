use serde::{Deserialize, Serialize};

use super::PopfError;
use crate::netcase::NetworkCase;
use crate::opf::OpfSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Cost,
    BusV,
    BusTheta,
    GenP,
    GenQ,
    BranchP,
    BranchS,
}

/// A scalar read off every OPF solution.
///
/// `index` is the bus id for bus quantities and the 1-based position in the
/// case for generators and branches. It is ignored for `Cost`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutputVariable {
    pub kind: OutputKind,
    pub index: u32,
}

impl OutputVariable {
    pub const COST: OutputVariable = OutputVariable { kind: OutputKind::Cost, index: 0 };

    pub fn new(kind: OutputKind, index: u32) -> Self {
        Self { kind, index }
    }

    /// Column name: `cost`, `v_<bus>`, `theta_<bus>`, `pg_<gen>`, `qg_<gen>`,
    /// `p_<branch>`, `s_<branch>`.
    pub fn name(&self) -> String {
        let i = self.index;
        match self.kind {
            OutputKind::Cost => "cost".to_string(),
            OutputKind::BusV => format!("v_{i}"),
            OutputKind::BusTheta => format!("theta_{i}"),
            OutputKind::GenP => format!("pg_{i}"),
            OutputKind::GenQ => format!("qg_{i}"),
            OutputKind::BranchP => format!("p_{i}"),
            OutputKind::BranchS => format!("s_{i}"),
        }
    }

    pub fn check(&self, case: &NetworkCase) -> Result<(), PopfError> {
        let ok = match self.kind {
            OutputKind::Cost => true,
            OutputKind::BusV | OutputKind::BusTheta => case.bus_index(self.index).is_some(),
            OutputKind::GenP | OutputKind::GenQ => self.index >= 1 && self.index as usize <= case.gens().len(),
            OutputKind::BranchP | OutputKind::BranchS => {
                self.index >= 1 && self.index as usize <= case.branches().len()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(PopfError::UnknownOutput(self.name()))
        }
    }

    /// Value in report units: $/h, p.u. voltage, degrees, MW, MVAr, MVA.
    pub fn extract(&self, case: &NetworkCase, sol: &OpfSolution) -> f64 {
        let pos = (self.index as usize).wrapping_sub(1);
        match self.kind {
            OutputKind::Cost => sol.cost,
            OutputKind::BusV => sol.v[case.bus_index(self.index).expect("checked")],
            OutputKind::BusTheta => sol.theta[case.bus_index(self.index).expect("checked")].to_degrees(),
            OutputKind::GenP => sol.p_gen[pos],
            OutputKind::GenQ => sol.q_gen[pos],
            OutputKind::BranchP => sol.branch_p[pos],
            OutputKind::BranchS => sol.branch_s[pos],
        }
    }

    /// Every variable the case offers, in column order.
    pub fn all(case: &NetworkCase) -> Vec<OutputVariable> {
        let mut out = vec![Self::COST];
        let ids: Vec<u32> = case.buses().iter().map(|b| b.id).collect();
        out.extend(ids.iter().map(|&i| Self::new(OutputKind::BusV, i)));
        out.extend(ids.iter().map(|&i| Self::new(OutputKind::BusTheta, i)));
        let ng = case.gens().len() as u32;
        out.extend((1..=ng).map(|i| Self::new(OutputKind::GenP, i)));
        out.extend((1..=ng).map(|i| Self::new(OutputKind::GenQ, i)));
        let nl = case.branches().len() as u32;
        out.extend((1..=nl).map(|i| Self::new(OutputKind::BranchP, i)));
        out.extend((1..=nl).map(|i| Self::new(OutputKind::BranchS, i)));
        out
    }
}

impl std::fmt::Display for OutputVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for OutputVariable {
    type Err = PopfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "cost" {
            return Ok(Self::COST);
        }
        let bad = || PopfError::UnknownOutput(s.to_string());
        let (prefix, idx) = s.rsplit_once('_').ok_or_else(bad)?;
        let index: u32 = idx.parse().map_err(|_| bad())?;
        let kind = match prefix {
            "v" => OutputKind::BusV,
            "theta" => OutputKind::BusTheta,
            "pg" => OutputKind::GenP,
            "qg" => OutputKind::GenQ,
            "p" => OutputKind::BranchP,
            "s" => OutputKind::BranchS,
            _ => return Err(bad()),
        };
        Ok(Self { kind, index })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]` of the data; the top edge is closed.
    pub fn build(values: &[f64], bins: usize) -> Option<Self> {
        if values.is_empty() || bins == 0 {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        let width = max - min;
        for &v in values {
            let b = if width > 0.0 { (((v - min) / width) * bins as f64) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Some(Self { min, max, counts })
    }
}

/// Arithmetic mean and unbiased standard deviation, summed in input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// `|(reference - simulated) / reference| * 100`.
pub fn error_index(reference: f64, simulated: f64) -> Result<f64, PopfError> {
    if reference == 0.0 || !reference.is_finite() {
        return Err(PopfError::ZeroReference);
    }
    Ok(((reference - simulated) / reference).abs() * 100.0)
}
