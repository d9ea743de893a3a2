//! Power network cases: records, validation, admittance matrix.
//!
//! Cases come from a MATPOWER-style `.m` body ([`parse_matpower`]) or the
//! canonical JSON form ([`NetworkCase::to_json`] / [`parse_json`]);
//! [`parse_case`] picks one by the first non-blank character.

mod json;
mod matpower;
mod validate;
mod ybus;

pub use json::{parse_json, CASE_SCHEMA_VERSION};
pub use matpower::parse_matpower;
pub use validate::{validate_case, validate_records, Finding, ValidationReport};
pub use ybus::{Admittance, BranchAdmittance};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetcaseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing section mpc.{0}")]
    MissingSection(&'static str),
    #[error("{section} row {row}: {msg}")]
    BadRow { section: &'static str, row: usize, msg: String },
    #[error("{}", join_findings(.0))]
    Invalid(Vec<Finding>),
    #[error("case JSON: {0}")]
    Json(String),
    #[error("unknown bus {0}")]
    UnknownBus(u32),
}

fn join_findings(f: &[Finding]) -> String {
    f.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Slack,
    Pv,
    Pq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: u32,
    #[serde(rename = "type")]
    pub bus_type: BusType,
    /// MW
    pub p_load: f64,
    /// MVAr
    pub q_load: f64,
    /// Shunt conductance, MW at 1 p.u.
    #[serde(default)]
    pub gs: f64,
    /// Shunt susceptance, MVAr at 1 p.u.
    #[serde(default)]
    pub bs: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub base_kv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_charging: f64,
    /// MVA; `None` = unenforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    /// MW; `None` = unenforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    /// p.u.; `None` = unenforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dv_max: Option<f64>,
    /// Off-nominal tap ratio (1 for a line).
    #[serde(default = "one")]
    pub tap: f64,
    /// Phase shift, degrees.
    #[serde(default)]
    pub shift: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenCost {
    /// $/h
    pub a: f64,
    /// $/MWh
    pub b: f64,
    /// $/MW^2 h
    pub c: f64,
}

impl GenCost {
    pub fn eval(&self, p_mw: f64) -> f64 {
        self.a + self.b * p_mw + self.c * p_mw * p_mw
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub bus: u32,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost: GenCost,
    /// Power-flow setpoint, MW.
    #[serde(default)]
    pub pg: f64,
    /// Voltage setpoint, p.u.
    #[serde(default = "one")]
    pub vg: f64,
}

/// A validated network with its bus admittance matrix.
///
/// Immutable once built; share it freely across threads.
#[derive(Clone, Debug)]
pub struct NetworkCase {
    base_mva: f64,
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    gens: Vec<GenRecord>,
    index: HashMap<u32, usize>,
    slack: usize,
    admittance: Admittance,
}

impl PartialEq for NetworkCase {
    fn eq(&self, other: &Self) -> bool {
        self.base_mva == other.base_mva
            && self.buses == other.buses
            && self.branches == other.branches
            && self.gens == other.gens
    }
}

impl NetworkCase {
    pub fn new(
        base_mva: f64,
        buses: Vec<BusRecord>,
        branches: Vec<BranchRecord>,
        gens: Vec<GenRecord>,
    ) -> Result<Self, NetcaseError> {
        let report = validate_records(base_mva, &buses, &branches, &gens);
        if !report.is_empty() {
            return Err(NetcaseError::Invalid(report.findings));
        }
        let index: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let slack = buses.iter().position(|b| b.bus_type == BusType::Slack).expect("validated");
        let admittance = Admittance::build(base_mva, &buses, &branches, &index);
        Ok(Self { base_mva, buses, branches, gens, index, slack, admittance })
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[BusRecord] {
        &self.buses
    }

    pub fn branches(&self) -> &[BranchRecord] {
        &self.branches
    }

    pub fn gens(&self) -> &[GenRecord] {
        &self.gens
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    /// Position of bus `id` in [`buses`](Self::buses).
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn require_bus(&self, id: u32) -> Result<usize, NetcaseError> {
        self.bus_index(id).ok_or(NetcaseError::UnknownBus(id))
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Bus index of every branch `(from, to)`.
    pub fn branch_ends(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.branches.iter().map(|b| (self.index[&b.from_bus], self.index[&b.to_bus]))
    }

    /// Bus index of every generator.
    pub fn gen_bus_indices(&self) -> Vec<usize> {
        self.gens.iter().map(|g| self.index[&g.bus]).collect()
    }

    pub fn admittance(&self) -> &Admittance {
        &self.admittance
    }

    /// Fresh admittance matrix built from the branch list.
    pub fn rebuild_admittance(&self) -> Admittance {
        Admittance::build(self.base_mva, &self.buses, &self.branches, &self.index)
    }

    pub fn into_parts(self) -> (f64, Vec<BusRecord>, Vec<BranchRecord>, Vec<GenRecord>) {
        (self.base_mva, self.buses, self.branches, self.gens)
    }

    /// Same case with the listed generators removed.
    pub fn without_gens(&self, keep: impl Fn(usize, &GenRecord) -> bool) -> Result<Self, NetcaseError> {
        let gens = self.gens.iter().enumerate().filter(|(i, g)| keep(*i, g)).map(|(_, g)| g.clone()).collect();
        Self::new(self.base_mva, self.buses.clone(), self.branches.clone(), gens)
    }
}

/// Parse a MATPOWER-style case body or canonical JSON; a leading `{` selects JSON.
pub fn parse_case(text: &str) -> Result<NetworkCase, NetcaseError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_matpower(text)
    }
}
