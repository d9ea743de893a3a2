use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{BranchRecord, BusRecord, BusType, GenRecord, NetworkCase};

/// One violated invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    NonPositiveBase { base_mva: f64 },
    NoBuses,
    DuplicateBus { id: u32 },
    MissingSlack,
    MultipleSlack { ids: Vec<u32> },
    VoltageBounds { bus: u32, v_min: f64, v_max: f64 },
    NonPositiveVmin { bus: u32, v_min: f64 },
    NonFinite { what: String },
    DanglingBranch { branch: usize, bus: u32 },
    SelfLoop { branch: usize, bus: u32 },
    ZeroReactance { branch: usize },
    NonPositiveLimit { branch: usize, limit: &'static str, value: f64 },
    BadTap { branch: usize, tap: f64 },
    DanglingGen { gen: usize, bus: u32 },
    GenPBounds { gen: usize, p_min: f64, p_max: f64 },
    GenQBounds { gen: usize, q_min: f64, q_max: f64 },
    NegativeQuadraticCost { gen: usize, c: f64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Finding::*;
        match self {
            NonPositiveBase { base_mva } => write!(f, "baseMVA must be positive, got {base_mva}"),
            NoBuses => write!(f, "case has no buses"),
            DuplicateBus { id } => write!(f, "duplicate bus id {id}"),
            MissingSlack => write!(f, "missing slack bus"),
            MultipleSlack { ids } => write!(f, "more than one slack bus: {ids:?}"),
            VoltageBounds { bus, v_min, v_max } => write!(f, "bus {bus}: v_min {v_min} > v_max {v_max}"),
            NonPositiveVmin { bus, v_min } => write!(f, "bus {bus}: v_min {v_min} must be positive"),
            NonFinite { what } => write!(f, "non-finite value in {what}"),
            DanglingBranch { branch, bus } => write!(f, "dangling branch endpoint: branch {branch} refers to bus {bus}"),
            SelfLoop { branch, bus } => write!(f, "branch {branch} connects bus {bus} to itself"),
            ZeroReactance { branch } => write!(f, "branch {branch} has zero reactance"),
            NonPositiveLimit { branch, limit, value } => write!(f, "branch {branch}: {limit} = {value} must be positive"),
            BadTap { branch, tap } => write!(f, "branch {branch}: tap ratio {tap} must be positive"),
            DanglingGen { bus, .. } => write!(f, "dangling generator bus {bus}"),
            GenPBounds { gen, p_min, p_max } => write!(f, "generator {gen}: p_min {p_min} > p_max {p_max}"),
            GenQBounds { gen, q_min, q_max } => write!(f, "generator {gen}: q_min {q_min} > q_max {q_max}"),
            NegativeQuadraticCost { gen, c } => write!(f, "generator {gen}: quadratic cost {c} is negative"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }
}

/// Check an already-built case. Always empty for a case built by
/// [`NetworkCase::new`]; kept as a data-level audit.
pub fn validate_case(case: &NetworkCase) -> ValidationReport {
    validate_records(case.base_mva, &case.buses, &case.branches, &case.gens)
}

/// Check raw records; every violated invariant becomes one finding.
pub fn validate_records(
    base_mva: f64,
    buses: &[BusRecord],
    branches: &[BranchRecord],
    gens: &[GenRecord],
) -> ValidationReport {
    let mut out = Vec::new();
    if !(base_mva > 0.0) || !base_mva.is_finite() {
        out.push(Finding::NonPositiveBase { base_mva });
    }
    if buses.is_empty() {
        out.push(Finding::NoBuses);
    }
    let mut seen = HashSet::new();
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for b in buses {
        *counts.entry(b.id).or_default() += 1;
        if counts[&b.id] == 2 && seen.insert(b.id) {
            out.push(Finding::DuplicateBus { id: b.id });
        }
        for (name, v) in [("p_load", b.p_load), ("q_load", b.q_load), ("gs", b.gs), ("bs", b.bs), ("v_min", b.v_min), ("v_max", b.v_max)] {
            if !v.is_finite() {
                out.push(Finding::NonFinite { what: format!("bus {} {name}", b.id) });
            }
        }
        if b.v_min > b.v_max {
            out.push(Finding::VoltageBounds { bus: b.id, v_min: b.v_min, v_max: b.v_max });
        }
        if !(b.v_min > 0.0) {
            out.push(Finding::NonPositiveVmin { bus: b.id, v_min: b.v_min });
        }
    }
    let slacks: Vec<u32> = buses.iter().filter(|b| b.bus_type == BusType::Slack).map(|b| b.id).collect();
    match slacks.len() {
        0 if !buses.is_empty() => out.push(Finding::MissingSlack),
        0 | 1 => {}
        _ => out.push(Finding::MultipleSlack { ids: slacks }),
    }
    for (i, br) in branches.iter().enumerate() {
        for bus in [br.from_bus, br.to_bus] {
            if !counts.contains_key(&bus) {
                out.push(Finding::DanglingBranch { branch: i, bus });
            }
        }
        if br.from_bus == br.to_bus {
            out.push(Finding::SelfLoop { branch: i, bus: br.from_bus });
        }
        for (name, v) in [("r", br.r), ("x", br.x), ("b_charging", br.b_charging), ("tap", br.tap), ("shift", br.shift)] {
            if !v.is_finite() {
                out.push(Finding::NonFinite { what: format!("branch {i} {name}") });
            }
        }
        if br.x == 0.0 {
            out.push(Finding::ZeroReactance { branch: i });
        }
        if !(br.tap > 0.0) {
            out.push(Finding::BadTap { branch: i, tap: br.tap });
        }
        for (limit, v) in [("s_max", br.s_max), ("p_max", br.p_max), ("dv_max", br.dv_max)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    out.push(Finding::NonPositiveLimit { branch: i, limit, value: v });
                }
            }
        }
    }
    for (i, g) in gens.iter().enumerate() {
        if !counts.contains_key(&g.bus) {
            out.push(Finding::DanglingGen { gen: i, bus: g.bus });
        }
        for (name, v) in [("p_min", g.p_min), ("p_max", g.p_max), ("q_min", g.q_min), ("q_max", g.q_max), ("cost", g.cost.a + g.cost.b + g.cost.c)] {
            if !v.is_finite() {
                out.push(Finding::NonFinite { what: format!("generator {i} {name}") });
            }
        }
        if g.p_min > g.p_max {
            out.push(Finding::GenPBounds { gen: i, p_min: g.p_min, p_max: g.p_max });
        }
        if g.q_min > g.q_max {
            out.push(Finding::GenQBounds { gen: i, q_min: g.q_min, q_max: g.q_max });
        }
        if g.cost.c < 0.0 {
            out.push(Finding::NegativeQuadraticCost { gen: i, c: g.cost.c });
        }
    }
    ValidationReport { findings: out }
}
