use serde::{Deserialize, Serialize};

use super::{BranchRecord, BusRecord, GenRecord, NetcaseError, NetworkCase};

pub const CASE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CaseJson {
    schema_version: u32,
    base_mva: f64,
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    gens: Vec<GenRecord>,
}

impl NetworkCase {
    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        let doc = CaseJson {
            schema_version: CASE_SCHEMA_VERSION,
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            gens: self.gens.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("case serializes")
    }
}

pub fn parse_json(text: &str) -> Result<NetworkCase, NetcaseError> {
    let doc: CaseJson = serde_json::from_str(text).map_err(|e| NetcaseError::Json(format!("line {}: {e}", e.line())))?;
    if doc.schema_version != CASE_SCHEMA_VERSION {
        return Err(NetcaseError::Json(format!("unsupported schema_version {}", doc.schema_version)));
    }
    NetworkCase::new(doc.base_mva, doc.buses, doc.branches, doc.gens)
}
