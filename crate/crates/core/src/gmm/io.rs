use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GaussianMixture, GmmError};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Name and unity-normalization bounds of one data column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnBounds {
    pub name: String,
    #[serde(with = "exact")]
    pub min: f64,
    #[serde(with = "exact")]
    pub max: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    schema_version: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "D")]
    d: usize,
    weights: Vec<String>,
    means: Vec<Vec<String>>,
    covariances: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<ColumnBounds>>,
}

/// 17 significant digits: enough to round-trip any f64.
pub(crate) fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_exact(s: &str) -> Result<f64, GmmError> {
    s.trim().parse::<f64>().map_err(|_| GmmError::Json(format!("'{s}' is not a number")))
}

pub(crate) mod exact {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_exact(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_exact(&s).map_err(serde::de::Error::custom)
    }
}

fn strings(xs: impl IntoIterator<Item = f64>) -> Vec<String> {
    xs.into_iter().map(fmt_exact).collect()
}

fn numbers(xs: &[String]) -> Result<Vec<f64>, GmmError> {
    xs.iter().map(|s| parse_exact(s)).collect()
}

impl GaussianMixture {
    pub fn to_json(&self) -> String {
        let d = self.dim;
        let doc = ModelJson {
            schema_version: MODEL_SCHEMA_VERSION,
            m: self.comps.len(),
            d,
            weights: strings(self.comps.iter().map(|c| c.weight)),
            means: self.comps.iter().map(|c| strings(c.mean.iter().copied())).collect(),
            // row-major
            covariances: self
                .comps
                .iter()
                .map(|c| strings((0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|ij| c.cov[ij])))
                .collect(),
            columns: self.columns.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GmmError> {
        let doc: ModelJson = serde_json::from_str(text).map_err(|e| GmmError::Json(e.to_string()))?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(GmmError::Json(format!("unsupported schema_version {}", doc.schema_version)));
        }
        let (m, d) = (doc.m, doc.d);
        if doc.weights.len() != m || doc.means.len() != m || doc.covariances.len() != m {
            return Err(GmmError::Json(format!("expected {m} components in weights, means and covariances")));
        }
        let weights = numbers(&doc.weights)?;
        let means = doc.means.iter().map(|v| numbers(v)).collect::<Result<Vec<_>, _>>()?;
        let mut covs = Vec::with_capacity(m);
        for c in &doc.covariances {
            if c.len() != d * d {
                return Err(GmmError::Json(format!("covariance has {} entries, expected {}", c.len(), d * d)));
            }
            covs.push(DMatrix::from_row_slice(d, d, &numbers(c)?));
        }
        if means.iter().any(|mu| mu.len() != d) {
            return Err(GmmError::Json(format!("every mean must have {d} entries")));
        }
        let g = GaussianMixture::new(weights, means, covs)?;
        match doc.columns {
            Some(c) => g.with_columns(c),
            None => Ok(g),
        }
    }
}
