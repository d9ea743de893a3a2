use serde::{Deserialize, Serialize};

use super::{run_popf, Method, PopfConfig, PopfError, Solver, REPORT_SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Stored statistics of a large reference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub schema_version: u32,
    pub method: Method,
    pub solver: Solver,
    pub n_samples: usize,
    pub seed: u64,
    pub variables: Vec<ReferenceEntry>,
}

impl ReferenceStats {
    pub fn get(&self, name: &str) -> Option<&ReferenceEntry> {
        self.variables.iter().find(|e| e.name == name)
    }

    /// Short description, e.g. `direct N=10000 seed=7`.
    pub fn label(&self) -> String {
        format!("{} N={} seed={}", self.method, self.n_samples, self.seed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reference serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PopfError> {
        let r: Self = serde_json::from_str(text).map_err(|e| PopfError::ReferenceJson(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(PopfError::ReferenceJson(format!("unsupported schema_version {}", r.schema_version)));
        }
        Ok(r)
    }
}

/// Run `cfg` as given (its method, size and seed) and keep mean and std of
/// every tracked variable.
pub fn make_reference(cfg: &PopfConfig) -> Result<ReferenceStats, PopfError> {
    let mut cfg = cfg.clone();
    cfg.reference = None;
    cfg.histogram_bins = None;
    cfg.record_samples = false;
    let report = run_popf(&cfg)?;
    Ok(ReferenceStats {
        schema_version: REPORT_SCHEMA_VERSION,
        method: cfg.method,
        solver: cfg.solver,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        variables: report
            .variables
            .iter()
            .map(|v| ReferenceEntry { name: v.name.clone(), mean: v.mean, std: v.std })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variable: String,
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub eps_mu_pct: Option<f64>,
    pub std: f64,
    pub eps_sigma_pct: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Columns `variable,method,N,mean,eps_mu_pct,std,eps_sigma_pct`, plus a
    /// trailing `seed` column when `with_seed` is set. Undefined error
    /// indices are left empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W, with_seed: bool) -> Result<(), PopfError> {
        let io = |e: csv::Error| PopfError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["variable", "method", "N", "mean", "eps_mu_pct", "std", "eps_sigma_pct"];
        if with_seed {
            header.push("seed");
        }
        out.write_record(&header).map_err(io)?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.variable.clone(),
                r.method.to_string(),
                r.n.to_string(),
                format!("{:e}", r.mean),
                opt(r.eps_mu_pct),
                format!("{:e}", r.std),
                opt(r.eps_sigma_pct),
            ];
            if with_seed {
                rec.push(r.seed.to_string());
            }
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| PopfError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self, with_seed: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_seed).expect("in-memory CSV");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Rows of one variable, method and size.
    pub fn select<'a>(&'a self, variable: &'a str, method: Method, n: usize) -> impl Iterator<Item = &'a ComparisonRow> + 'a {
        self.rows.iter().filter(move |r| r.variable == variable && r.method == method && r.n == n)
    }
}

/// Error indices of every tracked variable for each `(method, N)` at the
/// configured seed. Needs `cfg.reference`.
pub fn compare_methods(cfg: &PopfConfig, methods: &[Method], sizes: &[usize]) -> Result<ComparisonTable, PopfError> {
    compare_replicates(cfg, methods, sizes, &[cfg.seed])
}

/// [`compare_methods`] repeated over several seeds.
pub fn compare_replicates(
    cfg: &PopfConfig,
    methods: &[Method],
    sizes: &[usize],
    seeds: &[u64],
) -> Result<ComparisonTable, PopfError> {
    if cfg.reference.is_none() {
        return Err(PopfError::MissingReference);
    }
    let mut table = ComparisonTable::default();
    for &method in methods {
        for &n in sizes {
            for &seed in seeds {
                let mut c = cfg.clone();
                c.method = method;
                c.n_samples = n;
                c.seed = seed;
                c.record_samples = false;
                let report = run_popf(&c)?;
                table.rows.extend(report.variables.into_iter().map(|v| ComparisonRow {
                    variable: v.name,
                    method,
                    n,
                    seed,
                    mean: v.mean,
                    eps_mu_pct: v.eps_mu_pct,
                    std: v.std,
                    eps_sigma_pct: v.eps_sigma_pct,
                }));
            }
        }
    }
    Ok(table)
}
