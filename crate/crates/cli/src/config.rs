//! Run configuration files (TOML). The grammar is documented in
//! `docs/config.md`; relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use popf_core::gmm::GaussianMixture;
use popf_core::netcase::{parse_case, NetworkCase};
use popf_core::popf::{FarmGroup, Method, OutputVariable, PopfConfig, ReferenceStats, Solver, StreamOptions};
use popf_core::wind::{RampShape, TurbineModel, WindFarm};
use serde::Deserialize;

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub case: CaseSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, rename = "group")]
    pub groups: Vec<GroupSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_samples: usize,
    pub seed: u64,
    pub method: String,
    pub solver: String,
    pub load_sigma_frac: f64,
    pub loads_share_stream: bool,
    pub max_infeasible_frac: f64,
    pub outputs: Vec<String>,
    pub histogram_bins: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            seed: 0,
            method: "qmc".into(),
            solver: "dc".into(),
            load_sigma_frac: 0.05,
            loads_share_stream: false,
            max_infeasible_frac: 0.05,
            outputs: Vec::new(),
            histogram_bins: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub proposal_scale: f64,
    pub burn_in: usize,
    pub thin: usize,
    pub auto_tune: bool,
    /// 0 serves Sobol points in sequence order.
    pub sobol_shuffle_block: usize,
    pub sobol_digital_shift: bool,
    pub lhs_block: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = StreamOptions::default();
        Self {
            proposal_scale: 0.1,
            burn_in: 1000,
            thin: 1,
            auto_tune: false,
            sobol_shuffle_block: s.sobol_shuffle_block.unwrap_or(0),
            sobol_digital_shift: s.sobol_digital_shift,
            lhs_block: s.lhs_block,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    pub n_samples: usize,
    pub seed: u64,
    pub method: String,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self { n_samples: 10_000, seed: 999_999, method: "direct".into() }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub samples_csv: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub compare_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub name: String,
    pub model: PathBuf,
    /// Host bus of each farm, in model column order.
    pub buses: Vec<u32>,
    pub n_turbines: Option<u32>,
    pub power_factor: Option<f64>,
    pub v_in: Option<f64>,
    pub v_rated: Option<f64>,
    pub v_out: Option<f64>,
    pub p_rated: Option<f64>,
    pub ramp: Option<String>,
    /// Overrides the model's recorded column bounds.
    pub speed_min: Option<Vec<f64>>,
    pub speed_max: Option<Vec<f64>>,
    pub proposal_scale: Option<f64>,
}

/// A parsed config with every path made absolute.
pub struct LoadedConfig {
    pub file: RunFile,
    pub dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).data_ctx(|| format!("cannot read config {}", path.display()))?;
        let file: RunFile = toml::from_str(&text).data_ctx(|| format!("config {}", path.display()))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { file, dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    pub fn out_path(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_ref().map(|p| self.resolve(p))
    }

    pub fn reference_path(&self) -> Option<PathBuf> {
        self.out_path(&self.file.output.reference)
    }

    fn read_case(&self) -> CliResult<NetworkCase> {
        let path = self.resolve(&self.file.case.path);
        let text = std::fs::read_to_string(&path).data_ctx(|| format!("cannot read case {}", path.display()))?;
        parse_case(&text).data_ctx(|| format!("case {}", path.display()))
    }

    fn read_group(&self, g: &GroupSection, s: &SamplerSection) -> CliResult<FarmGroup> {
        let path = self.resolve(&g.model);
        let text = std::fs::read_to_string(&path).data_ctx(|| format!("cannot read model {}", path.display()))?;
        let model = GaussianMixture::from_json(&text).data_ctx(|| format!("model {}", path.display()))?;
        let d = model.dim();
        let ctx = |m: String| CliError::data(format!("group '{}': {m}", g.name));
        if g.buses.len() != d {
            return Err(ctx(format!("{} buses listed for a {d}-dimensional model", g.buses.len())));
        }
        let bounds = |over: &Option<Vec<f64>>, pick: fn(&popf_core::gmm::ColumnBounds) -> f64| -> CliResult<Vec<f64>> {
            match (over, model.columns()) {
                (Some(v), _) if v.len() == d => Ok(v.clone()),
                (Some(v), _) => Err(ctx(format!("speed bounds list has {} entries, expected {d}", v.len()))),
                (None, Some(cols)) => Ok(cols.iter().map(pick).collect()),
                (None, None) => Err(ctx("model has no column bounds; set speed_min and speed_max".into())),
            }
        };
        let lo = bounds(&g.speed_min, |c| c.min)?;
        let hi = bounds(&g.speed_max, |c| c.max)?;
        let base = TurbineModel::default();
        let ramp = match g.ramp.as_deref() {
            None | Some("cubic") => RampShape::Cubic,
            Some("linear") => RampShape::Linear,
            Some(other) => return Err(ctx(format!("unknown ramp '{other}'"))),
        };
        let turbine = TurbineModel::new(
            g.v_in.unwrap_or(base.v_in),
            g.v_rated.unwrap_or(base.v_r),
            g.v_out.unwrap_or(base.v_out),
            g.p_rated.unwrap_or(base.p_rated),
        )
        .map_err(|e| ctx(e.to_string()))?
        .with_ramp(ramp);
        let farms = (0..d)
            .map(|j| {
                let mut f = WindFarm::new(g.buses[j], lo[j], hi[j]);
                f.turbine = turbine.clone();
                if let Some(n) = g.n_turbines {
                    f.n_turbines = n;
                }
                if let Some(pf) = g.power_factor {
                    f.power_factor = pf;
                }
                f
            })
            .collect();
        let mut group = FarmGroup::new(g.name.clone(), model, farms);
        group.proposal_scale = vec![g.proposal_scale.unwrap_or(s.proposal_scale); d];
        group.burn_in = s.burn_in;
        group.thin = s.thin;
        group.auto_tune = s.auto_tune;
        Ok(group)
    }

    pub fn popf_config(&self) -> CliResult<PopfConfig> {
        let f = &self.file;
        let case = self.read_case()?;
        let groups = f.groups.iter().map(|g| self.read_group(g, &f.sampler)).collect::<CliResult<Vec<_>>>()?;
        let r = &f.run;
        let mut cfg = PopfConfig::new(case, groups, r.n_samples, r.seed);
        cfg.method = r.method.parse::<Method>().map_err(|e| CliError::data(e.to_string()))?;
        cfg.solver = r.solver.parse::<Solver>().map_err(|e| CliError::data(e.to_string()))?;
        cfg.load_sigma_frac = r.load_sigma_frac;
        cfg.loads_share_stream = r.loads_share_stream;
        cfg.max_infeasible_frac = r.max_infeasible_frac;
        cfg.histogram_bins = r.histogram_bins;
        cfg.outputs = r
            .outputs
            .iter()
            .map(|s| s.parse::<OutputVariable>().map_err(|e| CliError::data(e.to_string())))
            .collect::<CliResult<_>>()?;
        cfg.stream = StreamOptions {
            sobol_shuffle_block: (f.sampler.sobol_shuffle_block > 0).then_some(f.sampler.sobol_shuffle_block),
            sobol_digital_shift: f.sampler.sobol_digital_shift,
            lhs_block: f.sampler.lhs_block,
        };
        cfg.threads = popf_core::par::threads_from_env();
        cfg.validate().map_err(crate::error::popf_error)?;
        Ok(cfg)
    }

    pub fn read_reference(&self, path: &Path) -> CliResult<ReferenceStats> {
        let text = std::fs::read_to_string(path).data_ctx(|| format!("missing reference {}", path.display()))?;
        ReferenceStats::from_json(&text).data_ctx(|| format!("reference {}", path.display()))
    }
}
