use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use popf_core::gmm::{fit_em, ColumnBounds, EmOptions, GmmError};
use popf_core::lds::{star_discrepancy_1d, star_discrepancy_grid, StreamKind, StreamSpec};
use popf_core::popf::{compare_replicates, make_reference, run_popf, Method, PopfConfig, ReferenceStats};

use crate::config::LoadedConfig;
use crate::error::{popf_error, CliError, CliResult, Context};

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).data_ctx(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, bytes).data_ctx(|| format!("cannot write {}", path.display()))
}

/// Columns of a wind CSV: names and a rows x columns matrix.
pub fn read_wind_csv(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .data_ctx(|| format!("cannot read {}", path.display()))?;
    let names: Vec<String> = rdr.headers().data_ctx(|| format!("{}: header", path.display()))?.iter().map(String::from).collect();
    if names.is_empty() {
        return Err(CliError::data(format!("{}: no columns", path.display())));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.data_ctx(|| format!("{}: line {line}", path.display()))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::data(format!("{}: line {line}: '{field}' in column '{}' is not a number", path.display(), names[j])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(CliError::data(format!("{}: line {line}: wind speed {v} must be finite and >= 0", path.display())));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(CliError::data(format!("{}: need at least 2 data rows, found {rows}", path.display())));
    }
    Ok((names.clone(), DMatrix::from_row_slice(rows, names.len(), &values)))
}

pub struct FitArgs {
    pub csv: PathBuf,
    pub components: usize,
    pub groups: Vec<String>,
    pub out_dir: PathBuf,
    pub em: EmOptions,
}

/// `name=colA,colB` or a bare `colA,colB` (named after its first column).
fn parse_group(spec: &str, names: &[String]) -> CliResult<(String, Vec<usize>)> {
    let (name, cols) = match spec.split_once('=') {
        Some((n, c)) => (n.trim().to_string(), c),
        None => (String::new(), spec),
    };
    let idx = cols
        .split(',')
        .map(|c| {
            let c = c.trim();
            names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| CliError::data(format!("group '{spec}' references missing column '{c}'")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let name = if name.is_empty() { names[idx[0]].clone() } else { name };
    Ok((name, idx))
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let (names, data) = read_wind_csv(&args.csv)?;
    let groups = if args.groups.is_empty() {
        vec![("all".to_string(), (0..names.len()).collect::<Vec<_>>())]
    } else {
        args.groups.iter().map(|g| parse_group(g, &names)).collect::<CliResult<Vec<_>>>()?
    };
    let mut used = vec![false; names.len()];
    for (g, cols) in &groups {
        for &c in cols {
            if used[c] {
                return Err(CliError::data(format!("column '{}' appears in more than one group (at '{g}')", names[c])));
            }
            used[c] = true;
        }
    }
    for (gname, cols) in &groups {
        let n = data.nrows();
        let mut norm = DMatrix::zeros(n, cols.len());
        let mut bounds = Vec::with_capacity(cols.len());
        for (k, &c) in cols.iter().enumerate() {
            let col = data.column(c);
            let (lo, hi) = (col.min(), col.max());
            if hi == lo && args.em.reg_eps <= 0.0 {
                return Err(CliError::data(format!("degenerate column '{}': constant value {lo}", names[c])));
            }
            for i in 0..n {
                norm[(i, k)] = if hi > lo { (col[i] - lo) / (hi - lo) } else { 0.5 };
            }
            bounds.push(ColumnBounds { name: names[c].clone(), min: lo, max: hi });
        }
        let fit = fit_em(&norm, args.components, &args.em).map_err(|e| match e {
            GmmError::Degenerate(_) => CliError::data(format!("group '{gname}': degenerate column data: {e}")),
            GmmError::TooFewPoints { .. } | GmmError::InvalidOption(_) => CliError::data(format!("group '{gname}': {e}")),
            other => CliError::numerical(format!("group '{gname}': {other}")),
        })?;
        let ll = fit.model.log_likelihood(&norm).num_ctx(|| format!("group '{gname}'"))?;
        let model = fit.model.with_columns(bounds).data_ctx(|| format!("group '{gname}'"))?;
        let path = args.out_dir.join(format!("{gname}.json"));
        write_file(&path, model.to_json().as_bytes())?;
        println!(
            "group {gname}: M={} D={} log-likelihood {ll:.6} iterations {} converged {} -> {}",
            args.components,
            cols.len(),
            fit.iterations,
            fit.converged,
            path.display()
        );
    }
    Ok(())
}

pub struct RunOverrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub report: Option<PathBuf>,
    pub samples_csv: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

fn apply(cfg: &mut PopfConfig, o: &RunOverrides) {
    if let Some(n) = o.n {
        cfg.n_samples = n;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(m) = o.method {
        cfg.method = m;
    }
}

pub fn popf(config: &Path, o: &RunOverrides) -> CliResult<()> {
    let loaded = LoadedConfig::load(config)?;
    let mut cfg = loaded.popf_config()?;
    apply(&mut cfg, o);
    let report_path = o.report.clone().or_else(|| loaded.out_path(&loaded.file.output.report));
    let csv_path = o.samples_csv.clone().or_else(|| loaded.out_path(&loaded.file.output.samples_csv));
    if let Some(p) = o.reference.clone().or_else(|| loaded.reference_path()) {
        if p.exists() {
            cfg.reference = Some(loaded.read_reference(&p)?);
        }
    }
    cfg.record_samples = csv_path.is_some();
    let report = run_popf(&cfg).map_err(popf_error)?;
    let json = report.to_json();
    match &report_path {
        Some(p) => write_file(p, json.as_bytes())?,
        None => println!("{json}"),
    }
    if let (Some(p), Some(table)) = (&csv_path, &report.samples) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf).data_ctx(|| format!("cannot write {}", p.display()))?;
        write_file(p, &buf)?;
    }
    let t = &report.timings;
    eprintln!(
        "{} samples ({} failed) in {:.2}s sampling + {:.2}s solving",
        report.n_samples, report.infeasible_count, t.sampling_s, t.solve_s
    );
    if let Some(cost) = report.variable("cost") {
        eprintln!("mean cost {:.4} $/h, std {:.4}", cost.mean, cost.std);
    }
    Ok(())
}

fn build_reference(loaded: &LoadedConfig, base: &PopfConfig, n: Option<usize>, seed: Option<u64>) -> CliResult<ReferenceStats> {
    let r = &loaded.file.reference;
    let mut cfg = base.clone();
    cfg.method = r.method.parse().map_err(|e: popf_core::popf::PopfError| CliError::data(e.to_string()))?;
    cfg.n_samples = n.unwrap_or(r.n_samples);
    cfg.seed = seed.unwrap_or(r.seed);
    make_reference(&cfg).map_err(popf_error)
}

pub fn reference(config: &Path, n: Option<usize>, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<()> {
    let loaded = LoadedConfig::load(config)?;
    let cfg = loaded.popf_config()?;
    let reference = build_reference(&loaded, &cfg, n, seed)?;
    let path = out
        .or_else(|| loaded.reference_path())
        .ok_or_else(|| CliError::usage("no output path: pass --out or set output.reference"))?;
    write_file(&path, reference.to_json().as_bytes())?;
    eprintln!("reference {} -> {}", reference.label(), path.display());
    Ok(())
}

pub struct CompareArgs {
    pub methods: Vec<Method>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub make_reference: bool,
    pub reference: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn compare(config: &Path, a: &CompareArgs) -> CliResult<()> {
    let loaded = LoadedConfig::load(config)?;
    let mut cfg = loaded.popf_config()?;
    let ref_path = a.reference.clone().or_else(|| loaded.reference_path());
    let reference = if a.make_reference {
        let r = build_reference(&loaded, &cfg, None, None)?;
        if let Some(p) = &ref_path {
            write_file(p, r.to_json().as_bytes())?;
        }
        r
    } else {
        let p = ref_path.ok_or_else(|| CliError::data("missing reference: pass --reference, set output.reference or use --make-reference"))?;
        loaded.read_reference(&p)?
    };
    cfg.reference = Some(reference);
    let seeds = if a.seeds.is_empty() { vec![cfg.seed] } else { a.seeds.clone() };
    let table = compare_replicates(&cfg, &a.methods, &a.sizes, &seeds).map_err(popf_error)?;
    let csv = table.to_csv_string(a.seeds.len() > 1);
    match a.out.clone().or_else(|| loaded.out_path(&loaded.file.output.compare_csv)) {
        Some(p) => write_file(&p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub struct DiscrepancyArgs {
    pub kind: StreamKind,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub resolution: usize,
    pub digital_shift: bool,
    pub dump: Option<PathBuf>,
}

pub fn discrepancy(a: &DiscrepancyArgs) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    if !(1..=3).contains(&a.dim) {
        return Err(CliError::usage(format!("unsupported dimension {}: star discrepancy is available for 1 <= dim <= 3", a.dim)));
    }
    let spec = StreamSpec::new(a.kind, a.dim, a.seed).with_digital_shift(a.digital_shift).with_lhs_block(a.n, false);
    let mut stream = spec.build().data_ctx(|| "stream".to_string())?;
    let points = stream.take_points(a.n).num_ctx(|| "stream".to_string())?;
    let head = format!("kind={} n={} dim={} seed={}", a.kind, a.n, a.dim, a.seed);
    if a.dim == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let d = star_discrepancy_1d(&xs).num_ctx(|| "discrepancy".to_string())?;
        println!("{head} dstar={d:.12e}");
    } else {
        let b = star_discrepancy_grid(&points, a.resolution).num_ctx(|| "discrepancy".to_string())?;
        println!("{head} resolution={} dstar_lower={:.12e} dstar_upper={:.12e}", a.resolution, b.lower, b.upper);
    }
    if let Some(path) = &a.dump {
        let mut buf = Vec::new();
        let header: Vec<String> = (1..=a.dim).map(|j| format!("x{j}")).collect();
        writeln!(buf, "{}", header.join(",")).expect("in-memory write");
        for p in &points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(buf, "{}", row.join(",")).expect("in-memory write");
        }
        write_file(path, &buf)?;
    }
    Ok(())
}
