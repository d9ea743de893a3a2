//! `popf`: fit wind models, run probabilistic OPF, build references and
//! comparison tables, inspect uniform streams.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use popf_core::gmm::{EmOptions, InitMethod};
use popf_core::lds::StreamKind;
use popf_core::popf::Method;

use error::CliResult;

#[derive(Parser)]
#[command(name = "popf", version, about = "Probabilistic optimal power flow with GMM wind models and QMC-driven MCMC")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit one Gaussian mixture per farm group from a wind-speed CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        /// Mixture components M.
        #[arg(long, short = 'm', default_value_t = 5)]
        components: usize,
        /// `name=colA,colB`; repeatable. Default: one group of all columns.
        #[arg(long = "group")]
        groups: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        reg_eps: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-7)]
        rel_tol: f64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initialisation: `kmeans` (k-means++) or `random`.
        #[arg(long, default_value = "kmeans", value_parser = parse_init)]
        init: InitMethod,
    },
    /// Run one POPF and write the report (and optional per-sample CSV).
    Popf {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Report JSON path (overrides output.report).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        samples_csv: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Compute and store reference statistics.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error indices per (method, N[, seed]) against the reference, as CSV.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "srs,lhs,qmc")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Replicate seeds; more than one adds a `seed` column.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        make_reference: bool,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star discrepancy of the first n points of a stream.
    Discrepancy {
        #[arg(long, value_parser = parse_kind)]
        kind: StreamKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid resolution of the bracket for dim >= 2.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long)]
        digital_shift: bool,
        /// Write the points as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: popf_core::popf::PopfError| e.to_string())
}

fn parse_init(s: &str) -> Result<InitMethod, String> {
    match s {
        "kmeans" | "kmeans++" => Ok(InitMethod::KmeansPp),
        "random" => Ok(InitMethod::RandomRestart),
        _ => Err(format!("unknown init '{s}' (expected kmeans or random)")),
    }
}

fn parse_kind(s: &str) -> Result<StreamKind, String> {
    s.parse().map_err(|e: popf_core::lds::LdsError| e.to_string())
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Fit { csv, components, groups, out_dir, reg_eps, max_iter, rel_tol, restarts, seed, init } => {
            let em = EmOptions {
                max_iter,
                rel_tol,
                reg_eps,
                init,
                restarts,
                seed,
                ..EmOptions::default()
            };
            commands::fit(&commands::FitArgs { csv, components, groups, out_dir, em })
        }
        Cmd::Popf { config, n, seed, method, out, samples_csv, reference } => commands::popf(
            &config,
            &commands::RunOverrides { n, seed, method, report: out, samples_csv, reference },
        ),
        Cmd::Reference { config, n, seed, out } => commands::reference(&config, n, seed, out),
        Cmd::Compare { config, methods, sizes, seeds, make_reference, reference, out } => commands::compare(
            &config,
            &commands::CompareArgs { methods, sizes, seeds, make_reference, reference, out },
        ),
        Cmd::Discrepancy { kind, n, dim, seed, resolution, digital_shift, dump } => {
            commands::discrepancy(&commands::DiscrepancyArgs { kind, n, dim, seed, resolution, digital_shift, dump })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code())
        }
    }
}
