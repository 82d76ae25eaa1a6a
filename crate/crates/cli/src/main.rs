mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geolaplace::expansion::expand;
use geolaplace::graph_map::sigma_point;
use geolaplace::oracle::{empirical_coeffs, integrate_all};
use geolaplace::verify::{self, Check, Tolerances};
use geolaplace::{Error, GeometryReport};
use serde::Serialize;

use config::{builtin_config, Overrides, RunConfig, BUILTINS};

#[derive(Parser)]
#[command(name = "geolaplace", version, about = "Geometry of c-divergences and first-order Laplace expansions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometric report at the Σ point over x.
    Geometry {
        #[command(flatten)]
        common: Common,
        /// Comma-separated point in X.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// I0 and the split of I1.
    Expand(Common),
    /// Brute-force integrals over the ε grid with the fitted coefficients.
    Oracle(Common),
    /// Oracle values against the expansion, one CSV row per ε.
    Scan(Common),
    /// Run the invariant suite; exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Ignore the config's cost and check every built-in family.
        #[arg(long)]
        all_builtins: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Comma-separated ε grid for the oracle.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Gauss–Legendre nodes per axis, interior and boundary.
    #[arg(long)]
    nodes: Option<usize>,
    /// Dimension; boxes repeat their first interval.
    #[arg(long)]
    d: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { eps: self.eps.clone(), nodes: self.nodes, d: self.d }
    }

    fn load(&self) -> Result<RunConfig, Error> {
        let path = self.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut cfg = RunConfig::from_json(&read(path)?)?;
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

/// Failure of a run, carrying its exit code.
enum Failure {
    Error(Error),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn set_workers(cfg: Option<&RunConfig>) -> Result<(), Error> {
    let n = match std::env::var("GEOLAPLACE_WORKERS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::Config(format!("GEOLAPLACE_WORKERS must be a positive integer, got '{v}'")))?),
        Err(_) => cfg.and_then(|c| c.workers),
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn geometry(cfg: &RunConfig, x: &[f64]) -> Result<(), Failure> {
    let cost = cfg.cost()?;
    if x.len() != cost.d {
        return Err(Error::Config(format!("--x has {} coordinates but d = {}", x.len(), cost.d)).into());
    }
    let rep = GeometryReport::compute(&sigma_point(&cost, x)?)?;
    write_or_print(cfg.output.json.as_ref(), &output::to_json(&rep))?;
    let t = Tolerances::default();
    let breaches: Vec<String> = [
        ("h_asymmetry", rep.h_asymmetry, t.h_symmetry),
        ("gauss_residual", rep.gauss_residual, t.gauss),
        ("gauss_residual_full", rep.gauss_residual_full, t.gauss),
        ("gamma_residual", rep.gamma_residual, t.lemma),
        ("ddy_h_residual", rep.ddy_h_residual, t.lemma),
        ("frame_residual", rep.frame_residual, t.lemma),
        ("rule_residual", rep.rule_residual, t.lemma),
    ]
    .iter()
    .filter(|(_, v, tol)| !(v <= tol))
    .map(|(n, v, tol)| format!("{n} = {} exceeds {}", output::sci(*v), output::sci(*tol)))
    .collect();
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(breaches.join("; ")))
    }
}

fn expand_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let res = expand(&cfg.cost()?, &cfg.density()?, &cfg.quadrature()?)?;
    write_or_print(cfg.output.json.as_ref(), &output::to_json(&res))?;
    Ok(())
}

fn oracle_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let fit = empirical_coeffs(&cfg.cost()?, &cfg.density()?, &cfg.oracle()?)?;
    write_or_print(cfg.output.json.as_ref(), &output::to_json(&fit))?;
    Ok(())
}

fn scan_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let cost = cfg.cost()?;
    let density = cfg.density()?;
    let ocfg = cfg.oracle()?;
    let e = expand(&cost, &density, &cfg.quadrature()?)?;
    let values = integrate_all(&cost, &density, &ocfg.eps_list, &ocfg)?;
    let rows: Vec<[f64; 7]> = ocfg
        .eps_list
        .iter()
        .zip(&values)
        .map(|(&eps, &v)| [eps, v, e.i0, e.i1_interior, e.i1_boundary, e.i1_total, (v - e.i0 - eps * e.i1_total) / (eps * eps)])
        .collect();
    write_or_print(cfg.output.csv.as_ref(), &output::scan_csv(&rows))?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyRecord {
    cost: String,
    d: usize,
    checks: Vec<Check>,
}

fn verify_cmd(cfgs: &[(String, RunConfig)]) -> Result<(), Failure> {
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (label, cfg) in cfgs {
        let checks = verify::run(&cfg.cost()?, &cfg.density()?, &cfg.verify()?)?;
        for c in &checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            eprintln!("{status} {label:<16} d={} {:<32} {} (tol {})", cfg.cost.d, c.name, output::sci(c.value), output::sci(c.tol));
            if !c.pass {
                failed.push(format!("{label}/{}", c.name));
            }
        }
        records.push(VerifyRecord { cost: label.clone(), d: cfg.cost.d, checks });
    }
    let path = cfgs.first().and_then(|(_, c)| c.output.json.clone());
    write_or_print(path.as_ref(), &output::to_json(&records))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("failed checks: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Command::Geometry { common, x } => {
            let cfg = common.load()?;
            set_workers(Some(&cfg))?;
            geometry(&cfg, &x)
        }
        Command::Expand(common) => {
            let cfg = common.load()?;
            set_workers(Some(&cfg))?;
            expand_cmd(&cfg)
        }
        Command::Oracle(common) => {
            let cfg = common.load()?;
            set_workers(Some(&cfg))?;
            oracle_cmd(&cfg)
        }
        Command::Scan(common) => {
            let cfg = common.load()?;
            set_workers(Some(&cfg))?;
            scan_cmd(&cfg)
        }
        Command::Verify { common, all_builtins } => {
            let base = match &common.config {
                Some(_) => Some(common.load()?),
                None if all_builtins => None,
                None => return Err(Error::Config("--config is required unless --all-builtins is given".into()).into()),
            };
            set_workers(base.as_ref())?;
            let cfgs = if all_builtins {
                let d = common.d.or(base.as_ref().map(|c| c.cost.d)).unwrap_or(1);
                BUILTINS
                    .iter()
                    .map(|k| {
                        let mut c = builtin_config(k, d);
                        if let Some(b) = &base {
                            c.quadrature = b.quadrature.clone();
                            c.oracle = b.oracle.clone();
                            c.verify = b.verify.clone();
                            c.output = b.output.clone();
                        }
                        c.apply(&common.overrides());
                        (k.to_string(), c)
                    })
                    .collect()
            } else {
                let c = base.expect("loaded above");
                vec![(c.cost.kind.clone(), c)]
            };
            verify_cmd(&cfgs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
