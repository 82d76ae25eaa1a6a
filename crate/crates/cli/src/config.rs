//! The JSON run configuration and its command-line overrides.

use std::path::PathBuf;

use geolaplace::expansion::{DensitySpec, Orientation, QuadratureSpec};
use geolaplace::oracle::{InnerScheme, OracleConfig};
use geolaplace::verify::VerifyConfig;
use geolaplace::{parse, CostFunction, CostSpec, Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cost: CostSpec,
    #[serde(default)]
    pub density: DensityBlock,
    #[serde(default)]
    pub quadrature: QuadratureBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    /// Thread count; `GEOLAPLACE_WORKERS` takes precedence.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// At most one of `rho` (density against `dx dy`) and `f` (against `dm̃`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityBlock {
    pub rho: Option<String>,
    pub f: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureBlock {
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub orientation: Orientation,
}

impl Default for QuadratureBlock {
    fn default() -> Self {
        QuadratureBlock { nodes: 32, boundary_nodes: 32, orientation: Orientation::Default }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    GaussHermite,
    Adaptive,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    pub eps: Vec<f64>,
    pub inner: InnerKind,
    pub adaptive_tol: f64,
    pub hermite_nodes: usize,
    pub sigma_cut: f64,
    pub outer_nodes: usize,
    pub fit_degree: usize,
    pub tail_tol: Option<f64>,
}

impl Default for OracleBlock {
    fn default() -> Self {
        let d = OracleConfig::default();
        OracleBlock {
            eps: d.eps_list,
            inner: InnerKind::GaussHermite,
            adaptive_tol: 1e-12,
            hermite_nodes: d.hermite_nodes,
            sigma_cut: d.sigma_cut,
            outer_nodes: d.outer_nodes,
            fit_degree: d.fit_degree,
            tail_tol: d.tail_tol,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub points: usize,
    pub oracle: bool,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock { points: 10, oracle: true }
    }
}

/// Flag overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eps: Option<Vec<f64>>,
    pub nodes: Option<usize>,
    pub d: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| {
            let what = if e.is_syntax() || e.is_eof() { "malformed JSON" } else { "invalid configuration" };
            Error::Config(format!("{what}: {e}"))
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(eps) = &o.eps {
            self.oracle.eps = eps.clone();
        }
        if let Some(n) = o.nodes {
            self.quadrature.nodes = n;
            self.quadrature.boundary_nodes = n;
        }
        if let Some(d) = o.d {
            // a new dimension repeats the first interval of each box
            self.cost.d = d;
            let first = self.cost.x_box[0];
            self.cost.x_box = vec![first; d];
            if let Some(yb) = &mut self.cost.y_box {
                let first = yb[0];
                *yb = vec![first; d];
            }
        }
    }

    pub fn cost(&self) -> Result<CostFunction> {
        self.cost.build()
    }

    pub fn density(&self) -> Result<DensitySpec> {
        let d = self.cost.d;
        match (&self.density.rho, &self.density.f) {
            (Some(_), Some(_)) => Err(Error::Config("give either density.rho or density.f, not both".into())),
            (Some(r), None) => Ok(DensitySpec::rho(parse(r, d)?)),
            (None, Some(f)) => Ok(DensitySpec::f(parse(f, d)?)),
            (None, None) => Ok(DensitySpec::unit()),
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let q = &self.quadrature;
        if q.nodes == 0 || q.boundary_nodes == 0 {
            return Err(Error::Config("node counts must be positive".into()));
        }
        Ok(QuadratureSpec { nodes: q.nodes, boundary_nodes: q.boundary_nodes, orientation: q.orientation, keep_samples: false })
    }

    pub fn oracle(&self) -> Result<OracleConfig> {
        let o = &self.oracle;
        let cfg = OracleConfig {
            eps_list: o.eps.clone(),
            inner_scheme: match o.inner {
                InnerKind::GaussHermite => InnerScheme::GaussHermite,
                InnerKind::Adaptive => InnerScheme::Adaptive { tol: o.adaptive_tol },
            },
            hermite_nodes: o.hermite_nodes,
            sigma_cut: o.sigma_cut,
            outer_nodes: o.outer_nodes,
            fit_degree: o.fit_degree,
            tail_tol: o.tail_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn verify(&self) -> Result<VerifyConfig> {
        Ok(VerifyConfig {
            points: self.verify.points,
            quadrature: self.quadrature()?,
            oracle: if self.verify.oracle { Some(self.oracle()?) } else { None },
            ..VerifyConfig::default()
        })
    }
}

/// Default configuration for a built-in family in dimension `d`.
pub fn builtin_config(kind: &str, d: usize) -> RunConfig {
    let (lo, hi) = if kind == "log_divergence" { (0.5, 1.5) } else { (-1.0, 1.0) };
    let text = format!(r#"{{"cost": {{"kind": "{kind}", "d": {d}, "x_box": {}}}}}"#, serde_json::json!(vec![[lo, hi]; d]));
    RunConfig::from_json(&text).expect("built-in configuration")
}

pub const BUILTINS: [&str; 6] = ["quadratic", "translation", "bregman", "fenchel_young", "log_divergence", "bayes"];
