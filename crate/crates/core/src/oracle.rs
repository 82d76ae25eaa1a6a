//! Brute-force evaluation of `I(ε) = ∬ e^{−u/ε} (2πε)^{−d/2} ρ dx dy` and
//! empirical expansion coefficients.
//!
//! The inner integral uses a Gaussian proposal centred on the graph with
//! covariance `ε (∂²_yy u)^{-1}`, so the integrand seen by the rule is the
//! smooth ratio `e^{−u/ε + |z|²/2}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::expansion::DensitySpec;
use crate::exprlang::Expr;
use crate::graph_map::sigma_point;
use crate::jet::seed_vars;
use crate::scalar::Scalar;
use crate::quadrature::{adaptive_box, gauss_hermite, MAX_HERMITE_NODES, halton, legendre_grid, pairwise_sum, product};
use crate::tensor::{self, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerScheme {
    /// Tensor Gauss–Hermite with `hermite_nodes` per axis, falling back to
    /// adaptive quadrature at outer nodes whose rule crosses a domain edge.
    GaussHermite,
    /// Iterated adaptive Gauss–Kronrod over `[−sigma_cut, sigma_cut]^d`.
    Adaptive { tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    pub inner_scheme: InnerScheme,
    pub hermite_nodes: usize,
    pub sigma_cut: f64,
    pub outer_nodes: usize,
    pub fit_degree: usize,
    /// Fail with `TailBoundExceeded` when the audited tail bound is larger.
    pub tail_tol: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            eps_list: vec![1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3],
            inner_scheme: InnerScheme::GaussHermite,
            hermite_nodes: 40,
            sigma_cut: 12.0,
            outer_nodes: 32,
            fit_degree: 2,
            tail_tol: None,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() || self.eps_list.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("ε values must be positive".into()));
        }
        if self.eps_list.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Config("ε values must be strictly decreasing".into()));
        }
        if self.hermite_nodes < 8 || self.hermite_nodes > MAX_HERMITE_NODES {
            return Err(Error::Config(format!("hermite_nodes must lie in [8, {MAX_HERMITE_NODES}]")));
        }
        if !(self.sigma_cut > 0.0) || self.outer_nodes == 0 {
            return Err(Error::Config("sigma_cut and outer_nodes must be positive".into()));
        }
        if self.fit_degree < 1 {
            return Err(Error::Config("fit_degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// Precomputed Gaussian proposal at one outer node.
struct Proposal {
    x: Vec<f64>,
    weight: f64,
    y: Vec<f64>,
    chol: Tensor<f64>,
    det_l: f64,
}

fn proposals(cost: &CostFunction, nodes: usize) -> Result<Vec<Proposal>> {
    let d = cost.d;
    legendre_grid(&cost.domain.x_box, nodes)
        .into_par_iter()
        .map(|(x, weight)| {
            let sp = sigma_point(cost, &x)?;
            let hess = Tensor::from_fn(d, 2, |i| sp.u.d(&[d + i[0], d + i[1]]));
            let cov = tensor::inverse(&hess)?;
            let chol = tensor::cholesky(&cov)
                .ok_or_else(|| Error::MetricSignature(format!("∂²_yy u is not positive definite at x = {x:?}")))?;
            let det_l = (0..d).map(|i| chol.at(&[i, i])).product();
            Ok(Proposal { x, weight, y: sp.y, chol, det_l })
        })
        .collect()
}

fn in_box(y: &[f64], bx: Option<&Vec<(f64, f64)>>) -> bool {
    bx.is_none_or(|b| y.iter().zip(b).all(|(v, &(lo, hi))| *v >= lo && *v <= hi))
}

/// `e^{−u/ε + |z|²/2} ρ det L`, or `None` where the point leaves the domain of
/// `u` or `ρ` or the y-box (the integrand is zero there).
fn ratio(cost: &CostFunction, density: &DensitySpec, p: &Proposal, z: &[f64], eps: f64) -> Option<f64> {
    let d = z.len();
    let s = eps.sqrt();
    let y: Vec<f64> = (0..d)
        .map(|a| p.y[a] + s * (0..=a).map(|b| p.chol.at(&[a, b]) * z[b]).sum::<f64>())
        .collect();
    if !in_box(&y, cost.domain.y_box.as_ref()) {
        return None;
    }
    let u = cost.u_value(&p.x, &y).ok().filter(|u| u.is_finite())?;
    let rho = density.rho_value(cost, &p.x, &y).ok().filter(|r| r.is_finite())?;
    let z2: f64 = z.iter().map(|v| v * v).sum();
    Some((-u / eps + 0.5 * z2).exp() * rho * p.det_l)
}

fn adaptive_inner(cost: &CostFunction, density: &DensitySpec, p: &Proposal, eps: f64, half_width: f64, tol: f64) -> f64 {
    let d = cost.d;
    let norm = (2.0 * std::f64::consts::PI).powf(-0.5 * d as f64);
    let mut f = |z: &[f64]| {
        let z2: f64 = z.iter().map(|v| v * v).sum();
        norm * (-0.5 * z2).exp() * ratio(cost, density, p, z, eps).unwrap_or(0.0)
    };
    adaptive_box(&mut f, &vec![(-half_width, half_width); d], tol)
}

/// Nodes beyond `sigma_cut` standard deviations are dropped. When retained
/// nodes of non-negligible Gaussian weight fall outside the domain, the
/// integrand has an edge inside the rule's span and Gauss–Hermite loses its
/// spectral accuracy, so that outer node is redone adaptively.
fn inner(cost: &CostFunction, density: &DensitySpec, p: &Proposal, eps: f64, cfg: &OracleConfig, gh: &[(Vec<f64>, f64)]) -> f64 {
    match cfg.inner_scheme {
        InnerScheme::GaussHermite => {
            let mut vals = Vec::with_capacity(gh.len());
            let mut lost = 0.0;
            for (z, w) in gh {
                if z.iter().any(|v| v.abs() > cfg.sigma_cut) {
                    continue;
                }
                match ratio(cost, density, p, z, eps) {
                    Some(r) => vals.push(w * r),
                    None => lost += w,
                }
            }
            if lost > EDGE_TOL {
                let centre = ratio(cost, density, p, &vec![0.0; p.y.len()], eps).unwrap_or(1.0);
                let est = centre.abs().max(1e-300);
                return adaptive_inner(cost, density, p, eps, cfg.sigma_cut, EDGE_TOL * est);
            }
            pairwise_sum(&vals)
        }
        InnerScheme::Adaptive { tol } => adaptive_inner(cost, density, p, eps, cfg.sigma_cut, tol),
    }
}

/// Relative tolerance of the adaptive fallback.
const EDGE_TOL: f64 = 1e-12;

fn hermite_grid(d: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    let (z, w) = gauss_hermite(n);
    let axis: Vec<(f64, f64)> = z.into_iter().zip(w).collect();
    product(&vec![axis; d])
}

/// `(2πε)^{−d/2} e^{−λδ²/(2ε)} vol(X × Y)`, the mass bound outside the tube.
pub fn tail_bound(cost: &CostFunction, eps: f64) -> f64 {
    let dom = &cost.domain;
    let vol = |b: &[(f64, f64)]| b.iter().map(|(a, c)| c - a).product::<f64>();
    let vy = dom.y_box.as_ref().map_or(vol(&dom.x_box), |b| vol(b));
    let d = cost.d as f64;
    (2.0 * std::f64::consts::PI * eps).powf(-0.5 * d)
        * (-dom.convexity_lambda * dom.tubular_radius.powi(2) / (2.0 * eps)).exp()
        * vol(&dom.x_box)
        * vy
}

/// `I(ε)` at each ε of the list.
pub fn integrate_all(cost: &CostFunction, density: &DensitySpec, eps: &[f64], cfg: &OracleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let props = proposals(cost, cfg.outer_nodes)?;
    let gh = hermite_grid(cost.d, cfg.hermite_nodes);
    eps.iter()
        .map(|&e| {
            if !(e > 0.0) {
                return Err(Error::Domain(format!("ε = {e} must be positive")));
            }
            if let Some(tol) = cfg.tail_tol {
                let b = tail_bound(cost, e);
                if b > tol {
                    return Err(Error::TailBoundExceeded(format!("tail bound {b:.3e} exceeds {tol:.3e} at ε = {e}")));
                }
            }
            let vals: Vec<f64> = props.par_iter().map(|p| p.weight * inner(cost, density, p, e, cfg, &gh)).collect();
            Ok(pairwise_sum(&vals))
        })
        .collect()
}

pub fn integrate_full(cost: &CostFunction, density: &DensitySpec, eps: f64, cfg: &OracleConfig) -> Result<f64> {
    Ok(integrate_all(cost, density, &[eps], cfg)?[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleFit {
    #[serde(rename = "I0_hat")]
    pub i0: f64,
    #[serde(rename = "I1_hat")]
    pub i1: f64,
    /// Magnitude of the `ε²` coefficient.
    pub remainder: f64,
    /// Weighted RMS misfit.
    pub fit_residual: f64,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
}

/// Weighted least squares of `I(ε)` on `1, ε, …, ε^degree` with rows scaled by
/// `1/ε²`, so every residual is measured against the size of the neglected
/// remainder and the small-ε values control the low coefficients.
pub fn fit_coeffs(eps: &[f64], values: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let k = degree + 1;
    if eps.len() < k.max(4) {
        return Err(Error::Fit(format!("need at least {} ε values", k.max(4))));
    }
    let (lo, hi) = eps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if hi / lo < 10.0 {
        return Err(Error::Fit("ε grid spans less than one decade".into()));
    }
    let mut ata = Tensor::<f64>::zeros(k, 2);
    let mut atb = vec![0.0; k];
    for (&e, &v) in eps.iter().zip(values) {
        let w = 1.0 / (e * e);
        let row: Vec<f64> = (0..k).map(|p| w * e.powi(p as i32)).collect();
        for a in 0..k {
            atb[a] += row[a] * w * v;
            for b in 0..k {
                ata.set(&[a, b], ata.at(&[a, b]) + row[a] * row[b]);
            }
        }
    }
    // column scaling keeps the normal equations well conditioned
    let scale: Vec<f64> = (0..k).map(|a| ata.at(&[a, a]).sqrt()).collect();
    let scaled = Tensor::from_fn(k, 2, |i| ata.at(i) / (scale[i[0]] * scale[i[1]]));
    let diag_ratio = {
        let inv = tensor::inverse(&scaled).map_err(|e| Error::Fit(e.to_string()))?;
        (0..k).map(|a| inv.at(&[a, a])).fold(0.0f64, f64::max)
    };
    if !(diag_ratio < 1e14) {
        return Err(Error::Fit("normal equations are ill-conditioned".into()));
    }
    let rhs: Vec<f64> = (0..k).map(|a| atb[a] / scale[a]).collect();
    let sol = tensor::solve(&scaled, &rhs).map_err(|e| Error::Fit(e.to_string()))?;
    let coeffs: Vec<f64> = sol.iter().zip(&scale).map(|(c, s)| c / s).collect();
    let ss: f64 = eps
        .iter()
        .zip(values)
        .map(|(&e, &v)| {
            let fit: f64 = coeffs.iter().enumerate().map(|(p, c)| c * e.powi(p as i32)).sum();
            ((v - fit) / (e * e)).powi(2)
        })
        .sum();
    Ok((coeffs, (ss / eps.len() as f64).sqrt()))
}

pub fn empirical_coeffs(cost: &CostFunction, density: &DensitySpec, cfg: &OracleConfig) -> Result<OracleFit> {
    cfg.validate()?;
    let values = integrate_all(cost, density, &cfg.eps_list, cfg)?;
    let (c, fit_residual) = fit_coeffs(&cfg.eps_list, &values, cfg.fit_degree)?;
    Ok(OracleFit {
        i0: c[0],
        i1: c[1],
        remainder: c.get(2).copied().unwrap_or(0.0).abs(),
        fit_residual,
        eps: cfg.eps_list.clone(),
        values,
    })
}

/// Minimiser of an expression in `x` by Newton from `seed`.
pub fn minimise(u: &Expr, seed: &[f64]) -> Result<Vec<f64>> {
    let d = seed.len();
    let mut x = seed.to_vec();
    for _ in 0..100 {
        let xs = seed_vars(&x, 2)?;
        let j = u.eval(&xs, &[])? + xs[0].scale(0.0);
        let g: Vec<f64> = (0..d).map(|i| j.d(&[i])).collect();
        let h = Tensor::from_fn(d, 2, |i| j.d(&[i[0], i[1]]));
        if tensor::cholesky(&h).is_none() {
            return Err(Error::NonDegeneracy(format!("Hessian not positive definite at {x:?}")));
        }
        let step = tensor::solve(&h, &g)?;
        for (a, s) in x.iter_mut().zip(&step) {
            *a -= s;
        }
        if step.iter().all(|s| s.abs() <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))) {
            return Ok(x);
        }
    }
    let xs = seed_vars(&x, 1)?;
    let j = u.eval(&xs, &[])? + xs[0].scale(0.0);
    if (0..d).all(|i| j.d(&[i]).abs() < 1e-10) {
        Ok(x)
    } else {
        Err(Error::NonDegeneracy("Newton did not converge to a minimiser".into()))
    }
}

/// `∫_box e^{−u/ε} (2πε)^{−d/2} r dx` by adaptive quadrature, splitting each
/// axis at the interior minimiser located from `seed`.
pub fn single_laplace_oracle(u: &Expr, r: &Expr, eps: f64, bx: &[(f64, f64)], seed: &[f64], tol: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be positive")));
    }
    let xmin = minimise(u, seed)?;
    for (v, &(a, b)) in xmin.iter().zip(bx) {
        let margin = 1e-9 * (b - a);
        if !(*v > a + margin && *v < b - margin) {
            return Err(Error::Domain(format!("minimiser {xmin:?} is not interior to the box")));
        }
    }
    let d = bx.len();
    let norm = (2.0 * std::f64::consts::PI * eps).powf(-0.5 * d as f64);
    let mut g = |x: &[f64]| -> f64 {
        match (u.eval::<f64>(x, &[]), r.eval::<f64>(x, &[])) {
            (Ok(uv), Ok(rv)) if uv.is_finite() => norm * (-uv / eps).exp() * rv,
            _ => 0.0,
        }
    };
    // split into the 2^d orthants around the minimiser so the peak sits on a corner
    let mut total = 0.0;
    for mask in 0..(1usize << d) {
        let sub: Vec<(f64, f64)> = (0..d)
            .map(|k| if mask >> k & 1 == 0 { (bx[k].0, xmin[k]) } else { (xmin[k], bx[k].1) })
            .collect();
        total += adaptive_box(&mut g, &sub, tol / (1usize << d) as f64);
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub lambda: f64,
    pub delta: f64,
    /// Largest `λ/2 |y'−y|² − u` over samples inside the tube.
    pub tube_violation: f64,
    /// Largest `λδ²/2 − u` over samples outside the tube.
    pub outside_violation: f64,
    /// `min 2u / |y'−y|²` over the tube samples.
    pub empirical_lambda: f64,
    pub samples: usize,
}

impl AuditReport {
    pub fn violations(&self) -> bool {
        self.tube_violation > 0.0 || self.outside_violation > 0.0
    }
}

/// Sample `u` around Σ and report the worst breach of the quadratic lower
/// bound in the tube and of the level bound outside it. Advisory only.
pub fn audit_assumptions(cost: &CostFunction, samples: usize) -> Result<AuditReport> {
    let d = cost.d;
    let lambda = cost.domain.convexity_lambda;
    let delta = cost.domain.tubular_radius;
    let mut tube = f64::NEG_INFINITY;
    let mut outside = f64::NEG_INFINITY;
    let mut emp = f64::INFINITY;
    let mut count = 0;
    for i in 1..=samples {
        let h = halton(i, 2 * d + 1);
        let x: Vec<f64> = (0..d).map(|k| cost.domain.x_box[k].0 + h[k] * (cost.domain.x_box[k].1 - cost.domain.x_box[k].0)).collect();
        let sp = match sigma_point(cost, &x) {
            Ok(sp) => sp,
            Err(_) => continue,
        };
        let mut dir: Vec<f64> = (0..d).map(|k| 2.0 * h[d + k] - 1.0).collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-12 {
            continue;
        }
        dir.iter_mut().for_each(|v| *v /= n);
        // radius in (0, 3δ]: the first third lands inside the tube
        let r = 3.0 * delta * h[2 * d].max(1e-6);
        let y: Vec<f64> = sp.y.iter().zip(&dir).map(|(a, v)| a + r * v).collect();
        if let Some(b) = &cost.domain.y_box {
            if !in_box(&y, Some(b)) {
                continue;
            }
        }
        let u = match cost.u_value(&x, &y) {
            Ok(u) if u.is_finite() => u,
            _ => continue,
        };
        count += 1;
        if r <= delta {
            tube = tube.max(0.5 * lambda * r * r - u);
            emp = emp.min(2.0 * u / (r * r));
        } else {
            outside = outside.max(0.5 * lambda * delta * delta - u);
        }
    }
    // tiny rounding on exact quadratics must not count as a breach
    let clean = |v: f64| if v <= 1e-12 { 0.0 } else { v };
    Ok(AuditReport {
        lambda,
        delta,
        tube_violation: clean(tube.max(0.0)),
        outside_violation: clean(outside.max(0.0)),
        empirical_lambda: emp,
        samples: count,
    })
}
