//! First-order Laplace expansions: the coordinate formula, Gaussian moments,
//! the geometric integrands over Σ and the boundary term.
//!
//! The outer integral runs over the first argument of the cost (the chart of
//! Σ) and the Laplace method acts on the second. In that convention the
//! boundary field is `∇f + KN − fKH`; exchanging the roles of the arguments
//! flips `K`, which turns it into `∇f − KN + fKH`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{is_positive_definite, CostFunction};
use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::geometry::{
    ambient_curvature_tensor, ambient_laplacian, ambient_scalar, brackets, divergence, expr_jet, frame, gradient_split,
    mt_jet, normal_dot_mean, sigma_curvature_tensor, Frame, GradientSplit, Partials, SigmaData,
};
use crate::graph_map::{sigma_point, SigmaPoint};
use crate::jet::seed_vars;
use crate::quadrature::{gauss_legendre, legendre_grid, pairwise_sum, product};
use crate::scalar::Scalar;
use crate::tensor::{self, Tensor};
use crate::{Jet64, Tensor64};

/// Sign of `KN` in the boundary field.
pub const BOUNDARY_N_SIGN: f64 = 1.0;
/// Sign of `fKH` in the boundary field.
pub const BOUNDARY_H_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Σ charted by the first argument.
    Default,
    /// Arguments exchanged; only for costs whose graph is the diagonal.
    Swapped,
}

#[derive(Debug, Clone, PartialEq)]
enum DensityKind {
    Rho(Expr),
    F(Expr),
}

/// The density `r = ρ dx dy`, or equivalently `f = ρ / m̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    kind: DensityKind,
}

impl DensitySpec {
    pub fn unit() -> Self {
        DensitySpec { kind: DensityKind::Rho(Expr::Const(1.0)) }
    }

    pub fn rho(e: Expr) -> Self {
        DensitySpec { kind: DensityKind::Rho(e) }
    }

    /// Prescribe `f` directly; `ρ = f m̃`.
    pub fn f(e: Expr) -> Self {
        DensitySpec { kind: DensityKind::F(e) }
    }

    /// The same density with the two arguments exchanged.
    pub fn swapped(&self) -> Self {
        let kind = match &self.kind {
            DensityKind::Rho(e) => DensityKind::Rho(e.swap_args()),
            DensityKind::F(e) => DensityKind::F(e.swap_args()),
        };
        DensitySpec { kind }
    }

    pub fn is_constant_f(&self) -> bool {
        matches!(&self.kind, DensityKind::F(Expr::Const(_)))
    }

    /// `ρ(x, y)` at a point.
    pub fn rho_value(&self, cost: &CostFunction, x: &[f64], y: &[f64]) -> Result<f64> {
        match &self.kind {
            DensityKind::Rho(e) => e.eval::<f64>(x, y),
            DensityKind::F(e) => {
                let d = x.len();
                let u = cost.u_jet(x, y, 2)?;
                let c = Tensor::from_fn(d, 2, |i| u.d(&[i[0], d + i[1]]));
                Ok(e.eval::<f64>(x, y)? * tensor::det(&c).abs())
            }
        }
    }

    /// Jets of `ρ` and `f` in all 2d variables at a Σ point, to `order ≤ 2`.
    pub fn jets(&self, sp: &SigmaPoint, order: usize) -> Result<(Jet64, Jet64)> {
        let mt = mt_jet(&sp.u, sp.d())?.truncate(order);
        match &self.kind {
            DensityKind::Rho(e) => {
                let rho = expr_jet(e, &sp.x, &sp.y, order)?;
                let f = rho.try_div(&mt)?;
                Ok((rho, f))
            }
            DensityKind::F(e) => {
                let f = expr_jet(e, &sp.x, &sp.y, order)?;
                Ok((f.clone() * mt, f))
            }
        }
    }
}

/// Quadrature settings for [`expand`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub orientation: Orientation,
    pub keep_samples: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 32, boundary_nodes: 32, orientation: Orientation::Default, keep_samples: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeSample {
    pub x: Vec<f64>,
    pub weight: f64,
    pub m: f64,
    pub f: f64,
    pub l_geom: f64,
    pub l_coord: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionResult {
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "I1_interior")]
    pub i1_interior: f64,
    #[serde(rename = "I1_boundary")]
    pub i1_boundary: f64,
    #[serde(rename = "I1_total")]
    pub i1_total: f64,
    /// `∫ L_coord dm`, the same coefficient before the geometric rewrite.
    #[serde(rename = "I1_coordinate")]
    pub i1_coordinate: f64,
    pub d: usize,
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub x_box: Vec<(f64, f64)>,
    pub orientation: Orientation,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<NodeSample>,
}

/// Inverse-Hessian helper shared by the coordinate formula.
fn hessian_inverse(u: &Jet64, d: usize) -> Result<(Tensor64, f64)> {
    let hess = Tensor::from_fn(d, 2, |i| u.d(&[i[0], i[1]]));
    if !is_positive_definite(&hess) {
        return Err(Error::MetricSignature("Hessian at the minimum is not positive definite".into()));
    }
    Ok((tensor::inverse(&hess)?, tensor::det(&hess)))
}

/// `(c0, c1)` of `∫ e^{−u/ε}(2πε)^{−d/2} r dx ≈ c0 + ε c1` at a nondegenerate
/// minimum; `u` to order 4 and `r` to order 2, both jets at the minimum.
pub fn coord_first_order(u: &Jet64, r: &Jet64) -> Result<(f64, f64)> {
    let d = u.num_vars();
    let (ui, det) = hessian_inverse(u, d)?;
    let inv = |a: usize, b: usize| ui.at(&[a, b]);
    let u3 = Tensor::from_fn(d, 3, |a| u.d(a));
    let r0 = r.val();
    // v_i = u_{ijk} u^{jk}
    let v: Vec<f64> = (0..d)
        .map(|i| (0..d).flat_map(|j| (0..d).map(move |k| (j, k))).map(|(j, k)| u3.at(&[i, j, k]) * inv(j, k)).sum())
        .collect();
    let (mut t1, mut t2, mut t3, mut t4, mut t5) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            t1 += inv(i, j) * r.d(&[i, j]);
            t2 += inv(i, j) * v[j] * r.d(&[i]);
            t3 += v[i] * inv(i, j) * v[j];
            for k in 0..d {
                let mut raised = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            raised += u3.at(&[a, b, c]) * inv(a, i) * inv(b, j) * inv(c, k);
                        }
                    }
                }
                t4 += raised * u3.at(&[i, j, k]);
                for l in 0..d {
                    t5 += u.d(&[i, j, k, l]) * inv(i, j) * inv(k, l);
                }
            }
        }
    }
    let c1 = 0.5 * t1 - 0.5 * t2 + r0 * (t3 / 8.0 + t4 / 12.0 - t5 / 8.0);
    let s = det.sqrt();
    Ok((r0 / s, c1 / s))
}

/// [`coord_first_order`] for expressions in the `x` variables.
pub fn coord_first_order_expr(u: &Expr, r: &Expr, x_star: &[f64]) -> Result<(f64, f64)> {
    let xs = seed_vars(x_star, 4)?;
    let uj = u.eval(&xs, &[])? + xs[0].scale(0.0);
    let xs2 = seed_vars(x_star, 2)?;
    let rj = r.eval(&xs2, &[])? + xs2[0].scale(0.0);
    coord_first_order(&uj, &rj)
}

/// `ε^{n/2} Σ_{pairings} Π cov`, where `n` is the number of indices.
pub fn isserlis_moment(cov: &Tensor64, indices: &[usize], eps: f64) -> f64 {
    if indices.len() % 2 == 1 {
        return 0.0;
    }
    fn pairings(cov: &Tensor64, rest: &[usize]) -> f64 {
        if rest.is_empty() {
            return 1.0;
        }
        let first = rest[0];
        let mut s = 0.0;
        for k in 1..rest.len() {
            let mut others = rest[1..].to_vec();
            others.remove(k - 1);
            s += cov.at(&[first, rest[k]]) * pairings(cov, &others);
        }
        s
    }
    eps.powi(indices.len() as i32 / 2) * pairings(cov, indices)
}

/// Everything the expansion needs at one Σ point.
#[derive(Debug, Clone)]
pub struct PointTerms {
    pub m: f64,
    pub mt: f64,
    pub f: f64,
    pub rho: f64,
    pub l_geom: f64,
    pub l_coord: f64,
    /// Tangential coordinates of the boundary field.
    pub v_up: Vec<f64>,
    pub laplacian: f64,
    pub n_dot_h: f64,
    pub rt_scalar: f64,
    pub r_scalar: f64,
    pub hh: f64,
    pub hh_mean: f64,
}

fn boundary_field<S: Scalar>(gs: &GradientSplit<S>, fr: &Frame<S>, f: &S) -> Vec<S> {
    (0..gs.g_up.len())
        .map(|i| {
            gs.g_up[i].clone() + gs.n_up[i].scale(BOUNDARY_N_SIGN) + (f.clone() * fr.mean_up[i].clone()).scale(BOUNDARY_H_SIGN)
        })
        .collect()
}

/// `L_geom = −⅛Δ̃f + ¼⟨N,H⟩ + f(3R̃/32 − R/8 + ⟨h,h⟩/24 − ⟨H,H⟩/8)`.
pub fn geometric_interior_integrand(sp: &SigmaPoint, density: &DensitySpec) -> Result<f64> {
    Ok(point_terms(sp, density, false)?.l_geom)
}

/// `L_coord`: the coordinate first-order term of the fiber integral over the
/// second argument, as a density against `dm`.
pub fn coordinate_interior_integrand(sp: &SigmaPoint, density: &DensitySpec) -> Result<f64> {
    Ok(point_terms(sp, density, false)?.l_coord)
}

/// `¼ g(V, ν) dσ` per unit face coordinate volume, for the face `x_axis = const`
/// with outward side `outward = ±1`.
pub fn boundary_integrand(sp: &SigmaPoint, density: &DensitySpec, axis: usize, outward: f64) -> Result<f64> {
    let t = point_terms(sp, density, false)?;
    Ok(0.25 * outward * t.m * t.v_up[axis])
}

/// Compute the pointwise terms; `with_divergence` adds the dual pass used by
/// [`divergence_identity`].
pub fn point_terms(sp: &SigmaPoint, density: &DensitySpec, with_divergence: bool) -> Result<PointTerms> {
    point_terms_full(sp, density, with_divergence).map(|(t, _)| t)
}

fn point_terms_full(sp: &SigmaPoint, density: &DensitySpec, with_divergence: bool) -> Result<(PointTerms, f64)> {
    let d = sp.d();
    let sd = SigmaData::plain(sp);
    let fr = frame(&sd)?;
    let dual_sd = SigmaData::dual(sp);
    let dual = frame(&dual_sd)?;
    let (rho, fj) = density.jets(sp, 2)?;
    let fp = Partials::plain(&fj);
    let rt = ambient_curvature_tensor(&sd, &fr);
    let rt_scalar = ambient_scalar(&fr, &rt);
    let rtensor = sigma_curvature_tensor(&dual);
    let mut r_scalar = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    r_scalar += fr.ginv.at(&[i, k]) * fr.ginv.at(&[j, l]) * rtensor.at(&[i, j, k, l]);
                }
            }
        }
    }
    let (hh, hh_mean) = brackets(&fr);
    let lap = ambient_laplacian(&fr, &fp);
    let gs = gradient_split(&sd, &fr, &fp);
    let n_dot_h = normal_dot_mean(&fr, &gs);
    let f = fj.val();
    let l_geom =
        -lap / 8.0 + n_dot_h / 4.0 + f * (3.0 * rt_scalar / 32.0 - r_scalar / 8.0 + hh / 24.0 - hh_mean / 8.0);
    let v_up = boundary_field(&gs, &fr, &f);

    // coordinate formula for the fiber integral over the second argument
    let ys: Vec<usize> = (d..2 * d).collect();
    let (_, c1) = coord_first_order(&sp.u.restrict_vars(&ys), &rho.restrict_vars(&ys))?;
    let l_coord = c1 / fr.m;

    let mut div = f64::NAN;
    if with_divergence {
        let fd = Partials::dual(&fj, sp);
        let gsd = gradient_split(&dual_sd, &dual, &fd);
        let fval = fd.get(&[]);
        let vd = boundary_field(&gsd, &dual, &fval);
        div = divergence(&dual, &vd);
    }
    Ok((
        PointTerms {
            m: fr.m,
            mt: fr.mt,
            f,
            rho: rho.val(),
            l_geom,
            l_coord,
            v_up,
            laplacian: lap,
            n_dot_h,
            rt_scalar,
            r_scalar,
            hh,
            hh_mean,
        },
        div,
    ))
}

/// `L_coord − L_geom − ¼ div V` at a Σ point.
pub fn divergence_identity(sp: &SigmaPoint, density: &DensitySpec) -> Result<f64> {
    let (t, div) = point_terms_full(sp, density, true)?;
    Ok(t.l_coord - t.l_geom - 0.25 * div)
}

fn check_orientation(cost: &CostFunction, quad: &QuadratureSpec) -> Result<()> {
    if quad.orientation == Orientation::Swapped && !cost.diagonal_graph() {
        return Err(Error::Config("swapped orientation needs a cost whose vanishing set is the diagonal".into()));
    }
    Ok(())
}

/// The cost and density in the requested orientation.
pub fn oriented(cost: &CostFunction, density: &DensitySpec, orientation: Orientation) -> (CostFunction, DensitySpec) {
    match orientation {
        Orientation::Default => (cost.clone(), density.clone()),
        // the chart box carries over: Σ is the diagonal, so y(X) = X
        Orientation::Swapped => (cost.swapped(cost.domain.clone()), density.swapped()),
    }
}

/// `I0`, `I1` (interior, boundary, total) over the x-box.
pub fn expand(cost: &CostFunction, density: &DensitySpec, quad: &QuadratureSpec) -> Result<ExpansionResult> {
    check_orientation(cost, quad)?;
    let (cost, density) = oriented(cost, density, quad.orientation);
    let bx = cost.domain.x_box.clone();
    let d = cost.d;
    let grid = legendre_grid(&bx, quad.nodes);
    let terms: Vec<(Vec<f64>, f64, PointTerms)> = grid
        .into_par_iter()
        .map(|(x, w)| {
            let sp = sigma_point(&cost, &x)?;
            let t = point_terms(&sp, &density, false)?;
            Ok((x, w, t))
        })
        .collect::<Result<_>>()?;
    let i0 = pairwise_sum(&terms.iter().map(|(_, w, t)| w * t.f * t.m).collect::<Vec<_>>());
    let i1_int = pairwise_sum(&terms.iter().map(|(_, w, t)| w * t.l_geom * t.m).collect::<Vec<_>>());
    let i1_coord = pairwise_sum(&terms.iter().map(|(_, w, t)| w * t.l_coord * t.m).collect::<Vec<_>>());
    let i1_bdy = boundary_integral(&cost, &density, quad.boundary_nodes)?;
    let samples = if quad.keep_samples {
        terms
            .into_iter()
            .map(|(x, w, t)| NodeSample { x, weight: w, m: t.m, f: t.f, l_geom: t.l_geom, l_coord: t.l_coord })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ExpansionResult {
        i0,
        i1_interior: i1_int,
        i1_boundary: i1_bdy,
        i1_total: i1_int + i1_bdy,
        i1_coordinate: i1_coord,
        d,
        nodes: quad.nodes,
        boundary_nodes: quad.boundary_nodes,
        x_box: bx,
        orientation: quad.orientation,
        samples,
    })
}

/// `∮ ¼ g(V, ν) dσ` over the faces of the x-box.
pub fn boundary_integral(cost: &CostFunction, density: &DensitySpec, nodes: usize) -> Result<f64> {
    let bx = &cost.domain.x_box;
    let d = cost.d;
    let (gx, gw) = gauss_legendre(nodes);
    let mut jobs = Vec::new();
    for axis in 0..d {
        let axes: Vec<Vec<(f64, f64)>> = (0..d)
            .filter(|&k| k != axis)
            .map(|k| {
                let (a, b) = bx[k];
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                gx.iter().zip(&gw).map(|(t, w)| (c + h * t, h * w)).collect()
            })
            .collect();
        for (side, outward) in [(bx[axis].0, -1.0), (bx[axis].1, 1.0)] {
            for (rest, w) in product(&axes) {
                let mut x = rest.clone();
                x.insert(axis, side);
                jobs.push((x, w, axis, outward));
            }
        }
    }
    let vals: Vec<f64> = jobs
        .into_par_iter()
        .map(|(x, w, axis, outward)| {
            let sp = sigma_point(cost, &x)?;
            Ok(w * boundary_integrand(&sp, density, axis, outward)?)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals))
}

/// `(∫(L_coord − L_geom) dm, ∮ ¼ g(V,ν) dσ)`; equal by the divergence theorem.
pub fn stokes_closure(cost: &CostFunction, density: &DensitySpec, nodes: usize) -> Result<(f64, f64)> {
    let grid = legendre_grid(&cost.domain.x_box, nodes);
    let vals: Vec<f64> = grid
        .into_par_iter()
        .map(|(x, w)| {
            let sp = sigma_point(cost, &x)?;
            let t = point_terms(&sp, density, false)?;
            Ok(w * (t.l_coord - t.l_geom) * t.m)
        })
        .collect::<Result<_>>()?;
    Ok((pairwise_sum(&vals), boundary_integral(cost, density, nodes)?))
}

/// `K_τ(z) = τ^{−d/2} K(z/√τ)` with `K(z) = e^{−|z|²/4} / |z|^{d−1}`;
/// `+∞` at the origin when `d ≥ 2`.
pub fn remainder_kernel(z: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("kernel scale τ = {tau} must be positive")));
    }
    let d = z.len() as i32;
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt() / tau.sqrt();
    if r == 0.0 && d >= 2 {
        return Ok(f64::INFINITY);
    }
    Ok(tau.powf(-0.5 * d as f64) * (-r * r / 4.0).exp() / r.powi(d - 1))
}

/// `Γ(p/2)` for a positive integer `p`, exactly through the integer and
/// half-integer recursions.
pub fn gamma_half(p: u32) -> f64 {
    assert!(p > 0, "Γ(0) is undefined");
    let mut v = if p.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if p.is_multiple_of(2) { 2 } else { 1 };
    while k < p {
        v *= k as f64 / 2.0;
        k += 2;
    }
    v
}

/// Closed form of [`taylor_constant`]: `2^p Γ((p+1)/2) / (2π)^{d/2}`, `p = k+n+d−2`.
pub fn taylor_constant_closed(d: usize, n: usize, k: usize) -> f64 {
    let p = (k + n + d) as i32 - 2;
    2f64.powi(p) * gamma_half((p + 1) as u32) / (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0)
}

/// `C(d,n,k) = ∫₀^∞ s^{k+n+d−2} e^{−s²/4} ds / (2π)^{d/2}` by adaptive quadrature.
pub fn taylor_constant(d: usize, n: usize, k: usize) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::Domain("taylor_constant needs n ≥ 1 and d ≥ 1".into()));
    }
    let p = (k + n + d) as i32 - 2;
    let mut f = |s: f64| s.powi(p) * (-s * s / 4.0).exp();
    // the integrand is below 1e-300 well before s = 60 for the orders in use
    let upper = 40.0 + 4.0 * (p as f64).sqrt();
    let v = crate::quadrature::adaptive(&mut f, 0.0, upper, 1e-14 * taylor_scale(p));
    Ok(v / (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0))
}

fn taylor_scale(p: i32) -> f64 {
    2f64.powi(p) * gamma_half((p + 1) as u32)
}

/// `‖K‖_{L¹(ℝ^d)} = |S^{d−1}| √π`.
pub fn kernel_l1_norm(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d as u32) * std::f64::consts::PI.sqrt()
}
