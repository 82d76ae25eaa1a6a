//! The invariant suite behind `geolaplace verify`: every identity the library
//! relies on, checked at sample points of a concrete cost and density.

use serde::Serialize;

use crate::costs::CostFunction;
use crate::error::Result;
use crate::expansion::{divergence_identity, expand, isserlis_moment, stokes_closure, DensitySpec, QuadratureSpec};
use crate::geometry::{frame, gradient_split_check, mt_derivative_check, u_derivative_check, GeometryReport, Partials, SigmaData};
use crate::graph_map::sigma_point;
use crate::oracle::{empirical_coeffs, OracleConfig};
use crate::quadrature::{gauss_hermite, halton, product};
use crate::tensor::{self, Tensor};
use crate::Tensor64;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, tol: f64) -> Check {
        Check { name: name.to_string(), value, tol, pass: value <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub h_symmetry: f64,
    pub gauss: f64,
    pub lemma: f64,
    pub isserlis: f64,
    pub pointwise: f64,
    pub closure: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { h_symmetry: 1e-10, gauss: 1e-8, lemma: 1e-8, isserlis: 1e-9, pointwise: 1e-7, closure: 1e-6, oracle: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Sample points on Σ for the pointwise identities.
    pub points: usize,
    pub quadrature: QuadratureSpec,
    /// `None` skips the oracle comparison.
    pub oracle: Option<OracleConfig>,
    pub tol: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { points: 10, quadrature: QuadratureSpec::default(), oracle: Some(OracleConfig::default()), tol: Tolerances::default() }
    }
}

/// Quasi-random points strictly inside the x-box.
pub fn sample_points(cost: &CostFunction, n: usize) -> Vec<Vec<f64>> {
    (1..=n)
        .map(|i| {
            let h = halton(i, cost.d);
            cost.domain.x_box.iter().zip(h).map(|(&(a, b), t)| a + (b - a) * (0.05 + 0.9 * t)).collect()
        })
        .collect()
}

/// `|a − b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Largest relative error between Isserlis' formula and tensor Gauss–Hermite
/// quadrature over all moments of order ≤ `max_order` for a quasi-random SPD
/// covariance in dimension `d`.
pub fn isserlis_check(d: usize, max_order: usize, seed: usize) -> f64 {
    let l = Tensor::from_fn(d, 2, |i| {
        let h = halton(seed * 31 + i[0] * d + i[1] + 1, 1)[0];
        match i[0].cmp(&i[1]) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5 + h,
            std::cmp::Ordering::Greater => h - 0.5,
        }
    });
    let cov: Tensor64 = tensor::matmul(&l, &l.permute(&[1, 0]));
    let abs_cov = cov.map(|v| v.abs());
    let (z, w) = gauss_hermite(max_order / 2 + 2);
    let axis: Vec<(f64, f64)> = z.into_iter().zip(w).collect();
    let grid = product(&vec![axis; d]);
    let mut worst = 0.0f64;
    for order in 1..=max_order {
        for idx in multisets(d, order) {
            let exact = isserlis_moment(&cov, &idx, 1.0);
            let quad: f64 = grid
                .iter()
                .map(|(zs, wt)| {
                    let ys: Vec<f64> = (0..d).map(|a| (0..d).map(|b| l.at(&[a, b]) * zs[b]).sum()).collect();
                    wt * idx.iter().map(|&k| ys[k]).product::<f64>()
                })
                .sum();
            // odd moments vanish; measure them against the same-order scale
            let scale = if exact == 0.0 { isserlis_moment(&abs_cov, &idx, 1.0) } else { exact.abs() };
            let scale = if scale == 0.0 { abs_cov.max_abs().powi(order as i32 / 2 + 1) } else { scale };
            worst = worst.max((quad - exact).abs() / scale);
        }
    }
    worst
}

/// Nondecreasing index lists of the given length over `0..d`.
fn multisets(d: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in multisets(d, len - 1) {
        let start = head.last().copied().unwrap_or(0);
        for k in start..d {
            let mut v = head.clone();
            v.push(k);
            out.push(v);
        }
    }
    out
}

/// Run every check for one cost and density.
pub fn run(cost: &CostFunction, density: &DensitySpec, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let t = &cfg.tol;
    let (mut asym, mut gauss, mut mt, mut ud, mut split, mut point) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in sample_points(cost, cfg.points) {
        let sp = sigma_point(cost, &x)?;
        let rep = GeometryReport::compute(&sp)?;
        asym = asym.max(rep.h_asymmetry);
        gauss = gauss.max(rep.gauss_residual_full);
        let (a, b) = mt_derivative_check(&sp)?;
        mt = mt.max(a).max(b);
        let (a, b) = u_derivative_check(&sp)?;
        ud = ud.max(a).max(b);
        let (_, fj) = density.jets(&sp, 2)?;
        let sd = SigmaData::plain(&sp);
        let fr = frame(&sd)?;
        let (a, b) = gradient_split_check(&sd, &fr, &Partials::plain(&fj));
        split = split.max(a).max(b);
        point = point.max(divergence_identity(&sp, density)?.abs());
    }
    let iss = (1..=3).map(|d| isserlis_check(d, 6, d)).fold(0.0, f64::max);
    let mut out = vec![
        Check::new("h_symmetry", asym, t.h_symmetry),
        Check::new("gauss_equation", gauss, t.gauss),
        Check::new("volume_derivatives", mt, t.lemma),
        Check::new("cost_derivatives_on_sigma", ud, t.lemma),
        Check::new("gradient_split", split, t.lemma),
        Check::new("isserlis_vs_quadrature", iss, t.isserlis),
        Check::new("pointwise_divergence_identity", point, t.pointwise),
    ];
    let (lhs, rhs) = stokes_closure(cost, density, cfg.quadrature.nodes)?;
    out.push(Check::new("divergence_theorem_closure", (lhs - rhs).abs(), t.closure));
    let e = expand(cost, density, &cfg.quadrature)?;
    out.push(Check::new("coordinate_vs_geometric", rel_err(e.i1_total, e.i1_coordinate, 1.0), t.closure));
    if let Some(ocfg) = &cfg.oracle {
        let fit = empirical_coeffs(cost, density, ocfg)?;
        out.push(Check::new("oracle_I0", rel_err(fit.i0, e.i0, 1e-6), t.oracle));
        out.push(Check::new("oracle_I1", rel_err(fit.i1, e.i1_total, 1e-6), t.oracle));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isserlis_matches_quadrature() {
        for d in 1..=3 {
            assert!(isserlis_check(d, 6, 7) < 1e-9);
        }
    }

    #[test]
    fn rel_err_floor() {
        assert_eq!(rel_err(1e-12, 0.0, 1e-6), 1e-6);
        assert!((rel_err(1.01, 1.0, 1e-6) - 0.01).abs() < 1e-12);
    }
}
