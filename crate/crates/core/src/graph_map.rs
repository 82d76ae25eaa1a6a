//! The vanishing surface Σ as a graph `y(x)`, with derivatives to third order.

use crate::costs::{is_positive_definite, CostFunction};
use crate::error::{Error, Result};
use crate::jet::{seed_vars, Jet};
use crate::tensor::{self, IndexClass, Tensor};
use crate::{Jet64, Tensor64};

/// Order of the `u` jets carried by a [`SigmaPoint`].
pub const U_ORDER: usize = 4;
/// Condition-number ceiling for the mixed block `c_{i j̄}`.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SigmaPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Jet of `u` at `(x, y)` in the variables `(x, y)`.
    pub u: Jet64,
    /// `∂_i y^ī`, slots `(i, ī)`.
    pub dy: Tensor64,
    /// `∂_{ij} y^k̄`.
    pub d2y: Tensor64,
    /// `∂_{ijk} y^ℓ̄`.
    pub d3y: Tensor64,
    /// `y(x + δ)` as jets in `δ`, exact to third order.
    pub y_map: Vec<Jet64>,
}

impl SigmaPoint {
    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// Partial derivative of `u` by variable list (`x` first, then `y`).
    pub fn u_d(&self, vars: &[usize]) -> f64 {
        self.u.d(vars)
    }

    /// Restrict a jet in the 2d variables `(x, y)` to Σ, giving a jet in `δ`
    /// for `x + δ` (exact up to third order).
    pub fn restrict(&self, f: &Jet64) -> Jet64 {
        let args = self.embedding_args();
        f.compose(&args)
    }

    fn embedding_args(&self) -> Vec<Jet64> {
        let mut args = seed_vars(&self.x, 3).expect("order 3 seed");
        args.extend(self.y_map.iter().cloned());
        args
    }
}

fn grad_hess_y(cost: &CostFunction, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>, Tensor64)> {
    let d = x.len();
    let j = cost.u_jet(x, y, 2)?;
    let g = (0..d).map(|a| j.d(&[d + a])).collect();
    let h = Tensor::from_fn(d, 2, |i| j.d(&[d + i[0], d + i[1]]));
    Ok((j.val(), g, h))
}

/// Newton iteration on `∂_y u(x, ·) = 0` with Armijo damping on `u`.
pub fn solve_graph(cost: &CostFunction, x: &[f64], y0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let fail = |message: String| Error::GraphSolve { x: x.to_vec(), message };
    let mut y = y0.to_vec();
    for _ in 0..max_iter {
        let (u, g, h) = grad_hess_y(cost, x, &y).map_err(|e| fail(e.to_string()))?;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= tol {
            if u > tol.max(1e-12) {
                return Err(fail(format!("stationary point with u = {u:.3e} > 0")));
            }
            return Ok(y);
        }
        if !is_positive_definite(&h) {
            return Err(fail("∂²_yy u is not positive definite".into()));
        }
        let step = tensor::solve(&h, &g).map_err(|e| fail(e.to_string()))?;
        let slope: f64 = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let ok = matches!(cost.u_value(x, &trial), Ok(v) if v <= u + 1e-4 * t * slope + 1e-15 * u.abs().max(1.0));
            if ok || t < 1e-12 {
                let tiny = step.iter().all(|s| (t * s).abs() <= 1e-16 * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                y = trial;
                if tiny {
                    // cannot improve further in floating point
                    let (u, g, _) = grad_hess_y(cost, x, &y).map_err(|e| fail(e.to_string()))?;
                    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if gmax <= 100.0 * tol && u <= tol.max(1e-12) {
                        return Ok(y);
                    }
                    return Err(fail(format!("stalled with |∂_y u| = {gmax:.3e}")));
                }
                break;
            }
            t *= 0.5;
        }
    }
    Err(fail(format!("no convergence in {max_iter} iterations")))
}

/// Solve for Σ over `x` from the family's analytic guess.
pub fn sigma_point(cost: &CostFunction, x: &[f64]) -> Result<SigmaPoint> {
    let y = solve_graph(cost, x, &cost.graph_guess(x), 1e-12, 100)?;
    graph_jets(cost, x, &y)
}

/// Implicit differentiation of `∂_i u(x, y(x)) = 0` to third order.
pub fn graph_jets(cost: &CostFunction, x: &[f64], y: &[f64]) -> Result<SigmaPoint> {
    let d = x.len();
    let u = cost.u_jet(x, y, U_ORDER)?;
    let c = Tensor::from_fn(d, 2, |i| u.d(&[i[0], d + i[1]])).set_classes(vec![IndexClass::Unbarred, IndexClass::Barred]);
    let cinv = tensor::invert_sym(&c, COND_LIMIT)?;
    let grads: Vec<Jet64> = (0..d).map(|i| u.derivative(i)).collect::<Result<_>>()?;
    let xs = seed_vars(x, 3)?;
    let layout = xs[0].layout().expect("seeded");
    let base = xs[0].base_point().map(|b| b.to_vec());
    let mut ys: Vec<Jet64> = y.iter().map(|&v| Jet::constant_in(layout, base.clone().map(Into::into), v)).collect();
    for k in 1..=3 {
        let mut args = xs.clone();
        args.extend(ys.iter().cloned());
        let resid: Vec<Jet64> = grads.iter().map(|g| g.compose(&args)).collect();
        let mut coeffs: Vec<Vec<f64>> = ys.iter().map(|j| j.coeffs().to_vec()).collect();
        for idx in 0..layout.len() {
            if layout.degree(idx) != k {
                continue;
            }
            for (jb, cj) in coeffs.iter_mut().enumerate() {
                let mut v = 0.0;
                for (i, r) in resid.iter().enumerate() {
                    v -= cinv.at(&[jb, i]) * r.coeffs()[idx];
                }
                cj[idx] = v;
            }
        }
        ys = coeffs
            .into_iter()
            .map(|cf| Jet::from_coeffs(d, 3, cf, base.clone()))
            .collect::<Result<_>>()?;
    }
    let ub = IndexClass::Unbarred;
    let bar = IndexClass::Barred;
    let dy = Tensor::from_fn(d, 2, |i| ys[i[1]].d(&[i[0]])).set_classes(vec![ub, bar]);
    let d2y = Tensor::from_fn(d, 3, |i| ys[i[2]].d(&[i[0], i[1]])).set_classes(vec![ub, ub, bar]);
    let d3y = Tensor::from_fn(d, 4, |i| ys[i[3]].d(&[i[0], i[1], i[2]])).set_classes(vec![ub, ub, ub, bar]);
    Ok(SigmaPoint { x: x.to_vec(), y: y.to_vec(), u, dy, d2y, d3y, y_map: ys })
}

/// Largest Taylor coefficient (orders 0–3) of `u` and `∂_y u` restricted to Σ.
pub fn chain_residual(sp: &SigmaPoint) -> f64 {
    let d = sp.d();
    let mut worst = sp.restrict(&sp.u).coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for a in 0..d {
        let g = sp.u.derivative(d + a).expect("order ≥ 1");
        worst = worst.max(sp.restrict(&g).coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    worst
}
