//! Cost functions, c-divergences and the built-in example families.
//!
//! Functions of a single vector argument (`f`, `f*`, `U`, the model `F`)
//! are written in the variables `x1..xd`. In an expression cost, `φ` uses
//! the `x` variables and `ψ` may use either `y` or `x` as its dummy.

use crate::error::{Error, Result};
use crate::exprlang::{parse, BinOp, Expr};
use crate::jet::{seed_vars, Jet};
use crate::quadrature::halton;
use crate::scalar::Scalar;
use crate::tensor::{self, Tensor};
use crate::Jet64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub x_box: Vec<(f64, f64)>,
    pub tubular_radius: f64,
    pub convexity_lambda: f64,
    pub y_box: Option<Vec<(f64, f64)>>,
}

impl DomainSpec {
    pub fn new(x_box: Vec<(f64, f64)>, delta: f64, lambda: f64) -> Result<Self> {
        let d = DomainSpec { x_box, tubular_radius: delta, convexity_lambda: lambda, y_box: None };
        d.validate()?;
        Ok(d)
    }

    /// The cube `(a, b)^d`.
    pub fn cube(d: usize, a: f64, b: f64) -> Self {
        DomainSpec { x_box: vec![(a, b); d], tubular_radius: 1.0, convexity_lambda: 1.0, y_box: None }
    }

    pub fn with_y_box(mut self, y_box: Vec<(f64, f64)>) -> Self {
        self.y_box = Some(y_box);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tubular_radius > 0.0) || !(self.convexity_lambda > 0.0) {
            return Err(Error::Config("delta and lambda must be positive".into()));
        }
        let boxes = std::iter::once(&self.x_box).chain(self.y_box.as_ref());
        for bx in boxes {
            if bx.is_empty() || bx.iter().any(|&(a, b)| !(a < b)) {
                return Err(Error::Config("boxes must be non-degenerate".into()));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.x_box.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `u = c − φ(x) − ψ(y)`; `c` alone when no potentials are given.
    General { c: Expr, phi: Option<Expr>, psi: Option<Expr> },
    /// `u = U(x − y)`.
    Translation { potential: Expr },
    /// `u = f(x) − f(y) − ⟨∇f(y), x − y⟩`.
    Bregman { f: Expr },
    /// `u = f(x) + f*(y) − ⟨x, y⟩`, with `f*` computed numerically when absent.
    FenchelYoung { f: Expr, fstar: Option<Expr> },
    /// `u = f(x) − f(y) − log(1 + α⟨∇f(y), x − y⟩)/α`.
    LogDivergence { f: Expr, alpha: f64 },
    /// `u = |y − F(x)|²/2`.
    Bayes { model: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub d: usize,
    pub kind: CostKind,
    pub domain: DomainSpec,
    /// Roles of the two arguments exchanged: `ũ(a, b) = u(b, a)`.
    pub swapped: bool,
}

fn seeded(x: &[f64], y: &[f64], order: usize) -> Result<(Vec<Jet64>, Vec<Jet64>)> {
    let pt: Vec<f64> = x.iter().chain(y).copied().collect();
    let mut z = seed_vars(&pt, order)?;
    let ys = z.split_off(x.len());
    Ok((z, ys))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (p, q)| acc + p.clone() * q.clone())
}

fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(p, q)| p.clone() - q.clone()).collect()
}

/// Taylor polynomial of `f` at `p0` in `p0.len()` variables.
fn taylor(f: &Expr, p0: &[f64], order: usize) -> Result<Jet64> {
    let z = seed_vars(p0, order)?;
    f.eval(&z, &[])
}

/// `f` and `∇f` at jet arguments (all sharing one layout).
fn value_and_gradient(f: &Expr, args: &[Jet64]) -> Result<(Jet64, Vec<Jet64>)> {
    let order = args.iter().map(|a| a.order()).max().unwrap_or(0);
    let p0: Vec<f64> = args.iter().map(|a| a.val()).collect();
    let poly = taylor(f, &p0, order + 1)?;
    let val = f.eval(args, &[])?;
    let grad = (0..args.len()).map(|k| Ok(poly.derivative(k)?.compose(args))).collect::<Result<Vec<_>>>()?;
    Ok((val, grad))
}

fn gradient_f64(f: &Expr, p: &[f64]) -> Result<Vec<f64>> {
    let j = taylor(f, p, 1)?;
    Ok((0..p.len()).map(|k| j.d(&[k])).collect())
}

fn hessian_f64(f: &Expr, p: &[f64]) -> Result<(f64, Vec<f64>, Tensor<f64>)> {
    let j = taylor(f, p, 2)?;
    let n = p.len();
    let g = (0..n).map(|k| j.d(&[k])).collect();
    Ok((j.val(), g, Tensor::from_fn(n, 2, |i| j.d(&[i[0], i[1]]))))
}

/// Solve `∇f(x) = y` by damped Newton on `f(x) − ⟨x, y⟩`.
fn invert_gradient(f: &Expr, y: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let resid = |x: &[f64]| -> Result<Vec<f64>> {
        let (_, g, _) = hessian_f64(f, x)?;
        Ok(g.iter().zip(y).map(|(a, b)| a - b).collect())
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..100 {
        let (_, g, h) = hessian_f64(f, &x)?;
        let r: Vec<f64> = g.iter().zip(y).map(|(a, b)| a - b).collect();
        let r0 = norm(&r);
        if r0 == 0.0 {
            return Ok(x);
        }
        let step = tensor::solve(&h, &r)?;
        // damped on the residual norm; a convex f makes the full step win near the root
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            match resid(&trial) {
                Ok(rt) if norm(&rt) < (1.0 - 1e-4 * t) * r0 || t < 1e-10 => {
                    x = trial;
                    break;
                }
                _ => t *= 0.5,
            }
        }
        let xmax = norm(&x);
        if t == 1.0 && norm(&step) <= 1e-13 * (1.0 + xmax) {
            return Ok(x);
        }
        if t < 1e-10 {
            break;
        }
    }
    if norm(&resid(&x)?) < 1e-10 {
        Ok(x)
    } else {
        Err(Error::GraphSolve { x: y.to_vec(), message: "gradient inversion did not converge".into() })
    }
}

/// Jet of the Legendre transform `f*(Y)` for jets `Y`, via Newton on jets.
fn legendre_jet(f: &Expr, ys: &[Jet64]) -> Result<Jet64> {
    let d = ys.len();
    let order = ys.iter().map(|a| a.order()).max().unwrap_or(0);
    let y0: Vec<f64> = ys.iter().map(|a| a.val()).collect();
    let x0 = invert_gradient(f, &y0, &y0)?;
    let poly = taylor(f, &x0, order + 1)?;
    let grads: Vec<Jet64> = (0..d).map(|k| poly.derivative(k)).collect::<Result<_>>()?;
    let h = Tensor::from_fn(d, 2, |i| poly.d(&[i[0], i[1]]));
    let hinv = tensor::inverse(&h)?;
    let mut xs: Vec<Jet64> = x0.iter().map(|&v| Jet::constant(v)).collect();
    for _ in 0..=order {
        let r: Vec<Jet64> = (0..d).map(|k| grads[k].compose(&xs) - ys[k].clone()).collect();
        for i in 0..d {
            let mut upd = Jet::constant(0.0);
            for k in 0..d {
                upd = upd + r[k].clone() * Jet::constant(hinv.at(&[i, k]));
            }
            // keep the base point pinned at x0
            let c = upd.val();
            xs[i] = xs[i].clone() - upd + Jet::constant(c);
        }
    }
    Ok(dot(&xs, ys) - poly.compose(&xs))
}

fn legendre_value(f: &Expr, y: &[f64]) -> Result<f64> {
    let x = invert_gradient(f, y, y)?;
    Ok(dot(&x, y) - f.eval::<f64>(&x, &[])?)
}

impl CostFunction {
    pub fn new(d: usize, kind: CostKind, domain: DomainSpec) -> Result<Self> {
        domain.validate()?;
        if domain.d() != d {
            return Err(Error::Config(format!("x_box has {} axes but d = {d}", domain.d())));
        }
        Ok(CostFunction { d, kind, domain, swapped: false })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            CostKind::General { .. } => "expression",
            CostKind::Translation { .. } => "translation",
            CostKind::Bregman { .. } => "bregman",
            CostKind::FenchelYoung { .. } => "fenchel_young",
            CostKind::LogDivergence { .. } => "log_divergence",
            CostKind::Bayes { .. } => "bayes",
        }
    }

    /// The same cost with its arguments exchanged, on the given domain.
    pub fn swapped(&self, domain: DomainSpec) -> Self {
        CostFunction { d: self.d, kind: self.kind.clone(), domain, swapped: !self.swapped }
    }

    /// True when Σ is known to be the diagonal `y = x`.
    pub fn diagonal_graph(&self) -> bool {
        matches!(self.kind, CostKind::Translation { .. } | CostKind::Bregman { .. } | CostKind::LogDivergence { .. })
    }

    fn oriented<'a>(&self, x: &'a [f64], y: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        if self.swapped {
            (y, x)
        } else {
            (x, y)
        }
    }

    fn unswap(&self, j: Jet64) -> Jet64 {
        if !self.swapped {
            return j;
        }
        let d = self.d;
        let perm: Vec<usize> = (d..2 * d).chain(0..d).collect();
        j.permute_vars(&perm)
    }

    /// Jet of `u` at `(x, y)` in the 2d variables `(x, y)`.
    pub fn u_jet(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet64> {
        let (a, b) = self.oriented(x, y);
        let (xs, ys) = seeded(a, b, order)?;
        let j = self.u_generic(&xs, &ys)?;
        Ok(self.unswap(j))
    }

    fn u_generic(&self, xs: &[Jet64], ys: &[Jet64]) -> Result<Jet64> {
        match &self.kind {
            CostKind::General { c, phi, psi } => {
                let mut u = c.eval(xs, ys)?;
                if let Some(p) = phi {
                    u = u - p.eval(xs, xs)?;
                }
                if let Some(p) = psi {
                    u = u - p.eval(ys, ys)?;
                }
                Ok(u)
            }
            CostKind::Translation { potential } => potential.eval(&sub(xs, ys), &[]),
            CostKind::Bregman { f } => {
                let (fy, gy) = value_and_gradient(f, ys)?;
                Ok(f.eval(xs, &[])? - fy - dot(&gy, &sub(xs, ys)))
            }
            CostKind::FenchelYoung { f, fstar } => {
                let fs = match fstar {
                    Some(e) => e.eval(ys, &[])?,
                    None => legendre_jet(f, ys)?,
                };
                Ok(f.eval(xs, &[])? + fs - dot(xs, ys))
            }
            CostKind::LogDivergence { f, alpha } => {
                let (fy, gy) = value_and_gradient(f, ys)?;
                let arg = Jet::constant(1.0) + dot(&gy, &sub(xs, ys)).scale(*alpha);
                Ok(f.eval(xs, &[])? - fy - arg.try_ln()?.scale(1.0 / alpha))
            }
            CostKind::Bayes { model } => {
                let mut u = Jet::constant(0.0);
                for (k, fk) in model.iter().enumerate() {
                    let r = ys[k].clone() - fk.eval(xs, &[])?;
                    u = u + r.clone() * r;
                }
                Ok(u.scale(0.5))
            }
        }
    }

    /// `u(x, y)`; `+∞` outside the natural domain of the log-divergence.
    pub fn u_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (x, y) = self.oriented(x, y);
        match &self.kind {
            CostKind::General { c, phi, psi } => {
                let mut u = c.eval::<f64>(x, y)?;
                if let Some(p) = phi {
                    u -= p.eval::<f64>(x, x)?;
                }
                if let Some(p) = psi {
                    u -= p.eval::<f64>(y, y)?;
                }
                Ok(u)
            }
            CostKind::Translation { potential } => potential.eval::<f64>(&sub(x, y), &[]),
            CostKind::Bregman { f } => {
                let g = gradient_f64(f, y)?;
                Ok(f.eval::<f64>(x, &[])? - f.eval::<f64>(y, &[])? - dot(&g, &sub(x, y)))
            }
            CostKind::FenchelYoung { f, fstar } => {
                let fs = match fstar {
                    Some(e) => e.eval::<f64>(y, &[])?,
                    None => legendre_value(f, y)?,
                };
                Ok(f.eval::<f64>(x, &[])? + fs - dot(x, y))
            }
            CostKind::LogDivergence { f, alpha } => {
                let g = gradient_f64(f, y)?;
                let arg = 1.0 + alpha * dot(&g, &sub(x, y));
                if arg <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(f.eval::<f64>(x, &[])? - f.eval::<f64>(y, &[])? - arg.ln() / alpha)
            }
            CostKind::Bayes { model } => {
                let mut u = 0.0;
                for (k, fk) in model.iter().enumerate() {
                    let r = y[k] - fk.eval::<f64>(x, &[])?;
                    u += r * r;
                }
                Ok(0.5 * u)
            }
        }
    }

    /// Jet of the cost `c` (defaults to `u` when the family has no separate `c`).
    pub fn c_jet(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet64> {
        let (a, b) = self.oriented(x, y);
        let (xs, ys) = seeded(a, b, order)?;
        let j = match &self.kind {
            CostKind::General { c, .. } => c.eval(&xs, &ys)?,
            CostKind::Bregman { f } => {
                let (_, gy) = value_and_gradient(f, &ys)?;
                -dot(&gy, &xs)
            }
            CostKind::FenchelYoung { .. } => -dot(&xs, &ys),
            CostKind::LogDivergence { f, alpha } => {
                let (_, gy) = value_and_gradient(f, &ys)?;
                let arg = Jet::constant(1.0) + dot(&gy, &sub(&xs, &ys)).scale(*alpha);
                -arg.try_ln()?.scale(1.0 / alpha)
            }
            CostKind::Translation { .. } | CostKind::Bayes { .. } => self.u_generic(&xs, &ys)?,
        };
        Ok(self.unswap(j))
    }

    pub fn c_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.c_jet(x, y, 0)?.val())
    }

    /// Potentials `(φ(x), ψ(y))` when the family defines them.
    pub fn potentials(&self, x: &[f64], y: &[f64]) -> Result<Option<(f64, f64)>> {
        let (x, y) = self.oriented(x, y);
        let pair = match &self.kind {
            CostKind::General { phi, psi, .. } => {
                if phi.is_none() && psi.is_none() {
                    return Ok(None);
                }
                let p = phi.as_ref().map_or(Ok(0.0), |e| e.eval::<f64>(x, x))?;
                let q = psi.as_ref().map_or(Ok(0.0), |e| e.eval::<f64>(y, y))?;
                (p, q)
            }
            CostKind::Bregman { f } => {
                let g = gradient_f64(f, y)?;
                (-f.eval::<f64>(x, &[])?, f.eval::<f64>(y, &[])? - dot(&g, y))
            }
            CostKind::FenchelYoung { f, fstar } => {
                let fs = match fstar {
                    Some(e) => e.eval::<f64>(y, &[])?,
                    None => legendre_value(f, y)?,
                };
                (-f.eval::<f64>(x, &[])?, -fs)
            }
            CostKind::LogDivergence { f, .. } => (-f.eval::<f64>(x, &[])?, f.eval::<f64>(y, &[])?),
            CostKind::Translation { .. } | CostKind::Bayes { .. } => return Ok(None),
        };
        Ok(Some(if self.swapped { (pair.1, pair.0) } else { pair }))
    }

    /// Analytic starting point for the graph solve.
    pub fn graph_guess(&self, x: &[f64]) -> Vec<f64> {
        if self.swapped {
            return match &self.kind {
                CostKind::FenchelYoung { f, .. } => invert_gradient(f, x, x).unwrap_or_else(|_| x.to_vec()),
                _ => x.to_vec(),
            };
        }
        match &self.kind {
            CostKind::FenchelYoung { f, .. } => gradient_f64(f, x).unwrap_or_else(|_| x.to_vec()),
            CostKind::Bayes { model } => {
                model.iter().map(|e| e.eval::<f64>(x, &[]).unwrap_or(0.0)).collect()
            }
            _ => x.to_vec(),
        }
    }

    /// Sampled sanity checks: `u ≥ 0`, `u = c − φ − ψ`, equal mixed Hessians.
    pub fn check_samples(&self, n: usize) -> Result<()> {
        let d = self.d;
        let y_box = self.domain.y_box.clone().unwrap_or_else(|| self.domain.x_box.clone());
        for i in 1..=n {
            let h = halton(i, 2 * d);
            let x: Vec<f64> = (0..d).map(|k| lerp(self.domain.x_box[k], h[k])).collect();
            let near = self.graph_guess(&x);
            // half the samples near the graph, half across the y box
            let y: Vec<f64> = if i % 2 == 0 {
                (0..d).map(|k| near[k] + (h[d + k] - 0.5) * self.domain.tubular_radius).collect()
            } else {
                (0..d).map(|k| lerp(y_box[k], h[d + k])).collect()
            };
            let u = match self.u_value(&x, &y) {
                Ok(v) => v,
                Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e),
            };
            if u < -1e-10 {
                return Err(Error::NotADivergence(format!("u({x:?}, {y:?}) = {u:.3e} < 0")));
            }
        }
        Ok(())
    }

    pub fn y_box(&self) -> Vec<(f64, f64)> {
        self.domain.y_box.clone().unwrap_or_else(|| self.domain.x_box.clone())
    }
}

fn lerp((a, b): (f64, f64), t: f64) -> f64 {
    a + (b - a) * t
}

/// Check `f ≻ 0` on sample points of the box.
fn check_convex(f: &Expr, bx: &[(f64, f64)], n: usize) -> Result<()> {
    let d = bx.len();
    for i in 1..=n {
        let h = halton(i, d);
        let p: Vec<f64> = (0..d).map(|k| lerp(bx[k], h[k])).collect();
        let (_, _, hess) = hessian_f64(f, &p)?;
        if !is_positive_definite(&hess) {
            return Err(Error::NotADivergence(format!("potential is not strictly convex at {p:?}")));
        }
    }
    Ok(())
}

pub(crate) fn is_positive_definite(m: &Tensor<f64>) -> bool {
    crate::tensor::cholesky(m).is_some()
}

/// `u = c − φ − ψ`, validated at 32 sample points.
pub fn make_c_divergence(c: Expr, phi: Option<Expr>, psi: Option<Expr>, d: usize, domain: DomainSpec) -> Result<CostFunction> {
    for e in std::iter::once(&c).chain(phi.as_ref()).chain(psi.as_ref()) {
        if e.max_index(crate::exprlang::VarKind::X) > d || e.max_index(crate::exprlang::VarKind::Y) > d {
            return Err(Error::Config("expression uses an index above d".into()));
        }
    }
    let cost = CostFunction::new(d, CostKind::General { c, phi, psi }, domain)?;
    cost.check_samples(32)?;
    Ok(cost)
}

fn default_separable(d: usize, term: &str) -> Expr {
    let src: Vec<String> = (1..=d).map(|k| term.replace('#', &k.to_string())).collect();
    parse(&src.join(" + "), d).expect("built-in expression")
}

/// The default strictly convex potential `Σ (x_k²/2 + x_k⁴/12)`.
pub fn default_potential(d: usize) -> Expr {
    default_separable(d, "x#^2/2 + x#^4/12")
}

/// Conjugate of [`default_potential`]: with `t = 2 sinh(asinh(3y/2)/3)` solving
/// `t + t³/3 = y`, each coordinate contributes `t y − t²/2 − t⁴/12`.
pub fn default_conjugate(d: usize) -> Expr {
    let t = "(2*sinh(asinh(1.5*x#)/3))";
    default_separable(d, &format!("{t}*x# - {t}^2/2 - {t}^4/12"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Quadratic,
    Translation { potential: Option<Expr> },
    Bregman { f: Option<Expr> },
    FenchelYoung { f: Option<Expr>, fstar: Option<Expr> },
    LogDivergence { alpha: f64, f: Option<Expr> },
    Bayes { model: Option<Vec<Expr>> },
}

/// Construct one of the example families; missing parameters take defaults.
pub fn builtin(which: Builtin, d: usize, domain: DomainSpec) -> Result<CostFunction> {
    let kind = match which {
        Builtin::Quadratic => CostKind::General {
            c: parse("-dot(x,y)", d)?,
            phi: Some(parse("-norm2(x)/2", d)?),
            psi: Some(parse("-norm2(x)/2", d)?),
        },
        Builtin::Translation { potential } => CostKind::Translation {
            potential: potential.unwrap_or_else(|| {
                let mut e = default_separable(d, "cosh(x#)");
                e = Expr::bin(BinOp::Sub, e, Expr::Const(d as f64));
                e
            }),
        },
        Builtin::Bregman { f } => {
            let f = f.unwrap_or_else(|| default_potential(d));
            check_convex(&f, &domain.x_box, 32)?;
            CostKind::Bregman { f }
        }
        Builtin::FenchelYoung { f, fstar } => {
            // the default potential has a closed-form conjugate through Cardano's formula
            let fstar = match (&f, fstar) {
                (None, None) => Some(default_conjugate(d)),
                (_, fs) => fs,
            };
            let f = f.unwrap_or_else(|| default_potential(d));
            check_convex(&f, &domain.x_box, 32)?;
            CostKind::FenchelYoung { f, fstar }
        }
        Builtin::LogDivergence { alpha, f } => {
            if !(alpha > 0.0) {
                return Err(Error::Config("alpha must be positive".into()));
            }
            let f = f.unwrap_or_else(|| parse("norm2(x)/2", d).expect("built-in expression"));
            check_convex(&f, &domain.x_box, 32)?;
            CostKind::LogDivergence { f, alpha }
        }
        Builtin::Bayes { model } => {
            let model = match model {
                Some(m) => m,
                None => (1..=d).map(|k| parse(&format!("x{k} + x{k}^3/10"), d)).collect::<Result<_>>()?,
            };
            if model.len() != d {
                return Err(Error::Config(format!("bayes model needs {d} components")));
            }
            CostKind::Bayes { model }
        }
    };
    let cost = CostFunction::new(d, kind, domain)?;
    cost.check_samples(32)?;
    Ok(cost)
}

/// `[u(x+ξ,y) + u(x,y+η)] − [u(x,y) + u(x+ξ,y+η)]`.
pub fn cross_difference(eval: impl Fn(&[f64], &[f64]) -> Result<f64>, x: &[f64], y: &[f64], xi: &[f64], eta: &[f64]) -> Result<f64> {
    let xp: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + b).collect();
    let yp: Vec<f64> = y.iter().zip(eta).map(|(a, b)| a + b).collect();
    Ok((eval(&xp, y)? + eval(x, &yp)?) - (eval(x, y)? + eval(&xp, &yp)?))
}

/// JSON cost block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub d: usize,
    pub x_box: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub y_box: Option<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

impl CostSpec {
    pub fn domain(&self) -> Result<DomainSpec> {
        let mut dom = DomainSpec::new(self.x_box.iter().map(|p| (p[0], p[1])).collect(), self.delta, self.lambda)?;
        if let Some(yb) = &self.y_box {
            dom = dom.with_y_box(yb.iter().map(|p| (p[0], p[1])).collect());
            dom.validate()?;
        }
        Ok(dom)
    }

    fn expr_param(&self, key: &str) -> Result<Option<Expr>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(serde_json::Value::String(s)) => Ok(Some(parse(s, self.d)?)),
            Some(_) => Err(Error::Config(format!("parameter '{key}' must be an expression string"))),
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown parameter '{k}' for cost kind '{}'", self.kind)));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<CostFunction> {
        let d = self.d;
        let domain = self.domain()?;
        if domain.d() != d {
            return Err(Error::Config(format!("x_box has {} axes but d = {d}", domain.d())));
        }
        match self.kind.as_str() {
            "quadratic" => {
                self.allow(&[])?;
                builtin(Builtin::Quadratic, d, domain)
            }
            "translation" => {
                self.allow(&["U"])?;
                builtin(Builtin::Translation { potential: self.expr_param("U")? }, d, domain)
            }
            "bregman" => {
                self.allow(&["f"])?;
                builtin(Builtin::Bregman { f: self.expr_param("f")? }, d, domain)
            }
            "fenchel_young" => {
                self.allow(&["f", "fstar"])?;
                builtin(Builtin::FenchelYoung { f: self.expr_param("f")?, fstar: self.expr_param("fstar")? }, d, domain)
            }
            "log_divergence" => {
                self.allow(&["alpha", "f"])?;
                let alpha = match self.params.get("alpha") {
                    None => 1.0,
                    Some(v) => v.as_f64().ok_or_else(|| Error::Config("alpha must be a number".into()))?,
                };
                builtin(Builtin::LogDivergence { alpha, f: self.expr_param("f")? }, d, domain)
            }
            "bayes" => {
                self.allow(&["F"])?;
                let model = match self.params.get("F") {
                    None => None,
                    Some(serde_json::Value::Array(items)) => Some(
                        items
                            .iter()
                            .map(|v| match v {
                                serde_json::Value::String(s) => parse(s, d),
                                _ => Err(Error::Config("F entries must be expression strings".into())),
                            })
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    Some(_) => return Err(Error::Config("F must be an array of expressions".into())),
                };
                builtin(Builtin::Bayes { model }, d, domain)
            }
            "expression" => {
                self.allow(&["c", "u", "phi", "psi"])?;
                let c = match (self.expr_param("c")?, self.expr_param("u")?) {
                    (Some(c), None) | (None, Some(c)) => c,
                    _ => return Err(Error::Config("expression cost needs exactly one of 'c' or 'u'".into())),
                };
                make_c_divergence(c, self.expr_param("phi")?, self.expr_param("psi")?, d, domain)
            }
            other => Err(Error::Config(format!("unknown cost kind '{other}'"))),
        }
    }
}
