//! Kim–McCann geometry of Σ at a point, in the x-chart.
//!
//! Conventions: `c[i][j̄] = u_{i j̄}`; its inverse is stored as `cinv[j̄][i]`,
//! so `c^{j̄ i} = cinv[j̄][i]`. Tangent frame `t_i = e_i + ∂_i y^ī e_ī`,
//! normal frame `n_i = K t_i = e_i − ∂_i y^ī e_ī`. Normal fields are carried
//! by their `K`-images in the `t` frame. Curvature sign:
//! `R(U,V)W = ∇_V∇_U W − ∇_U∇_V W − ∇_[V,U] W`.
//!
//! Everything generic over [`Scalar`] runs twice: once with `f64` for point
//! values and once with first-order jets in `x` for derivatives along Σ.

use serde::Serialize;

use crate::costs::is_positive_definite;
use crate::error::{Error, Result};
use crate::graph_map::{SigmaPoint, COND_LIMIT};
use crate::jet::{multi_index, seed_vars, Layout};
use crate::scalar::Scalar;
use crate::tensor::{self, det, permutations, IndexClass, Tensor};
use crate::{Jet64, Tensor64};

const UB: IndexClass = IndexClass::Unbarred;
const BAR: IndexClass = IndexClass::Barred;

fn sum<S: Scalar>(it: impl Iterator<Item = S>) -> S {
    it.fold(S::zero(), |a, b| a + b)
}

/// Partial derivatives of a function on `X × Y` (2d variables) at a point of Σ.
#[derive(Debug, Clone)]
pub struct Partials<S> {
    layout: &'static Layout,
    vals: Vec<S>,
}

impl<S: Scalar> Partials<S> {
    /// `∂_{vars} F`, variables `0..d` for `x`, `d..2d` for `y`.
    pub fn get(&self, vars: &[usize]) -> S {
        let alpha = multi_index(self.layout.num_vars, vars);
        let k = self.layout.index_of(&alpha).expect("derivative beyond the carried order");
        self.vals[k].clone()
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }
}

impl Partials<f64> {
    pub fn plain(j: &Jet64) -> Self {
        let layout = j.layout().expect("jet with variables");
        let vals = (0..layout.len()).map(|k| j.partial(layout.multi(k)).expect("within order")).collect();
        Partials { layout, vals }
    }
}

impl Partials<Jet64> {
    /// Partials of order `< j.order()` as first-order jets along Σ:
    /// `d/dx^k F_α = F_{α+e_k} + F_{α+e_ℓ̄} ∂_k y^ℓ̄`.
    pub fn dual(j: &Jet64, sp: &SigmaPoint) -> Self {
        let d = sp.d();
        let full = j.layout().expect("jet with variables");
        let layout = Layout::get(full.num_vars, full.order - 1);
        let vals = (0..layout.len())
            .map(|k| {
                let alpha = layout.multi(k);
                let p = |extra: usize| {
                    let mut a = alpha.to_vec();
                    a[extra] += 1;
                    j.partial(&a).expect("within order")
                };
                let grad: Vec<f64> = (0..d)
                    .map(|i| p(i) + (0..d).map(|l| p(d + l) * sp.dy.at(&[i, l])).sum::<f64>())
                    .collect();
                lift(&sp.x, j.partial(alpha).expect("within order"), &grad)
            })
            .collect();
        Partials { layout, vals }
    }
}

/// First-order jet in `x` with the given value and gradient.
pub fn lift(x: &[f64], val: f64, grad: &[f64]) -> Jet64 {
    let d = x.len();
    let layout = Layout::get(d, 1);
    let mut coeffs = vec![0.0; layout.len()];
    coeffs[0] = val;
    for (k, g) in grad.iter().enumerate() {
        coeffs[layout.index_of(&multi_index(d, &[k])).expect("degree one")] = *g;
    }
    Jet64::from_coeffs(d, 1, coeffs, Some(x.to_vec())).expect("small layout")
}

fn lift_tensor(x: &[f64], t: &Tensor64, next: impl Fn(&[usize], usize) -> f64) -> Tensor<Jet64> {
    let mut out = Tensor::from_fn(t.dim(), t.rank(), |idx| {
        let grad: Vec<f64> = (0..x.len()).map(|k| next(idx, k)).collect();
        lift(x, t.at(idx), &grad)
    });
    out = out.set_classes(t.classes().to_vec());
    out
}

/// The data of a Σ point as seen by scalar type `S`.
#[derive(Debug, Clone)]
pub struct SigmaData<S> {
    pub d: usize,
    pub u: Partials<S>,
    pub dy: Tensor<S>,
    pub d2y: Tensor<S>,
}

impl<S: Scalar> SigmaData<S> {
    fn c(&self, i: usize, jb: usize) -> S {
        self.u.get(&[i, self.d + jb])
    }
}

impl SigmaData<f64> {
    pub fn plain(sp: &SigmaPoint) -> Self {
        SigmaData { d: sp.d(), u: Partials::plain(&sp.u), dy: sp.dy.clone(), d2y: sp.d2y.clone() }
    }
}

impl SigmaData<Jet64> {
    pub fn dual(sp: &SigmaPoint) -> Self {
        let dy = lift_tensor(&sp.x, &sp.dy, |idx, k| sp.d2y.at(&[k, idx[0], idx[1]]));
        let d2y = lift_tensor(&sp.x, &sp.d2y, |idx, k| sp.d3y.at(&[k, idx[0], idx[1], idx[2]]));
        SigmaData { d: sp.d(), u: Partials::dual(&sp.u, sp), dy, d2y }
    }
}

/// Pointwise frame quantities: metrics, Christoffel symbols, `h`, `H`, `Γ`.
#[derive(Debug, Clone)]
pub struct Frame<S> {
    pub c: Tensor<S>,
    pub cinv: Tensor<S>,
    pub g: Tensor<S>,
    pub ginv: Tensor<S>,
    pub m: S,
    pub mt: S,
    pub det_c_sign: f64,
    /// `Γ̃^k_{ij}`, slots `(k, i, j)`.
    pub gamma_x: Tensor<S>,
    /// `Γ̃^k̄_{ī j̄}`, slots `(k̄, ī, j̄)`.
    pub gamma_y: Tensor<S>,
    /// `∂x^k/∂y^k̄`, slots `(k̄, k)`.
    pub dxdy: Tensor<S>,
    /// `h^k_{ij}`, slots `(k, i, j)`.
    pub h_up: Tensor<S>,
    /// `h_{ijk}`.
    pub h: Tensor<S>,
    /// `Γ^k_{ij}`, slots `(k, i, j)`.
    pub gamma: Tensor<S>,
    pub mean_up: Vec<S>,
    pub mean_low: Vec<S>,
}

/// Build the frame; fails on a degenerate mixed block or an indefinite metric.
pub fn frame<S: Scalar>(sd: &SigmaData<S>) -> Result<Frame<S>> {
    let d = sd.d;
    let c = Tensor::from_fn(d, 2, |i| sd.c(i[0], i[1])).set_classes(vec![UB, BAR]);
    let cinv = tensor::invert_sym(&c, COND_LIMIT)?;
    let g = Tensor::from_fn(d, 2, |i| sd.u.get(&[i[0], i[1]]));
    if !is_positive_definite(&g.values()) {
        return Err(Error::MetricSignature(format!("induced metric {:?} is not positive definite", g.values().data())));
    }
    let ginv = tensor::inverse(&g)?;
    let m = det(&g).sqrt();
    let detc = det(&c);
    let det_c_sign = if detc.value() < 0.0 { -1.0 } else { 1.0 };
    let mt = detc.scale(det_c_sign);
    let gamma_x = Tensor::from_fn(d, 3, |a| sum((0..d).map(|mb| cinv.at(&[mb, a[0]]) * sd.u.get(&[a[1], a[2], d + mb]))));
    let gamma_y =
        Tensor::from_fn(d, 3, |a| sum((0..d).map(|m| cinv.at(&[a[0], m]) * sd.u.get(&[m, d + a[1], d + a[2]]))))
            .set_classes(vec![BAR; 3]);
    let dxdy = tensor::inverse(&sd.dy)?;
    // ∂_i y^ī ∂_j y^j̄ Γ̃^k̄_{ī j̄} + ∂_{ij} y^k̄, slots (k̄, i, j)
    let push = Tensor::from_fn(d, 3, |a| {
        let (kb, i, j) = (a[0], a[1], a[2]);
        let mut s = sd.d2y.at(&[i, j, kb]);
        for ib in 0..d {
            for jb in 0..d {
                s = s + sd.dy.at(&[i, ib]) * sd.dy.at(&[j, jb]) * gamma_y.at(&[kb, ib, jb]);
            }
        }
        s
    });
    let pulled = Tensor::from_fn(d, 3, |a| sum((0..d).map(|kb| dxdy.at(&[kb, a[0]]) * push.at(&[kb, a[1], a[2]]))));
    let h_up = gamma_x.sub(&pulled).scale(0.5);
    let gamma = gamma_x.add(&pulled).scale(0.5);
    let h = Tensor::from_fn(d, 3, |a| sum((0..d).map(|l| h_up.at(&[l, a[0], a[1]]) * g.at(&[a[2], l]))));
    let mean_up: Vec<S> = (0..d)
        .map(|k| sum((0..d * d).map(|ij| ginv.at(&[ij / d, ij % d]) * h_up.at(&[k, ij / d, ij % d]))))
        .collect();
    let mean_low = (0..d).map(|k| sum((0..d).map(|l| g.at(&[k, l]) * mean_up[l].clone()))).collect();
    Ok(Frame { c, cinv, g, ginv, m, mt, det_c_sign, gamma_x, gamma_y, dxdy, h_up, h, gamma, mean_up, mean_low })
}

/// `R̃_{i j̄ k̄ ℓ}` with slots `(i, j̄, k̄, ℓ)`.
pub fn ambient_curvature_tensor(sd: &SigmaData<f64>, fr: &Frame<f64>) -> Tensor64 {
    let d = sd.d;
    Tensor::from_fn(d, 4, |a| {
        let (i, jb, kb, l) = (a[0], a[1], a[2], a[3]);
        let mut s = sd.u.get(&[i, d + jb, d + kb, l]);
        for sb in 0..d {
            for t in 0..d {
                s -= sd.u.get(&[i, l, d + sb]) * fr.cinv.at(&[sb, t]) * sd.u.get(&[d + jb, d + kb, t]);
            }
        }
        0.5 * s
    })
    .set_classes(vec![UB, BAR, BAR, UB])
}

/// `R̃ = 8 c^{i j̄} c^{k̄ ℓ} R̃_{i j̄ k̄ ℓ}`.
pub fn ambient_scalar(fr: &Frame<f64>, rt: &Tensor64) -> f64 {
    let d = fr.g.dim();
    let mut s = 0.0;
    for i in 0..d {
        for jb in 0..d {
            for kb in 0..d {
                for l in 0..d {
                    s += fr.cinv.at(&[jb, i]) * fr.cinv.at(&[kb, l]) * rt.at(&[i, jb, kb, l]);
                }
            }
        }
    }
    8.0 * s
}

/// `R_{ijkℓ} = g_{ℓp}(∂_jΓ^p_{ik} − ∂_iΓ^p_{jk} + Γ^m_{ik}Γ^p_{jm} − Γ^m_{jk}Γ^p_{im})`
/// from the dual frame.
pub fn sigma_curvature_tensor(dual: &Frame<Jet64>) -> Tensor64 {
    let d = dual.g.dim();
    let gam = |p: usize, i: usize, k: usize| dual.gamma.get(&[p, i, k]).val();
    let dgam = |p: usize, i: usize, k: usize, j: usize| dual.gamma.get(&[p, i, k]).d(&[j]);
    let rup = Tensor::from_fn(d, 4, |a| {
        let (p, i, j, k) = (a[0], a[1], a[2], a[3]);
        let mut s = dgam(p, i, k, j) - dgam(p, j, k, i);
        for m in 0..d {
            s += gam(m, i, k) * gam(p, j, m) - gam(m, j, k) * gam(p, i, m);
        }
        s
    });
    Tensor::from_fn(d, 4, |a| {
        let (i, j, k, l) = (a[0], a[1], a[2], a[3]);
        (0..d).map(|p| dual.g.get(&[l, p]).val() * rup.at(&[p, i, j, k])).sum()
    })
}

fn scalar_from(ginv: &Tensor64, r: &Tensor64) -> f64 {
    let d = ginv.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    s += ginv.at(&[i, k]) * ginv.at(&[j, l]) * r.at(&[i, j, k, l]);
                }
            }
        }
    }
    s
}

/// `(⟨h,h⟩, ⟨H,H⟩)`: the coordinate contractions with a minus sign.
pub fn brackets(fr: &Frame<f64>) -> (f64, f64) {
    let d = fr.g.dim();
    let gi = |a: usize, b: usize| fr.ginv.at(&[a, b]);
    // h raised in every slot, then paired with h
    let mut hh = 0.0;
    for l in 0..d {
        for m in 0..d {
            for n in 0..d {
                let mut raised = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            raised += fr.h.at(&[i, j, k]) * gi(i, l) * gi(j, m) * gi(k, n);
                        }
                    }
                }
                hh += raised * fr.h.at(&[l, m, n]);
            }
        }
    }
    let mut hh_mean = 0.0;
    for i in 0..d {
        for j in 0..d {
            hh_mean += fr.mean_low[i] * fr.mean_low[j] * gi(i, j);
        }
    }
    (-hh, -hh_mean)
}

/// `u^{j̄ ℓ̄} = ∂_s y^j̄ ∂_t y^ℓ̄ u^{st}`, the inverse metric in the y-chart.
fn ginv_bar(sd: &SigmaData<f64>, fr: &Frame<f64>) -> Tensor64 {
    let d = sd.d;
    Tensor::from_fn(d, 2, |a| {
        let mut s = 0.0;
        for p in 0..d {
            for q in 0..d {
                s += sd.dy.at(&[p, a[0]]) * sd.dy.at(&[q, a[1]]) * fr.ginv.at(&[p, q]);
            }
        }
        s
    })
    .set_classes(vec![BAR, BAR])
}

/// Scalar curvature of Σ from the contracted Gauss equation.
fn sigma_scalar_gauss(sd: &SigmaData<f64>, fr: &Frame<f64>, rt: &Tensor64, rt_scalar: f64, hh: f64, hh_mean: f64) -> f64 {
    let d = sd.d;
    let gb = ginv_bar(sd, fr);
    let mut x = 0.0;
    for i in 0..d {
        for jb in 0..d {
            for k in 0..d {
                for lb in 0..d {
                    // R̃_{i j̄ k ℓ̄} = −R̃_{i j̄ ℓ̄ k}
                    x -= rt.at(&[i, jb, lb, k]) * fr.ginv.at(&[i, k]) * gb.at(&[jb, lb]);
                }
            }
        }
    }
    2.0 * x + 0.25 * rt_scalar + hh_mean - hh
}

/// Max-norm residual of the uncontracted Gauss equation.
pub fn gauss_residual_full(sd: &SigmaData<f64>, fr: &Frame<f64>, rt: &Tensor64, r: &Tensor64) -> f64 {
    let d = sd.d;
    let dy = |i: usize, ib: usize| sd.dy.at(&[i, ib]);
    let hu = |a: usize, b: usize, s: usize, c: usize, e: usize, t: usize| fr.h.at(&[a, b, s]) * fr.h.at(&[c, e, t]) * fr.ginv.at(&[s, t]);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut lhs = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            lhs += rt.at(&[i, a, b, l]) * dy(j, a) * dy(k, b);
                            lhs -= rt.at(&[i, a, b, k]) * dy(j, a) * dy(l, b);
                            lhs -= rt.at(&[j, a, b, l]) * dy(i, a) * dy(k, b);
                            lhs += rt.at(&[j, a, b, k]) * dy(i, a) * dy(l, b);
                        }
                    }
                    let mut rhs = r.at(&[i, j, k, l]);
                    for s in 0..d {
                        for t in 0..d {
                            rhs += hu(i, k, s, j, l, t) - hu(i, l, s, j, k, t);
                        }
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

/// Largest deviation of `h_{ijk}` from total symmetry.
pub fn h_asymmetry(h: &Tensor64) -> f64 {
    let d = h.dim();
    let mut worst = 0.0f64;
    for p in permutations(3) {
        worst = worst.max(h.permute(&p).max_abs_diff(h));
    }
    let _ = d;
    worst
}

/// Geometry at one Σ point with its consistency residuals.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Tensor64,
    pub g: Tensor64,
    pub g_inv: Tensor64,
    pub m: f64,
    pub mt: f64,
    pub det_c_sign: f64,
    pub c_mixed: Tensor64,
    pub gamma_ambient_x: Tensor64,
    pub gamma_ambient_y: Tensor64,
    pub h: Tensor64,
    #[serde(rename = "H")]
    pub mean_up: Vec<f64>,
    #[serde(rename = "H_lower")]
    pub mean_low: Vec<f64>,
    pub gamma_sigma: Tensor64,
    #[serde(rename = "Rt_tensor")]
    pub rt_tensor: Tensor64,
    #[serde(rename = "Rt_scalar")]
    pub rt_scalar: f64,
    #[serde(rename = "R_tensor")]
    pub r_tensor: Tensor64,
    #[serde(rename = "R_scalar")]
    pub r_scalar: f64,
    #[serde(rename = "R_scalar_gauss")]
    pub r_scalar_gauss: f64,
    pub hh_bracket: f64,
    #[serde(rename = "HH_bracket")]
    pub mean_bracket: f64,
    pub gauss_residual: f64,
    pub gauss_residual_full: f64,
    pub h_asymmetry: f64,
    pub gamma_residual: f64,
    pub ddy_h_residual: f64,
    pub frame_residual: f64,
    pub rule_residual: f64,
}

impl GeometryReport {
    pub fn compute(sp: &SigmaPoint) -> Result<Self> {
        let sd = SigmaData::plain(sp);
        let fr = frame(&sd)?;
        let dual = frame(&SigmaData::dual(sp))?;
        Ok(Self::assemble(sp, &sd, &fr, &dual))
    }

    pub fn assemble(sp: &SigmaPoint, sd: &SigmaData<f64>, fr: &Frame<f64>, dual: &Frame<Jet64>) -> Self {
        let d = sd.d;
        let rt = ambient_curvature_tensor(sd, fr);
        let rt_scalar = ambient_scalar(fr, &rt);
        let r_tensor = sigma_curvature_tensor(dual);
        let r_scalar = scalar_from(&fr.ginv, &r_tensor);
        let (hh, hh_mean) = brackets(fr);
        let r_gauss = sigma_scalar_gauss(sd, fr, &rt, rt_scalar, hh, hh_mean);
        let gauss_full = gauss_residual_full(sd, fr, &rt, &r_tensor);
        let gamma_residual = fr.gamma.max_abs_diff(&fr.gamma_x.sub(&fr.h_up));
        GeometryReport {
            x: sp.x.clone(),
            y: sp.y.clone(),
            dy: sp.dy.clone(),
            g: fr.g.clone(),
            g_inv: fr.ginv.clone(),
            m: fr.m,
            mt: fr.mt,
            det_c_sign: fr.det_c_sign,
            c_mixed: fr.c.clone(),
            gamma_ambient_x: fr.gamma_x.clone(),
            gamma_ambient_y: fr.gamma_y.clone(),
            h: fr.h.clone(),
            mean_up: fr.mean_up.clone(),
            mean_low: fr.mean_low.clone(),
            gamma_sigma: fr.gamma.clone(),
            rt_tensor: rt,
            rt_scalar,
            r_tensor,
            r_scalar,
            r_scalar_gauss: r_gauss,
            hh_bracket: hh,
            mean_bracket: hh_mean,
            gauss_residual: (r_scalar - r_gauss).abs(),
            gauss_residual_full: gauss_full,
            h_asymmetry: h_asymmetry(&fr.h),
            gamma_residual,
            ddy_h_residual: ddy_h_residual(sd, fr),
            frame_residual: frame_residual(sd, fr),
            rule_residual: rule_residual(sd, fr, d),
        }
    }
}

impl Serialize for Tensor64 {
    fn serialize<Z: serde::Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.data().serialize(s)
    }
}

/// `∂_{ij} y^k̄` recomputed from `h` against the implicit-differentiation value.
pub fn ddy_h_residual(sd: &SigmaData<f64>, fr: &Frame<f64>) -> f64 {
    let d = sd.d;
    let c3 = |a: usize, b: usize, e: usize| sd.u.get(&[a, b, e]);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for kb in 0..d {
                let mut v = 0.0;
                for m in 0..d {
                    v += 2.0 * fr.cinv.at(&[kb, m]) * fr.h.at(&[i, j, m]);
                    for ib in 0..d {
                        for jb in 0..d {
                            v -= fr.cinv.at(&[kb, m]) * c3(m, d + ib, d + jb) * sd.dy.at(&[i, jb]) * sd.dy.at(&[j, ib]);
                        }
                    }
                }
                for k in 0..d {
                    for mb in 0..d {
                        v += fr.cinv.at(&[mb, k]) * c3(i, j, d + mb) * sd.dy.at(&[k, kb]);
                    }
                }
                worst = worst.max((v - sd.d2y.at(&[i, j, kb])).abs());
            }
        }
    }
    worst
}

/// `⟨t_i,t_j⟩ = g_{ij}`, `⟨n_i,n_j⟩ = −g_{ij}`, `⟨t_i,n_j⟩ + ⟨t_j,n_i⟩ = 0`,
/// from the ambient blocks `−½ c_{i j̄}`.
pub fn frame_residual(sd: &SigmaData<f64>, fr: &Frame<f64>) -> f64 {
    let d = sd.d;
    // ⟨e_i + a ∂_i y, e_j + b ∂_j y⟩ = −½ (b c_{i j̄} ∂_j y^j̄ + a c_{j ī} ∂_i y^ī)
    let pair = |i: usize, a: f64, j: usize, b: f64| {
        let mut s = 0.0;
        for kb in 0..d {
            s += b * fr.c.at(&[i, kb]) * sd.dy.at(&[j, kb]) + a * fr.c.at(&[j, kb]) * sd.dy.at(&[i, kb]);
        }
        -0.5 * s
    };
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let g = fr.g.at(&[i, j]);
            worst = worst.max((pair(i, 1.0, j, 1.0) - g).abs());
            worst = worst.max((pair(i, -1.0, j, -1.0) + g).abs());
            worst = worst.max((pair(i, 1.0, j, -1.0) + pair(j, 1.0, i, -1.0)).abs());
        }
    }
    worst
}

/// `u_{ij} = −c_{i j̄} ∂_j y^j̄`.
fn rule_residual(sd: &SigmaData<f64>, fr: &Frame<f64>, d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let v: f64 = (0..d).map(|jb| -fr.c.at(&[i, jb]) * sd.dy.at(&[j, jb])).sum();
            worst = worst.max((v - fr.g.at(&[i, j])).abs());
        }
    }
    worst
}

/// Mixed block `c_{i j̄}` and `m̃ = |det c_{i j̄}|`.
pub fn ambient_metric(sp: &SigmaPoint) -> Result<(Tensor64, f64)> {
    let d = sp.d();
    let c = Tensor::from_fn(d, 2, |i| sp.u.d(&[i[0], d + i[1]])).set_classes(vec![UB, BAR]);
    tensor::invert_sym(&c, COND_LIMIT)?;
    let mt = det(&c).abs();
    Ok((c, mt))
}

/// Jet of `m̃ = |det u_{i j̄}|` on `X × Y`, of order `u.order() − 2`.
pub fn mt_jet(u: &Jet64, d: usize) -> Result<Jet64> {
    let mut c = Tensor::<Jet64>::zeros(d, 2);
    for i in 0..d {
        let ui = u.derivative(i)?;
        for jb in 0..d {
            c.set(&[i, jb], ui.derivative(d + jb)?);
        }
    }
    let dt = det(&c);
    Ok(if dt.val() < 0.0 { -dt } else { dt })
}

/// Residuals of the first and second derivative formulas for `m̃`, relative to `m̃`.
pub fn mt_derivative_check(sp: &SigmaPoint) -> Result<(f64, f64)> {
    let d = sp.d();
    let sd = SigmaData::plain(sp);
    let fr = frame(&sd)?;
    let mt = mt_jet(&sp.u, d)?;
    let m0 = mt.val();
    let u = |v: &[usize]| sd.u.get(v);
    let ci = |jb: usize, i: usize| fr.cinv.at(&[jb, i]);
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for i in 0..d {
        let mut v = 0.0;
        for j in 0..d {
            for kb in 0..d {
                v += ci(kb, j) * u(&[i, j, d + kb]);
            }
        }
        r1 = r1.max((mt.d(&[i]) - v * m0).abs() / m0);
        for j in 0..d {
            let mut w = 0.0;
            for k in 0..d {
                for lb in 0..d {
                    w += ci(lb, k) * u(&[i, j, k, d + lb]);
                    for m in 0..d {
                        for nb in 0..d {
                            w -= ci(nb, k) * ci(lb, m) * u(&[i, k, d + lb]) * u(&[j, m, d + nb]);
                            w += ci(lb, k) * ci(nb, m) * u(&[i, k, d + lb]) * u(&[j, m, d + nb]);
                        }
                    }
                }
            }
            r2 = r2.max((mt.d(&[i, j]) - w * m0).abs() / m0);
        }
    }
    Ok((r1, r2))
}

/// Residuals of the third- and fourth-derivative formulas for `u` on Σ.
pub fn u_derivative_check(sp: &SigmaPoint) -> Result<(f64, f64)> {
    let d = sp.d();
    let sd = SigmaData::plain(sp);
    let fr = frame(&sd)?;
    let dual = frame(&SigmaData::dual(sp))?;
    let u = |v: &[usize]| sd.u.get(v);
    let dy = |i: usize, ib: usize| sd.dy.at(&[i, ib]);
    let ci = |sb: usize, t: usize| fr.cinv.at(&[sb, t]);
    let h = |i: usize, j: usize, k: usize| fr.h.at(&[i, j, k]);
    let gb = ginv_bar(&sd, &fr);
    let b = |i: usize| d + i;
    let mut r3 = 0.0f64;
    let mut r4 = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut v = -2.0 * h(i, j, k);
                for a in 0..d {
                    v -= u(&[b(a), j, k]) * dy(i, a) + u(&[i, b(a), k]) * dy(j, a) + u(&[i, j, b(a)]) * dy(k, a);
                }
                r3 = r3.max((u(&[i, j, k]) - v).abs());
                for l in 0..d {
                    let mut w = -2.0 * dual.h.get(&[i, j, k]).d(&[l]);
                    for lb in 0..d {
                        let mut s = 0.0;
                        for a in 0..d {
                            s += u(&[b(a), j, k, b(lb)]) * dy(i, a)
                                + u(&[i, b(a), k, b(lb)]) * dy(j, a)
                                + u(&[i, j, b(a), b(lb)]) * dy(k, a);
                        }
                        w -= s * dy(l, lb);
                    }
                    for a in 0..d {
                        w -= u(&[b(a), j, k, l]) * dy(i, a)
                            + u(&[i, b(a), k, l]) * dy(j, a)
                            + u(&[i, j, b(a), l]) * dy(k, a)
                            + u(&[i, j, k, b(a)]) * dy(l, a);
                    }
                    for lb in 0..d {
                        for sb in 0..d {
                            for t in 0..d {
                                let mut s = 0.0;
                                for a in 0..d {
                                    s += u(&[b(a), b(lb), t]) * u(&[j, k, b(sb)]) * dy(i, a)
                                        + u(&[i, k, b(sb)]) * u(&[b(a), b(lb), t]) * dy(j, a)
                                        + u(&[i, j, b(sb)]) * u(&[b(a), b(lb), t]) * dy(k, a);
                                }
                                w += dy(l, lb) * ci(sb, t) * s;
                            }
                        }
                    }
                    for sb in 0..d {
                        for tb in 0..d {
                            w += gb.at(&[sb, tb])
                                * (u(&[i, j, b(sb)]) * u(&[k, l, b(tb)])
                                    + u(&[i, k, b(sb)]) * u(&[j, l, b(tb)])
                                    + u(&[i, l, b(sb)]) * u(&[j, k, b(tb)]));
                        }
                        for t in 0..d {
                            w -= 2.0
                                * ci(sb, t)
                                * (u(&[i, j, b(sb)]) * h(k, l, t) + u(&[i, k, b(sb)]) * h(j, l, t) + u(&[j, k, b(sb)]) * h(i, l, t));
                        }
                    }
                    r4 = r4.max((u(&[i, j, k, l]) - w).abs());
                }
            }
        }
    }
    Ok((r3, r4))
}

/// `Δ̃f = −4 c^{ī j} ∂_{ī j} f`.
pub fn ambient_laplacian(fr: &Frame<f64>, f: &Partials<f64>) -> f64 {
    let d = fr.g.dim();
    let mut s = 0.0;
    for ib in 0..d {
        for j in 0..d {
            s += fr.cinv.at(&[ib, j]) * f.get(&[d + ib, j]);
        }
    }
    -4.0 * s
}

/// Tangential coordinates of the ambient gradient split `G + N` (with `N` carried as `KN`).
#[derive(Debug, Clone)]
pub struct GradientSplit<S> {
    pub g_up: Vec<S>,
    pub n_up: Vec<S>,
    pub g_low: Vec<S>,
    pub n_low: Vec<S>,
}

pub fn gradient_split<S: Scalar>(sd: &SigmaData<S>, fr: &Frame<S>, f: &Partials<S>) -> GradientSplit<S> {
    let d = sd.d;
    // ambient gradient: x-part −2 c^{ā j} f_ā, y-part −2 c^{b̄ i} f_i
    let gx: Vec<S> = (0..d).map(|j| sum((0..d).map(|a| fr.cinv.at(&[a, j]) * f.get(&[d + a])))).map(|v| v.scale(-2.0)).collect();
    let gy: Vec<S> = (0..d).map(|bb| sum((0..d).map(|i| fr.cinv.at(&[bb, i]) * f.get(&[i])))).map(|v| v.scale(-2.0)).collect();
    // y-part equals ∂_i y^ā (G^i − N^i)
    let diff: Vec<S> = (0..d).map(|i| sum((0..d).map(|a| fr.dxdy.at(&[a, i]) * gy[a].clone()))).collect();
    let g_up: Vec<S> = (0..d).map(|i| (gx[i].clone() + diff[i].clone()).scale(0.5)).collect();
    let n_up: Vec<S> = (0..d).map(|i| (gx[i].clone() - diff[i].clone()).scale(0.5)).collect();
    let lower = |v: &[S]| -> Vec<S> { (0..d).map(|k| sum((0..d).map(|l| fr.g.at(&[k, l]) * v[l].clone()))).collect() };
    GradientSplit { g_low: lower(&g_up), n_low: lower(&n_up), g_up, n_up }
}

/// Residuals of `∂_i f = ½(G_i − N_i)` and of the frame round trip
/// `∂_ā f = −½ c_{i ā}(G^i + N^i)`.
pub fn gradient_split_check(sd: &SigmaData<f64>, fr: &Frame<f64>, f: &Partials<f64>) -> (f64, f64) {
    let d = sd.d;
    let gs = gradient_split(sd, fr, f);
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for i in 0..d {
        r1 = r1.max((f.get(&[i]) - 0.5 * (gs.g_low[i] - gs.n_low[i])).abs());
        let v: f64 = (0..d).map(|k| -0.5 * fr.c.at(&[k, i]) * (gs.g_up[k] + gs.n_up[k])).sum();
        r2 = r2.max((f.get(&[d + i]) - v).abs());
    }
    (r1, r2)
}

/// `⟨N, H⟩ = −u^{ij} N_i H_j`.
pub fn normal_dot_mean(fr: &Frame<f64>, gs: &GradientSplit<f64>) -> f64 {
    let d = fr.g.dim();
    -(0..d).map(|i| gs.n_up[i] * fr.mean_low[i]).sum::<f64>()
}

/// `div V = m⁻¹ ∂_i (m V^i)` for a vector field given as first-order jets along Σ.
pub fn divergence(dual: &Frame<Jet64>, v_up: &[Jet64]) -> f64 {
    let m = &dual.m;
    let mut s = 0.0;
    for (i, v) in v_up.iter().enumerate() {
        s += (m.clone() * v.clone()).d(&[i]);
    }
    s / m.val()
}

/// Full ambient curvature from the Kim–McCann metric by brute force, slots
/// over all 2d indices, and its scalar. Independent of the block formulas.
pub fn ambient_curvature_direct(sp: &SigmaPoint) -> Result<(Tensor64, f64)> {
    let d = sp.d();
    let n = 2 * d;
    let u2 = sp.u.truncate(4);
    let metric = |a: usize, b: usize| -> Result<Jet64> {
        if (a < d) == (b < d) {
            return Ok(Jet64::constant(0.0));
        }
        Ok(u2.derivative(a)?.derivative(b)?.scale(-0.5))
    };
    let mut gt = Tensor::<Jet64>::zeros(n, 2);
    for a in 0..n {
        for b in 0..n {
            gt.set(&[a, b], metric(a, b)?);
        }
    }
    // lift broadcast zeros into the layout so LU sees uniform jets
    let zero = u2.derivative(0)?.derivative(d)?.scale(0.0);
    let gt = gt.map(|v| v.clone() + zero.clone());
    let ginv = tensor::inverse(&gt)?.map(|v| v.truncate(1));
    let dg = |a: usize, b: usize, c: usize| -> Jet64 { gt.get(&[a, b]).derivative(c).expect("order 2") };
    // Γ^γ_{αβ} as first-order jets
    let mut gam = Tensor::<Jet64>::zeros(n, 3);
    for gmm in 0..n {
        for al in 0..n {
            for be in 0..n {
                let mut s = Jet64::constant(0.0);
                for de in 0..n {
                    let first = (dg(de, be, al) + dg(de, al, be) - dg(al, be, de)).scale(0.5);
                    s = s + ginv.get(&[gmm, de]).clone() * first;
                }
                gam.set(&[gmm, al, be], s);
            }
        }
    }
    let gv = |a: usize, b: usize, c: usize| gam.get(&[a, b, c]).val();
    let dgv = |a: usize, b: usize, c: usize, e: usize| gam.get(&[a, b, c]).d(&[e]);
    let rt = Tensor::from_fn(n, 4, |ix| {
        let (al, be, ga, de) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = 0.0;
        for p in 0..n {
            let mut r = dgv(p, al, ga, be) - dgv(p, be, ga, al);
            for m in 0..n {
                r += gv(m, al, ga) * gv(p, be, m) - gv(m, be, ga) * gv(p, al, m);
            }
            s += gt.get(&[de, p]).val() * r;
        }
        s
    });
    let gi = |a: usize, b: usize| ginv.get(&[a, b]).val();
    let mut scalar = 0.0;
    for al in 0..n {
        for be in 0..n {
            for ga in 0..n {
                for de in 0..n {
                    scalar += gi(al, de) * gi(be, ga) * rt.at(&[be, al, ga, de]);
                }
            }
        }
    }
    Ok((rt, scalar))
}

/// Seeded jet of `f` on `X × Y` from a user expression evaluated in all 2d variables.
pub fn expr_jet(e: &crate::Expr, x: &[f64], y: &[f64], order: usize) -> Result<Jet64> {
    let mut p = x.to_vec();
    p.extend_from_slice(y);
    let vars = seed_vars(&p, order)?;
    let (xs, ys) = vars.split_at(x.len());
    let v = e.eval(xs, ys)?;
    // constants come back without a layout
    Ok(v + vars[0].scale(0.0))
}
