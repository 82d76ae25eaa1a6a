//! Truncated multivariate Taylor jets.
//!
//! Coefficients are stored densely by total degree in the Taylor convention
//! `coeff(α) = ∂^α f / α!`, so multiplication is a truncated convolution.
//! Index tables for each `(num_vars, order)` pair are built once and shared.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_traits::Float;
use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_ORDER: usize = 6;
pub const MAX_VARS: usize = 8;

/// Multi-index bookkeeping for one `(num_vars, order)` pair.
#[derive(Debug)]
pub struct Layout {
    pub num_vars: usize,
    pub order: usize,
    multis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    degree: Vec<usize>,
    mul_table: Vec<(u32, u32, u32)>,
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl Layout {
    fn build(num_vars: usize, order: usize) -> Layout {
        let mut multis = Vec::new();
        let mut cur = vec![0u8; num_vars];
        for deg in 0..=order {
            fill_degree(&mut multis, &mut cur, 0, deg);
        }
        let index: HashMap<Vec<u8>, usize> =
            multis.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree: Vec<usize> = multis.iter().map(|m| m.iter().map(|&a| a as usize).sum()).collect();
        let mut mul_table = Vec::new();
        let mut sum = vec![0u8; num_vars];
        for (i, a) in multis.iter().enumerate() {
            for (j, b) in multis.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    // graded order: later j only grow in degree
                    if degree[j] > order - degree[i] {
                        break;
                    }
                    continue;
                }
                for v in 0..num_vars {
                    sum[v] = a[v] + b[v];
                }
                mul_table.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        debug_assert_eq!(multis.len(), binomial(num_vars + order, order));
        Layout { num_vars, order, multis, index, degree, mul_table }
    }

    pub fn get(num_vars: usize, order: usize) -> &'static Layout {
        static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), &'static Layout>>> = OnceLock::new();
        let reg = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = reg.lock().expect("layout registry poisoned");
        map.entry((num_vars, order))
            .or_insert_with(|| Box::leak(Box::new(Layout::build(num_vars, order))))
    }

    pub fn len(&self) -> usize {
        self.multis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multis.is_empty()
    }

    pub fn multi(&self, i: usize) -> &[u8] {
        &self.multis[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

fn fill_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, remaining: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for a in (0..=remaining).rev() {
        cur[pos] = a as u8;
        fill_degree(out, cur, pos + 1, remaining - a);
    }
    cur[pos] = 0;
}

/// Multi-index counts from a list of variable indices, e.g. `[0, 2, 2]` → `(1, 0, 2)`.
pub fn multi_index(num_vars: usize, vars: &[usize]) -> Vec<u8> {
    let mut a = vec![0u8; num_vars];
    for &v in vars {
        a[v] += 1;
    }
    a
}

/// A truncated Taylor expansion. A jet without layout is a constant that
/// broadcasts against any other jet.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    layout: Option<&'static Layout>,
    coeffs: Vec<T>,
    base: Option<Arc<[T]>>,
}

pub trait JetFloat: Float + Debug + Send + Sync + 'static {}
impl<T: Float + Debug + Send + Sync + 'static> JetFloat for T {}

fn cast<T: JetFloat>(v: f64) -> T {
    T::from(v).expect("float conversion")
}

impl<T: JetFloat> Jet<T> {
    pub fn constant(v: T) -> Self {
        Jet { layout: None, coeffs: vec![v], base: None }
    }

    /// A constant jet that carries an explicit layout and base point.
    pub fn constant_in(layout: &'static Layout, base: Option<Arc<[T]>>, v: T) -> Self {
        let mut coeffs = vec![T::zero(); layout.len()];
        coeffs[0] = v;
        Jet { layout: Some(layout), coeffs, base }
    }

    pub fn from_coeffs(num_vars: usize, order: usize, coeffs: Vec<T>, base: Option<Vec<T>>) -> Result<Self> {
        check_caps(num_vars, order)?;
        let layout = Layout::get(num_vars, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Capability(format!(
                "expected {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout: Some(layout), coeffs, base: base.map(Arc::from) })
    }

    pub fn layout(&self) -> Option<&'static Layout> {
        self.layout
    }

    pub fn num_vars(&self) -> usize {
        self.layout.map_or(0, |l| l.num_vars)
    }

    pub fn order(&self) -> usize {
        self.layout.map_or(0, |l| l.order)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn base_point(&self) -> Option<&[T]> {
        self.base.as_deref()
    }

    pub fn val(&self) -> T {
        self.coeffs[0]
    }

    pub fn is_constant(&self) -> bool {
        self.layout.is_none()
    }

    /// Taylor coefficient at a multi-index (zero beyond the stored order).
    pub fn coeff(&self, alpha: &[u8]) -> T {
        match self.layout {
            None => {
                if alpha.iter().all(|&a| a == 0) {
                    self.coeffs[0]
                } else {
                    T::zero()
                }
            }
            Some(l) => l.index_of(alpha).map_or(T::zero(), |i| self.coeffs[i]),
        }
    }

    /// `∂^α f` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> Result<T> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order() && self.layout.is_some() {
            return Err(Error::Capability(format!("|α| = {deg} exceeds jet order {}", self.order())));
        }
        let fact: f64 = alpha.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product();
        Ok(self.coeff(alpha) * cast(fact))
    }

    /// Partial derivative by a list of variable indices, e.g. `[0, 0, 3]`.
    pub fn d(&self, vars: &[usize]) -> T {
        let n = self.num_vars().max(vars.iter().map(|v| v + 1).max().unwrap_or(0));
        self.partial(&multi_index(n, vars)).unwrap_or_else(|_| T::zero())
    }

    fn merge_layout(&self, other: &Self) -> (Option<&'static Layout>, Option<Arc<[T]>>) {
        let layout = match (self.layout, other.layout) {
            (Some(a), Some(b)) => {
                assert!(std::ptr::eq(a, b), "jet layout mismatch: ({}, {}) vs ({}, {})", a.num_vars, a.order, b.num_vars, b.order);
                Some(a)
            }
            (a, b) => a.or(b),
        };
        (layout, self.base.clone().or_else(|| other.base.clone()))
    }

    fn deviation(&self) -> Self {
        let mut d = self.clone();
        d.coeffs[0] = T::zero();
        d
    }

    fn mul_ref(&self, other: &Self) -> Self {
        if self.layout.is_none() {
            return other.scale_t(self.coeffs[0]);
        }
        if other.layout.is_none() {
            return self.scale_t(other.coeffs[0]);
        }
        let (layout, base) = self.merge_layout(other);
        let l = layout.expect("non-constant");
        let mut out = vec![T::zero(); l.len()];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &l.mul_table {
            out[k as usize] = out[k as usize] + a[i as usize] * b[j as usize];
        }
        Jet { layout, coeffs: out, base }
    }

    fn scale_t(&self, k: T) -> Self {
        Jet { layout: self.layout, coeffs: self.coeffs.iter().map(|&c| c * k).collect(), base: self.base.clone() }
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let (layout, base) = self.merge_layout(other);
        let n = layout.map_or(1, |l| l.len());
        let get = |j: &Self, i: usize| if i < j.coeffs.len() { j.coeffs[i] } else { T::zero() };
        let coeffs = (0..n).map(|i| f(get(self, i), get(other, i))).collect();
        Jet { layout, coeffs, base }
    }

    /// Univariate composition `Σ_k taylor[k] · (a − a₀)^k` by Horner's rule.
    fn compose_univariate(&self, taylor: &[T]) -> Self {
        let k_max = taylor.len() - 1;
        if self.layout.is_none() {
            return Jet::constant(taylor[0]);
        }
        let dev = self.deviation();
        let mut r = Jet::constant_in(self.layout.unwrap(), self.base.clone(), taylor[k_max]);
        for k in (0..k_max).rev() {
            r = r.mul_ref(&dev);
            r.coeffs[0] = r.coeffs[0] + taylor[k];
        }
        r
    }

    fn taylor_len(&self) -> usize {
        self.order() + 1
    }

    pub fn try_ln(&self) -> Result<Self> {
        let a0 = self.val();
        if !(a0 > T::zero()) {
            return Err(Error::Domain(format!("log of non-positive value {a0:?}")));
        }
        Ok(Scalar::ln(self))
    }

    pub fn try_sqrt(&self) -> Result<Self> {
        let a0 = self.val();
        if !(a0 > T::zero()) {
            return Err(Error::Domain(format!("sqrt needs a positive value, got {a0:?}")));
        }
        Ok(Scalar::sqrt(self))
    }

    pub fn try_recip(&self) -> Result<Self> {
        if self.val() == T::zero() {
            return Err(Error::SingularJet("division by a jet with zero value".into()));
        }
        Ok(Scalar::recip(self))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul_ref(&other.try_recip()?))
    }

    /// `∂f/∂z_v` as a jet of one lower order.
    pub fn derivative(&self, v: usize) -> Result<Self> {
        let Some(l) = self.layout else {
            return Ok(Jet::constant(T::zero()));
        };
        if l.order == 0 {
            return Err(Error::Capability("cannot differentiate an order-0 jet".into()));
        }
        let lo = Layout::get(l.num_vars, l.order - 1);
        let mut out = vec![T::zero(); lo.len()];
        let mut up = vec![0u8; l.num_vars];
        for (i, beta) in lo.multis.iter().enumerate() {
            up.copy_from_slice(beta);
            up[v] += 1;
            out[i] = self.coeffs[l.index[&up]] * cast(up[v] as f64);
        }
        Ok(Jet { layout: Some(lo), coeffs: out, base: self.base.clone() })
    }

    /// Drop all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let Some(l) = self.layout else { return self.clone() };
        if order >= l.order {
            return self.clone();
        }
        let lo = Layout::get(l.num_vars, order);
        Jet { layout: Some(lo), coeffs: self.coeffs[..lo.len()].to_vec(), base: self.base.clone() }
    }

    /// Restriction to the listed variables, the others frozen at the base point.
    pub fn restrict_vars(&self, keep: &[usize]) -> Self {
        let Some(l) = self.layout else { return self.clone() };
        let lo = Layout::get(keep.len(), l.order);
        let mut full = vec![0u8; l.num_vars];
        let coeffs = lo
            .multis
            .iter()
            .map(|beta| {
                full.iter_mut().for_each(|a| *a = 0);
                for (k, &v) in keep.iter().enumerate() {
                    full[v] = beta[k];
                }
                self.coeffs[l.index[&full]]
            })
            .collect();
        let base = self.base.as_ref().map(|b| keep.iter().map(|&v| b[v]).collect::<Vec<_>>().into());
        Jet { layout: Some(lo), coeffs, base }
    }

    /// Relabel variables: new variable `i` is old variable `perm[i]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        let Some(l) = self.layout else { return self.clone() };
        let mut old = vec![0u8; l.num_vars];
        let coeffs = l
            .multis
            .iter()
            .map(|beta| {
                for (i, &p) in perm.iter().enumerate() {
                    old[p] = beta[i];
                }
                self.coeffs[l.index[&old]]
            })
            .collect();
        let base = self.base.as_ref().map(|b| perm.iter().map(|&p| b[p]).collect::<Vec<_>>().into());
        Jet { layout: self.layout, coeffs, base }
    }

    /// Substitute jets for the variables of this polynomial:
    /// `Σ_α coeff(α) Π_v (args[v] − args[v]₀)^{α_v}`. The constant terms of
    /// `args` are taken to be this jet's base point.
    pub fn compose(&self, args: &[Jet<T>]) -> Self {
        let Some(l) = self.layout else { return self.clone() };
        assert_eq!(args.len(), l.num_vars, "compose needs one argument per variable");
        let devs: Vec<Jet<T>> = args.iter().map(|a| a.deviation()).collect();
        let mut powers: Vec<Vec<Jet<T>>> = Vec::with_capacity(l.num_vars);
        for d in &devs {
            let mut p = vec![Jet::constant(T::one())];
            for k in 1..=l.order {
                let next = p[k - 1].mul_ref(d);
                p.push(next);
            }
            powers.push(p);
        }
        let mut acc = Jet::constant(T::zero());
        for (i, alpha) in l.multis.iter().enumerate() {
            let c = self.coeffs[i];
            if c == T::zero() {
                continue;
            }
            let mut term = Jet::constant(c);
            for (v, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    term = term.mul_ref(&powers[v][a as usize]);
                }
            }
            acc = acc + term;
        }
        acc
    }
}

fn check_caps(num_vars: usize, order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Capability(format!("jet order {order} exceeds {MAX_ORDER}")));
    }
    if num_vars > MAX_VARS {
        return Err(Error::Capability(format!("{num_vars} jet variables exceed {MAX_VARS}")));
    }
    Ok(())
}

/// One jet per coordinate, each the identity function of that coordinate.
pub fn seed_vars<T: JetFloat>(point: &[T], order: usize) -> Result<Vec<Jet<T>>> {
    check_caps(point.len(), order)?;
    let layout = Layout::get(point.len(), order);
    let base: Arc<[T]> = Arc::from(point.to_vec());
    Ok((0..point.len())
        .map(|v| {
            let mut j = Jet::constant_in(layout, Some(base.clone()), point[v]);
            if order >= 1 {
                let mut e = vec![0u8; point.len()];
                e[v] = 1;
                j.coeffs[layout.index[&e]] = T::one();
            }
            j
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Power with the exponent taken from the right operand's value.
    Pow,
}

pub fn jet_arith<T: JetFloat>(a: &Jet<T>, b: &Jet<T>, op: ArithOp) -> Result<Jet<T>> {
    if let (Some(la), Some(lb)) = (a.layout, b.layout) {
        if !std::ptr::eq(la, lb) {
            return Err(Error::Capability("jets with different layouts".into()));
        }
    }
    if let (Some(ba), Some(bb)) = (&a.base, &b.base) {
        if ba != bb {
            return Err(Error::Capability("jets with different base points".into()));
        }
    }
    Ok(match op {
        ArithOp::Add => a.clone() + b.clone(),
        ArithOp::Sub => a.clone() - b.clone(),
        ArithOp::Mul => a.mul_ref(b),
        ArithOp::Div => a.try_div(b)?,
        ArithOp::Pow => {
            if !b.deviation().coeffs.iter().all(|&c| c == T::zero()) {
                return Err(Error::Capability("pow needs a constant exponent".into()));
            }
            let p = b.val().to_f64().unwrap_or(f64::NAN);
            if p.fract() == 0.0 && p.abs() < 64.0 {
                if p < 0.0 {
                    a.try_recip()?.powi(-p as i32)
                } else {
                    Scalar::powi(a, p as i32)
                }
            } else {
                if !(a.val() > T::zero()) {
                    return Err(Error::Domain("fractional power of a non-positive value".into()));
                }
                Scalar::powf(a, p)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
    Sin,
    Cos,
}

pub fn jet_unary<T: JetFloat>(a: &Jet<T>, f: UnaryFn) -> Result<Jet<T>> {
    Ok(match f {
        UnaryFn::Exp => Scalar::exp(a),
        UnaryFn::Log => a.try_ln()?,
        UnaryFn::Sqrt => a.try_sqrt()?,
        UnaryFn::Cosh => Scalar::cosh(a),
        UnaryFn::Sinh => Scalar::sinh(a),
        UnaryFn::Sin => Scalar::sin(a),
        UnaryFn::Cos => Scalar::cos(a),
    })
}

impl<T: JetFloat> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<T: JetFloat> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<T: JetFloat> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl<T: JetFloat> Div for Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: Self) -> Self {
        self.mul_ref(&Scalar::recip(&rhs))
    }
}

impl<T: JetFloat> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Self {
        self.scale_t(-T::one())
    }
}

impl<T: JetFloat> Scalar for Jet<T> {
    fn from_f64(v: f64) -> Self {
        Jet::constant(cast(v))
    }

    fn value(&self) -> f64 {
        self.val().to_f64().unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Self {
        let e = self.val().exp();
        let mut t = vec![e; self.taylor_len()];
        for k in 1..t.len() {
            t[k] = t[k - 1] / cast(k as f64);
        }
        self.compose_univariate(&t)
    }

    fn ln(&self) -> Self {
        let a0 = self.val();
        let mut t = vec![a0.ln(); self.taylor_len()];
        let mut p = T::one();
        for k in 1..t.len() {
            p = p * a0;
            let sign = if k % 2 == 1 { T::one() } else { -T::one() };
            t[k] = sign / (cast::<T>(k as f64) * p);
        }
        self.compose_univariate(&t)
    }

    fn sqrt(&self) -> Self {
        Scalar::powf(self, 0.5)
    }

    fn sin(&self) -> Self {
        let (s, c) = (self.val().sin(), self.val().cos());
        self.compose_univariate(&trig_series(self.taylor_len(), s, c, -T::one()))
    }

    fn cos(&self) -> Self {
        let (s, c) = (self.val().sin(), self.val().cos());
        self.compose_univariate(&trig_series(self.taylor_len(), c, -s, -T::one()))
    }

    fn sinh(&self) -> Self {
        let (s, c) = (self.val().sinh(), self.val().cosh());
        self.compose_univariate(&trig_series(self.taylor_len(), s, c, T::one()))
    }

    fn cosh(&self) -> Self {
        let (s, c) = (self.val().sinh(), self.val().cosh());
        self.compose_univariate(&trig_series(self.taylor_len(), c, s, T::one()))
    }

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return Scalar::powi(&Scalar::recip(self), -n);
        }
        let mut acc = Jet::constant(T::one());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        acc
    }

    fn powf(&self, p: f64) -> Self {
        let a0 = self.val();
        let pt: T = cast(p);
        let mut t = vec![a0.powf(pt); self.taylor_len()];
        for k in 1..t.len() {
            // generalized binomial: a0^p · C(p, k) / a0^k
            t[k] = t[k - 1] * (pt - cast((k - 1) as f64)) / (cast::<T>(k as f64) * a0);
        }
        self.compose_univariate(&t)
    }

    fn recip(&self) -> Self {
        let a0 = self.val();
        let mut t = vec![a0.recip(); self.taylor_len()];
        for k in 1..t.len() {
            t[k] = -t[k - 1] / a0;
        }
        self.compose_univariate(&t)
    }
}

/// Taylor coefficients of a function whose derivatives cycle `f, f', s·f, s·f', …`.
fn trig_series<T: JetFloat>(n: usize, f0: T, f1: T, s: T) -> Vec<T> {
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        let v = match k % 4 {
            0 => f0,
            1 => f1,
            2 => s * f0,
            _ => s * f1,
        };
        d.push(v);
    }
    let mut fact = T::one();
    for (k, v) in d.iter_mut().enumerate() {
        if k > 0 {
            fact = fact * cast(k as f64);
        }
        *v = *v / fact;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sizes_match_binomial() {
        for n in 1..=4 {
            for k in 0..=6 {
                assert_eq!(Layout::get(n, k).len(), binomial(n + k, k));
            }
        }
    }

    #[test]
    fn seed_identity() {
        let z = seed_vars(&[2.0f64], 2).unwrap();
        assert_eq!(z[0].coeffs(), &[2.0, 1.0, 0.0]);
        let z = seed_vars(&[0.0f64, 0.0], 1).unwrap();
        assert_eq!(z[0].d(&[]), 0.0);
        assert_eq!(z[0].d(&[0]), 1.0);
        assert_eq!(z[0].d(&[1]), 0.0);
        assert!(seed_vars(&[0.0f64], 7).is_err());
    }

    #[test]
    fn square_and_reciprocal() {
        let z = seed_vars(&[3.0f64], 2).unwrap();
        let sq = jet_arith(&z[0], &z[0], ArithOp::Mul).unwrap();
        assert_eq!((sq.d(&[]), sq.d(&[0]), sq.d(&[0, 0])), (9.0, 6.0, 2.0));
        let z = seed_vars(&[2.0f64], 2).unwrap();
        let one = Jet::constant(1.0);
        let q = jet_arith(&one, &z[0], ArithOp::Div).unwrap();
        assert_relative_eq!(q.d(&[]), 0.5);
        assert_relative_eq!(q.d(&[0]), -0.25);
        assert_relative_eq!(q.d(&[0, 0]), 0.25);
        let zero = seed_vars(&[0.0f64], 2).unwrap();
        assert!(matches!(jet_arith(&one, &zero[0], ArithOp::Div), Err(Error::SingularJet(_))));
    }

    #[test]
    fn unary_examples() {
        let z = seed_vars(&[0.0f64], 4).unwrap();
        let e = jet_unary(&z[0], UnaryFn::Exp).unwrap();
        for k in 0..=4 {
            assert_relative_eq!(e.d(&vec![0; k]), 1.0);
        }
        let c = jet_unary(&z[0], UnaryFn::Cosh).unwrap() - Jet::constant(1.0);
        let want = [0.0, 0.0, 1.0, 0.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert_relative_eq!(c.d(&vec![0; k]), *w);
        }
        let z = seed_vars(&[0.0f64], 3).unwrap();
        let l = jet_unary(&(Jet::constant(1.0) + z[0].clone()), UnaryFn::Log).unwrap();
        assert_relative_eq!(l.d(&[0]), 1.0);
        assert_relative_eq!(l.d(&[0, 0]), -1.0);
        assert_relative_eq!(l.d(&[0, 0, 0]), 2.0);
        assert!(matches!(jet_unary(&(-Jet::constant(1.0) + z[0].clone()), UnaryFn::Log), Err(Error::Domain(_))));
    }

    #[test]
    fn partial_extraction() {
        let z = seed_vars(&[1.5f64, -0.7], 4).unwrap();
        let f = z[0].clone() * Scalar::powi(&z[1], 3);
        assert_relative_eq!(f.partial(&[1, 3]).unwrap(), 6.0);
        let z = seed_vars(&[0.3f64], 5).unwrap();
        assert_relative_eq!(Scalar::exp(&z[0]).partial(&[5]).unwrap(), 0.3f64.exp(), max_relative = 1e-14);
        assert!(z[0].partial(&[6]).is_err());
    }

    #[test]
    fn derivative_and_compose() {
        let z = seed_vars(&[0.4f64, 0.9], 4).unwrap();
        let f = Scalar::sin(&(z[0].clone() * z[1].clone())) + Scalar::exp(&z[1]);
        let fx = f.derivative(0).unwrap();
        assert_relative_eq!(fx.d(&[1, 1]), f.d(&[0, 1, 1]), max_relative = 1e-14);
        // compose with the identity recovers the jet
        let back = f.compose(&z);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn restrict_and_permute() {
        let z = seed_vars(&[0.2f64, 0.5, -0.3], 3).unwrap();
        let f = z[0].clone() * z[1].clone() * z[1].clone() + Scalar::cosh(&z[2]);
        let r = f.restrict_vars(&[1, 2]);
        assert_relative_eq!(r.d(&[0, 0]), 2.0 * 0.2);
        assert_relative_eq!(r.d(&[1, 1]), (-0.3f64).cosh());
        let p = f.permute_vars(&[2, 0, 1]);
        assert_relative_eq!(p.d(&[1, 2, 2]), f.d(&[0, 1, 1]));
        assert_relative_eq!(p.d(&[0, 0]), f.d(&[2, 2]));
    }

    #[test]
    fn works_in_single_precision() {
        let z = seed_vars(&[0.5f32], 3).unwrap();
        let f = Scalar::exp(&z[0]);
        assert!((f.d(&[0, 0, 0]) - 0.5f32.exp()).abs() < 1e-6);
    }
}
