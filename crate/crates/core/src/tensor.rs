//! Small dense tensors with all dimensions equal to `d`.
//!
//! Row-major storage. Barred and unbarred slot classes ride along as
//! metadata; only debug builds look at them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_RANK: usize = 4;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum IndexClass {
    Unbarred,
    Barred,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    dim: usize,
    classes: Vec<IndexClass>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Self::with_classes(dim, vec![IndexClass::Unbarred; rank])
    }

    pub fn with_classes(dim: usize, classes: Vec<IndexClass>) -> Self {
        assert!(classes.len() <= MAX_RANK && dim <= MAX_DIM, "tensor too large");
        let n = dim.pow(classes.len() as u32);
        Tensor { dim, classes, data: vec![S::zero(); n] }
    }

    pub fn from_fn(dim: usize, rank: usize, f: impl Fn(&[usize]) -> S) -> Self {
        let mut t = Self::zeros(dim, rank);
        let mut idx = vec![0usize; rank];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn scalar(v: S) -> Self {
        Tensor { dim: 0, classes: vec![], data: vec![v] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, 2, |i| if i[0] == i[1] { S::one() } else { S::zero() })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let d = rows.len();
        Self::from_fn(d, 2, |i| rows[i[0]][i[1]].clone())
    }

    pub fn rank(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[IndexClass] {
        &self.classes
    }

    pub fn set_classes(mut self, classes: Vec<IndexClass>) -> Self {
        assert_eq!(classes.len(), self.rank());
        self.classes = classes;
        self
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.dim.max(1);
            flat /= self.dim.max(1);
        }
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.flat(idx)]
    }

    pub fn at(&self, idx: &[usize]) -> S {
        self.data[self.flat(idx)].clone()
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let f = self.flat(idx);
        self.data[f] = v;
    }

    pub fn map<R: Scalar>(&self, f: impl Fn(&S) -> R) -> Tensor<R> {
        Tensor { dim: self.dim, classes: self.classes.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v.scale(k))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.clone() + b.clone();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Reorder slots: output slot `k` is input slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let r = self.rank();
        let classes = perm.iter().map(|&p| self.classes[p]).collect();
        let mut out = Tensor::with_classes(self.dim, classes);
        let mut idx = vec![0usize; r];
        let mut src = vec![0usize; r];
        for flat in 0..out.data.len() {
            out.unflatten(flat, &mut idx);
            for k in 0..r {
                src[perm[k]] = idx[k];
            }
            out.data[flat] = self.at(&src);
        }
        out
    }

    /// Average over all slot permutations.
    pub fn symmetrize(&self) -> Self {
        let perms = permutations(self.rank());
        let mut acc = Tensor::with_classes(self.dim, self.classes.clone());
        for p in &perms {
            acc = acc.add(&self.permute(p));
        }
        acc.scale(1.0 / perms.len() as f64)
    }

    /// Largest deviation from total symmetry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in permutations(self.rank()) {
            let q = self.permute(&p);
            for (a, b) in q.data.iter().zip(&self.data) {
                worst = worst.max((a.value() - b.value()).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.value().abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }

    pub fn values(&self) -> Tensor<f64> {
        Tensor { dim: self.dim, classes: self.classes.clone(), data: self.data.iter().map(|v| v.value()).collect() }
    }
}

/// Einstein sum over the given `(slot of a, slot of b)` pairs; free slots
/// come out in the order a-then-b.
pub fn contract<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, pairs: &[(usize, usize)]) -> Result<Tensor<S>> {
    let d = a.dim.max(b.dim);
    if a.rank() > 0 && b.rank() > 0 && a.dim != b.dim {
        return Err(Error::Capability("contracting tensors of different dimension".into()));
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|s| !pairs.iter().any(|p| p.0 == *s)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|s| !pairs.iter().any(|p| p.1 == *s)).collect();
    let out_rank = free_a.len() + free_b.len();
    if out_rank > MAX_RANK {
        return Err(Error::Capability(format!("contraction result of rank {out_rank} exceeds {MAX_RANK}")));
    }
    for &(sa, sb) in pairs {
        debug_assert_eq!(a.classes[sa], b.classes[sb], "contracting a barred slot with an unbarred one");
    }
    let classes: Vec<IndexClass> =
        free_a.iter().map(|&s| a.classes[s]).chain(free_b.iter().map(|&s| b.classes[s])).collect();
    let mut out = Tensor::with_classes(d, classes);
    let mut out_idx = vec![0usize; out_rank];
    let mut ia = vec![0usize; a.rank()];
    let mut ib = vec![0usize; b.rank()];
    let mut sum_idx = vec![0usize; pairs.len()];
    let n_sum = d.pow(pairs.len() as u32);
    for flat in 0..out.data.len() {
        out.unflatten(flat, &mut out_idx);
        for (k, &s) in free_a.iter().enumerate() {
            ia[s] = out_idx[k];
        }
        for (k, &s) in free_b.iter().enumerate() {
            ib[s] = out_idx[free_a.len() + k];
        }
        let mut acc = S::zero();
        for sflat in 0..n_sum {
            let mut rem = sflat;
            for slot in sum_idx.iter_mut().rev() {
                *slot = rem % d;
                rem /= d;
            }
            for (k, &(sa, sb)) in pairs.iter().enumerate() {
                ia[sa] = sum_idx[k];
                ib[sb] = sum_idx[k];
            }
            acc = acc + a.at(&ia) * b.at(&ib);
        }
        out.data[flat] = acc;
    }
    Ok(out)
}

/// LU factorization with partial pivoting (pivots chosen by primal value).
struct Lu<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
    sign: f64,
}

fn lu<S: Scalar>(m: &Tensor<S>) -> Option<Lu<S>> {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].value().abs().total_cmp(&a[j * n + k].value().abs()))?;
        if a[p * n + k].value() == 0.0 {
            return None;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let piv = a[k * n + k].clone();
        for i in k + 1..n {
            let f = a[i * n + k].clone() / piv.clone();
            for c in k + 1..n {
                a[i * n + c] = a[i * n + c].clone() - f.clone() * a[k * n + c].clone();
            }
            a[i * n + k] = f;
        }
    }
    Some(Lu { n, lu: a, perm, sign })
}

impl<S: Scalar> Lu<S> {
    fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] = x[i].clone() - self.lu[i * n + k].clone() * x[k].clone();
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] = x[i].clone() - self.lu[i * n + k].clone() * x[k].clone();
            }
            x[i] = x[i].clone() / self.lu[i * n + i].clone();
        }
        x
    }
}

pub fn det<S: Scalar>(m: &Tensor<S>) -> S {
    assert_eq!(m.rank(), 2, "det needs a matrix");
    match lu(m) {
        None => S::zero(),
        Some(f) => {
            let mut d = S::from_f64(f.sign);
            for i in 0..f.n {
                d = d * f.lu[i * f.n + i].clone();
            }
            d
        }
    }
}

/// Solve `M x = b`.
pub fn solve<S: Scalar>(m: &Tensor<S>, b: &[S]) -> Result<Vec<S>> {
    let f = lu(m).ok_or_else(|| Error::NonDegeneracy("singular matrix".into()))?;
    Ok(f.solve(b))
}

/// General inverse. Slot classes are swapped (an inverse of a `(i, j̄)`
/// block is indexed `(j̄, i)`).
pub fn inverse<S: Scalar>(m: &Tensor<S>) -> Result<Tensor<S>> {
    let n = m.dim();
    let f = lu(m).ok_or_else(|| Error::NonDegeneracy("singular matrix".into()))?;
    let mut out = Tensor::with_classes(n, vec![m.classes[1], m.classes[0]]);
    let mut e = vec![S::zero(); n];
    for c in 0..n {
        e.iter_mut().enumerate().for_each(|(i, v)| *v = if i == c { S::one() } else { S::zero() });
        let col = f.solve(&e);
        for (r, v) in col.into_iter().enumerate() {
            out.set(&[r, c], v);
        }
    }
    Ok(out)
}

fn inf_norm<S: Scalar>(m: &Tensor<S>) -> f64 {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(&[i, j]).value().abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse with a condition-number guard (∞-norm estimate).
pub fn invert_sym<S: Scalar>(m: &Tensor<S>, cond_limit: f64) -> Result<Tensor<S>> {
    let inv = inverse(m)?;
    let cond = inf_norm(m) * inf_norm(&inv);
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::NonDegeneracy(format!("condition number {cond:.3e} exceeds {cond_limit:.3e}")));
    }
    Ok(inv)
}

/// Lower Cholesky factor of a symmetric matrix; `None` unless positive definite.
pub fn cholesky(m: &Tensor<f64>) -> Option<Tensor<f64>> {
    let n = m.dim();
    let mut l = Tensor::zeros(n, 2);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.at(&[i, j]);
            for k in 0..j {
                s -= l.at(&[i, k]) * l.at(&[j, k]);
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l.set(&[i, i], s.sqrt());
            } else {
                l.set(&[i, j], s / l.at(&[j, j]));
            }
        }
    }
    Some(l)
}

pub fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    contract(a, b, &[(1, 0)]).expect("rank-2 product")
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
