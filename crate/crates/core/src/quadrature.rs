//! Gauss rules, tensor grids, adaptive Gauss–Kronrod and deterministic sums.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Largest Gauss–Hermite rule the root finder is validated for.
pub const MAX_HERMITE_NODES: usize = 160;

/// Gauss–Hermite rule for the standard normal weight `e^{−z²/2}/√(2π)`;
/// weights sum to one. Valid up to [`MAX_HERMITE_NODES`].
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // orthonormal Hermite recurrence for weight e^{−t²}, then t = z/√2
    let pim4 = PI.powf(-0.25);
    let mut t = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * t[0],
            3 => 1.91 * z - 0.91 * t[1],
            _ => 2.0 * z - t[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        t[i] = z;
        t[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let s = 2f64.sqrt();
    let norm = PI.sqrt();
    let mut nodes: Vec<f64> = t.iter().map(|v| v * s).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / norm).collect();
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Tensor-product Gauss–Legendre grid over a box.
pub fn legendre_grid(bx: &[(f64, f64)], n: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_legendre(n);
    let axes: Vec<Vec<(f64, f64)>> = bx
        .iter()
        .map(|&(a, b)| {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
        })
        .collect();
    product(&axes)
}

/// Tensor product of one-dimensional `(node, weight)` lists.
pub fn product(axes: &[Vec<(f64, f64)>]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (p, w) in &out {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                next.push((q, w * wx));
            }
        }
        out = next;
    }
    out
}

/// Pairwise summation in a fixed tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2..=8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Subdivision budget of [`adaptive`].
pub const MAX_SUBDIVISIONS: usize = 2000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err.total_cmp(&o.err).is_eq()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) on [a, b] with absolute tolerance
/// `tol`: the segment with the largest error estimate is bisected until the
/// total estimate drops below `tol`, reaches the round-off floor, or the
/// subdivision budget runs out.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (value, err) = gk15(f, a, b);
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let (mut total_err, mut total_abs) = (err, value.abs());
    for _ in 0..MAX_SUBDIVISIONS {
        if total_err <= tol || total_err <= 50.0 * f64::EPSILON * total_abs {
            break;
        }
        let s = heap.pop().expect("nonempty");
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) {
            heap.push(s);
            break;
        }
        let (v1, e1) = gk15(f, s.a, m);
        let (v2, e2) = gk15(f, m, s.b);
        total_err += e1 + e2 - s.err;
        total_abs += v1.abs() + v2.abs() - s.value.abs();
        heap.push(Segment { a: s.a, b: m, value: v1, err: e1 });
        heap.push(Segment { a: m, b: s.b, value: v2, err: e2 });
    }
    // sum in position order so the result does not depend on heap layout
    let mut segs = heap.into_vec();
    segs.sort_by(|p, q| p.a.total_cmp(&q.a));
    let vals: Vec<f64> = segs.iter().map(|s| s.value).collect();
    pairwise_sum(&vals)
}

/// Iterated adaptive quadrature over a box.
pub fn adaptive_box(f: &mut dyn FnMut(&[f64]) -> f64, bx: &[(f64, f64)], tol: f64) -> f64 {
    let mut pt = vec![0.0; bx.len()];
    adaptive_box_rec(f, bx, tol, &mut pt, 0)
}

fn adaptive_box_rec(f: &mut dyn FnMut(&[f64]) -> f64, bx: &[(f64, f64)], tol: f64, pt: &mut Vec<f64>, axis: usize) -> f64 {
    if axis == bx.len() {
        return f(pt);
    }
    let (a, b) = bx[axis];
    let inner_tol = tol / (b - a).max(1e-300);
    let mut g = |s: f64| {
        pt[axis] = s;
        adaptive_box_rec(f, bx, inner_tol, pt, axis + 1)
    };
    adaptive(&mut g, a, b, tol)
}

/// Halton low-discrepancy point `i` (1-based recommended) in [0, 1)^dim.
pub fn halton(i: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|k| {
            let b = PRIMES[k % PRIMES.len()];
            let (mut f, mut r, mut n) = (1.0, 0.0, i);
            while n > 0 {
                f /= b as f64;
                r += f * (n % b) as f64;
                n /= b;
            }
            r
        })
        .collect()
}
