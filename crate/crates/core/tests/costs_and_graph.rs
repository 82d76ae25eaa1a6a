use approx::assert_relative_eq;
use geolaplace::costs::{builtin, cross_difference, make_c_divergence, Builtin, CostFunction, DomainSpec};
use geolaplace::graph_map::{sigma_point, solve_graph};
use geolaplace::parse;
use proptest::prelude::*;

fn cube(d: usize) -> DomainSpec {
    DomainSpec::cube(d, -1.0, 1.0)
}

fn bayes_cubic() -> CostFunction {
    builtin(Builtin::Bayes { model: Some(vec![parse("x1 + x1^3/10", 1).unwrap()]) }, 1, cube(1)).unwrap()
}

fn families(d: usize) -> Vec<CostFunction> {
    vec![
        builtin(Builtin::Quadratic, d, cube(d)).unwrap(),
        builtin(Builtin::Translation { potential: None }, d, cube(d)).unwrap(),
        builtin(Builtin::Bregman { f: None }, d, cube(d)).unwrap(),
        builtin(Builtin::FenchelYoung { f: None, fstar: None }, d, cube(d)).unwrap(),
        builtin(Builtin::LogDivergence { alpha: 1.0, f: None }, d, DomainSpec::cube(d, 0.5, 1.5)).unwrap(),
        builtin(Builtin::Bayes { model: None }, d, cube(d)).unwrap(),
    ]
}

/// Map a unit-cube sample into the cost's box.
fn inside(cost: &CostFunction, t: &[f64]) -> Vec<f64> {
    cost.domain.x_box.iter().zip(t).map(|(&(a, b), s)| a + (b - a) * (0.05 + 0.9 * s)).collect()
}

#[test]
fn c_divergence_of_the_inner_product() {
    let u = make_c_divergence(parse("-dot(x,y)", 1).unwrap(), Some(parse("-norm2(x)/2", 1).unwrap()), Some(parse("-norm2(y)/2", 1).unwrap()), 1, cube(1)).unwrap();
    let direct = make_c_divergence(parse("(x1-y1)^2/2", 1).unwrap(), None, None, 1, cube(1)).unwrap();
    for (x, y) in [(0.3, -0.4), (1.0, 1.0), (-0.7, 0.2)] {
        assert_relative_eq!(u.u_value(&[x], &[y]).unwrap(), (x - y) * (x - y) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(direct.u_value(&[x], &[y]).unwrap(), (x - y) * (x - y) / 2.0, epsilon = 1e-15);
    }
}

#[test]
fn bregman_quartic() {
    let f = parse("x1^2/2 + x1^4/12", 1).unwrap();
    let c = builtin(Builtin::Bregman { f: Some(f) }, 1, cube(1)).unwrap();
    assert_eq!(c.u_value(&[1.0], &[1.0]).unwrap(), 0.0);
    let fx = |t: f64| t * t / 2.0 + t.powi(4) / 12.0;
    let (x, y) = (0.6, -0.3);
    let expected = fx(x) - fx(y) - (y + y.powi(3) / 3.0) * (x - y);
    assert_relative_eq!(c.u_value(&[x], &[y]).unwrap(), expected, epsilon = 1e-15);
}

#[test]
fn translation_log_divergence_and_bayes_vanish_on_sigma() {
    let t = builtin(Builtin::Translation { potential: Some(parse("cosh(x1) - 1", 1).unwrap()) }, 1, cube(1)).unwrap();
    assert_eq!(t.u_value(&[3.0], &[3.0]).unwrap(), 0.0);
    let l = builtin(Builtin::LogDivergence { alpha: 1.0, f: None }, 1, DomainSpec::cube(1, 0.5, 1.5)).unwrap();
    assert!(l.u_value(&[0.9], &[0.9]).unwrap().abs() < 1e-15);
    let b = bayes_cubic();
    assert!(b.u_value(&[0.5], &[0.5125]).unwrap().abs() < 1e-15);
    assert_relative_eq!(b.u_value(&[0.5], &[0.0]).unwrap(), 0.5125f64.powi(2) / 2.0, epsilon = 1e-15);
}

#[test]
fn cross_difference_examples() {
    let q = builtin(Builtin::Quadratic, 1, cube(1)).unwrap();
    for t in [0.1, -0.7, 2.0] {
        let delta = cross_difference(|x, y| q.u_value(x, y), &[0.3], &[-0.2], &[t], &[t]).unwrap();
        assert_relative_eq!(delta, t * t, epsilon = 1e-14);
    }
    assert_eq!(cross_difference(|x, y| q.u_value(x, y), &[0.3], &[-0.2], &[0.0], &[0.5]).unwrap(), 0.0);
}

#[test]
fn graph_examples() {
    let q = builtin(Builtin::Quadratic, 1, cube(1)).unwrap();
    assert_relative_eq!(solve_graph(&q, &[0.7], &[0.0], 1e-14, 50).unwrap()[0], 0.7, epsilon = 1e-14);
    let fy = builtin(Builtin::FenchelYoung { f: Some(parse("x1^2/2 + x1^4/12", 1).unwrap()), fstar: None }, 1, cube(1)).unwrap();
    assert_relative_eq!(sigma_point(&fy, &[1.0]).unwrap().y[0], 1.0 + 1.0 / 3.0, epsilon = 1e-12);
    assert_relative_eq!(sigma_point(&bayes_cubic(), &[0.5]).unwrap().y[0], 0.5125, epsilon = 1e-14);
}

#[test]
fn flat_and_diagonal_graph_derivatives() {
    let sp = sigma_point(&builtin(Builtin::Quadratic, 2, cube(2)).unwrap(), &[0.1, 0.2]).unwrap();
    assert!(sp.dy.max_abs_diff(&geolaplace::Tensor64::identity(2)) < 1e-14);
    assert!(sp.d2y.max_abs() < 1e-14 && sp.d3y.max_abs() < 1e-14);
    let sp = sigma_point(&builtin(Builtin::Bregman { f: None }, 2, cube(2)).unwrap(), &[0.3, -0.6]).unwrap();
    assert!(sp.dy.max_abs_diff(&geolaplace::Tensor64::identity(2)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_derivatives_match_finite_differences(t in prop::collection::vec(0.0f64..1.0, 2), which in 0usize..6) {
        let cost = &families(2)[which];
        let x = inside(cost, &t);
        let sp = sigma_point(cost, &x).unwrap();
        let y_at = |x: &[f64]| sigma_point(cost, x).unwrap().y;
        for i in 0..2 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += 1e-3;
            xm[i] -= 1e-3;
            let (yp, ym) = (y_at(&xp), y_at(&xm));
            for k in 0..2 {
                let fd = (yp[k] - ym[k]) / 2e-3;
                prop_assert!((sp.dy.at(&[i, k]) - fd).abs() <= 1e-4 * fd.abs().max(1.0));
                let fd2 = (yp[k] - 2.0 * sp.y[k] + ym[k]) / 1e-6;
                prop_assert!((sp.d2y.at(&[i, i, k]) - fd2).abs() <= 1e-4 * fd2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn divergences_are_nonnegative_and_vanish_on_sigma(t in prop::collection::vec(0.0f64..1.0, 2), s in prop::collection::vec(-0.4f64..0.4, 2), which in 0usize..6) {
        let cost = &families(2)[which];
        let x = inside(cost, &t);
        let sp = sigma_point(cost, &x).unwrap();
        prop_assert!(sp.u.val().abs() < 1e-12);
        for a in 0..2 {
            prop_assert!(sp.u_d(&[2 + a]).abs() < 1e-10);
        }
        let y: Vec<f64> = sp.y.iter().zip(&s).map(|(a, b)| a + b).collect();
        if let Ok(v) = cost.u_value(&x, &y) {
            prop_assert!(v >= -1e-14);
        }
    }

    #[test]
    fn bregman_cross_difference_from_u_and_c_agree(x in -0.8f64..0.8, y in -0.8f64..0.8, xi in -0.2f64..0.2, eta in -0.2f64..0.2) {
        let c = builtin(Builtin::Bregman { f: None }, 1, cube(1)).unwrap();
        let from_u = cross_difference(|a, b| c.u_value(a, b), &[x], &[y], &[xi], &[eta]).unwrap();
        let from_c = cross_difference(|a, b| c.c_value(a, b), &[x], &[y], &[xi], &[eta]).unwrap();
        prop_assert!((from_u - from_c).abs() < 1e-12);
    }
}
