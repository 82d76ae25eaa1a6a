use approx::assert_relative_eq;
use geolaplace::costs::{builtin, Builtin, CostFunction, DomainSpec};
use geolaplace::expansion::{coord_first_order_expr, expand, DensitySpec, QuadratureSpec};
use geolaplace::oracle::{
    audit_assumptions, empirical_coeffs, fit_coeffs, integrate_all, integrate_full, single_laplace_oracle, InnerScheme,
};
use geolaplace::{parse, Error, Expr, OracleConfig};

fn unit_box(which: Builtin, d: usize) -> CostFunction {
    builtin(which, d, DomainSpec::cube(d, -1.0, 1.0)).unwrap()
}

fn builtins_1d() -> Vec<(&'static str, CostFunction)> {
    vec![
        ("quadratic", unit_box(Builtin::Quadratic, 1)),
        ("translation", unit_box(Builtin::Translation { potential: None }, 1)),
        ("bregman", unit_box(Builtin::Bregman { f: None }, 1)),
        ("fenchel_young", unit_box(Builtin::FenchelYoung { f: None, fstar: None }, 1)),
        (
            "log_divergence",
            builtin(Builtin::LogDivergence { alpha: 1.0, f: None }, 1, DomainSpec::cube(1, 0.5, 1.5)).unwrap(),
        ),
        ("bayes", unit_box(Builtin::Bayes { model: None }, 1)),
    ]
}

#[test]
fn quadratic_is_two_for_every_eps() {
    let q = unit_box(Builtin::Quadratic, 1);
    let cfg = OracleConfig::default();
    for v in integrate_all(&q, &DensitySpec::unit(), &cfg.eps_list, &cfg).unwrap() {
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
    }
}

#[test]
fn gaussian_density_closed_form() {
    // ∫ e^{−z²/2ε} e^{−z²/2} dz / √(2πε) = (1 + ε)^{−1/2}
    let c = unit_box(Builtin::Translation { potential: Some(parse("x1^2/2", 1).unwrap()) }, 1);
    let rho = DensitySpec::rho(parse("exp(-(x1 - y1)^2/2)", 1).unwrap());
    for e in [0.1, 0.02, 1e-3] {
        assert_relative_eq!(integrate_full(&c, &rho, e, &OracleConfig::default()).unwrap(), 2.0 / (1.0 + e).sqrt(), max_relative = 1e-8);
    }
}

#[test]
fn cosh_against_adaptive_classical_integral() {
    let c = unit_box(Builtin::Translation { potential: None }, 1);
    let e = 1e-2;
    let v = integrate_full(&c, &DensitySpec::unit(), e, &OracleConfig::default()).unwrap();
    // every fiber is the same one-dimensional Laplace integral
    let fiber = single_laplace_oracle(&parse("cosh(x1) - 1", 1).unwrap(), &Expr::Const(1.0), e, &[(-6.0, 6.0)], &[0.1], 1e-14).unwrap();
    assert!((v - 2.0 * fiber).abs() < 1e-6, "{v} vs {}", 2.0 * fiber);
}

#[test]
fn fitted_cosh_coefficient() {
    let c = unit_box(Builtin::Translation { potential: None }, 1);
    let fit = empirical_coeffs(&c, &DensitySpec::unit(), &OracleConfig::default()).unwrap();
    assert_relative_eq!(fit.i0, 2.0, max_relative = 1e-6);
    assert!((fit.i1 + 0.25).abs() < 0.0025, "I1 = {}", fit.i1);
}

#[test]
fn single_integral_gaussian_moments() {
    let u = parse("x1^2/2", 1).unwrap();
    let r = parse("1 + x1^2", 1).unwrap();
    let eps = [1e-1, 5e-2, 2e-2, 1e-2, 1e-3];
    let vals: Vec<f64> = eps.iter().map(|&e| single_laplace_oracle(&u, &r, e, &[(-10.0, 10.0)], &[0.2], 1e-14).unwrap()).collect();
    for (v, e) in vals.iter().zip(&eps) {
        assert_relative_eq!(*v, 1.0 + e, max_relative = 1e-11);
    }
    let (c, _) = fit_coeffs(&eps, &vals, 2).unwrap();
    assert_relative_eq!(c[0], 1.0, max_relative = 1e-10);
    assert_relative_eq!(c[1], 1.0, max_relative = 1e-8);
    assert!(single_laplace_oracle(&u, &Expr::Const(1.0), 0.0, &[(-1.0, 1.0)], &[0.0], 1e-12).is_err());
}

#[test]
fn cosh_with_exponential_weight() {
    let u = parse("cosh(x1) - 1", 1).unwrap();
    let r = parse("exp(x1)", 1).unwrap();
    let (c0, c1) = coord_first_order_expr(&u, &r, &[0.0]).unwrap();
    // ½r'' − ⅛r u⁗
    assert_relative_eq!(c1, 0.375, epsilon = 1e-15);
    let e = 1e-3;
    let v = single_laplace_oracle(&u, &r, e, &[(-3.0, 3.0)], &[0.0], 1e-14).unwrap();
    assert!((v - c0 - e * c1).abs() < 3.0 * e * e);
}

#[test]
fn fitted_coefficient_with_odd_third_derivative() {
    // u''' = 1 and u'''' = 1 at the minimum
    let u = parse("exp(x1) - 1 - x1", 1).unwrap();
    let r = parse("1 + 0.5*x1", 1).unwrap();
    let (_, c1) = coord_first_order_expr(&u, &r, &[0.0]).unwrap();
    let eps = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4];
    let vals: Vec<f64> = eps.iter().map(|&e| single_laplace_oracle(&u, &r, e, &[(-4.0, 3.0)], &[0.3], 1e-14).unwrap()).collect();
    let (c, _) = fit_coeffs(&eps, &vals, 2).unwrap();
    assert_relative_eq!(c[1], c1, max_relative = 1e-3);
}

#[test]
fn audit_examples() {
    let mut dom = DomainSpec::cube(1, -1.0, 1.0);
    dom.convexity_lambda = 0.9;
    let rep = audit_assumptions(&builtin(Builtin::Translation { potential: None }, 1, dom.clone()).unwrap(), 300).unwrap();
    assert!(!rep.violations());
    assert!(rep.empirical_lambda >= 0.9);
    dom.convexity_lambda = 3.0;
    assert!(audit_assumptions(&builtin(Builtin::Translation { potential: None }, 1, dom).unwrap(), 300).unwrap().violations());
}

#[test]
fn config_is_validated() {
    let c = unit_box(Builtin::Quadratic, 1);
    let bad = |cfg: OracleConfig| matches!(integrate_all(&c, &DensitySpec::unit(), &cfg.eps_list.clone(), &cfg), Err(Error::Config(_)));
    assert!(bad(OracleConfig { eps_list: vec![1e-3, 1e-2], ..Default::default() }));
    assert!(bad(OracleConfig { hermite_nodes: 4, ..Default::default() }));
    assert!(bad(OracleConfig { eps_list: vec![0.1, -0.1], ..Default::default() }));
    let tight = OracleConfig { tail_tol: Some(1e-30), ..Default::default() };
    assert!(matches!(integrate_full(&c, &DensitySpec::unit(), 0.1, &tight), Err(Error::TailBoundExceeded(_))));
}

#[test]
fn refinement_is_stable() {
    let eps = [1e-2, 1e-3];
    let base = OracleConfig::default();
    let fine = OracleConfig { hermite_nodes: 2 * base.hermite_nodes, ..Default::default() };
    let adaptive = OracleConfig { inner_scheme: InnerScheme::Adaptive { tol: 1e-12 }, ..Default::default() };
    let rho = DensitySpec::rho(parse("exp(0.3*x1 - 0.2*y1)", 1).unwrap());
    for (name, c) in builtins_1d() {
        let a = integrate_all(&c, &rho, &eps, &base).unwrap();
        let b = integrate_all(&c, &rho, &eps, &fine).unwrap();
        let g = integrate_all(&c, &rho, &eps, &adaptive).unwrap();
        for k in 0..eps.len() {
            assert!((a[k] - b[k]).abs() < 1e-8 * a[k].abs(), "{name}: {} vs {}", a[k], b[k]);
            assert!((a[k] - g[k]).abs() < 1e-8 * a[k].abs(), "{name}: {} vs adaptive {}", a[k], g[k]);
        }
    }
}

#[test]
fn oracle_agrees_with_expansion() {
    let cfg = OracleConfig::default();
    for (name, c) in builtins_1d() {
        let rho = DensitySpec::unit();
        let e = expand(&c, &rho, &QuadratureSpec::default()).unwrap();
        let fit = empirical_coeffs(&c, &rho, &cfg).unwrap();
        assert_relative_eq!(fit.i0, e.i0, max_relative = 1e-6);
        let tol = 0.01 * e.i1_total.abs().max(1e-8);
        assert!((fit.i1 - e.i1_total).abs() <= tol, "{name}: {} vs {}", fit.i1, e.i1_total);
    }
}
