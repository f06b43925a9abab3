use std::sync::Arc;

use rand::{rngs::StdRng, Rng, SeedableRng};
use wronski_core::orthogonalize::LinearCombination;
use wronski_core::validate::{check_ode, check_wronskian_identity, interior_grid};
use wronski_core::{
    build_system, gram_schmidt, validate_system, BuildConfig, Expression, InnerProduct, OrthoSystem, SmoothMap,
    Thresholds,
};

fn e(text: &str) -> Expression {
    Expression::parse(text).unwrap()
}

fn unit() -> InnerProduct {
    InnerProduct::lebesgue(-1.0, 1.0).unwrap()
}

fn legendre_config(n: usize) -> BuildConfig {
    let mut config = BuildConfig::new(e("1"), n, unit());
    config.x0 = 0.0;
    config
}

fn exp_seed_config() -> BuildConfig {
    BuildConfig::new(e("exp(x)"), 4, unit())
}

fn nonconstant_h_config() -> BuildConfig {
    let mut config = BuildConfig::new(e("1 + x^2/4"), 4, unit());
    config.h_specs = vec![e("1 + x^2/2"), e("2 + sin(x)"), e("3/2 + cos(x)")];
    config
}

/// Orthonormal Legendre polynomials via the three-term recurrence.
fn legendre_normalized(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    let p = match n {
        0 => 1.0,
        1 => x,
        _ => {
            for k in 1..n {
                let k = k as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    };
    p * ((2 * n + 1) as f64 / 2.0).sqrt()
}

fn grid200() -> Vec<f64> {
    (0..200).map(|i| -1.0 + 2.0 * i as f64 / 199.0).collect()
}

#[test]
fn legendre_recovery() {
    let sys = build_system(&legendre_config(6)).unwrap();
    for k in 0..6 {
        let norm = sys.norms()[k];
        let f = sys.function(k);
        let sign = (f.value(1.0).unwrap() / norm).signum();
        let worst = grid200()
            .into_iter()
            .map(|x| (sign * f.value(x).unwrap() / norm - legendre_normalized(k, x)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "f{}: deviation {worst:e}", k + 1);
    }
}

#[test]
fn normalized_build_matches_legendre_directly() {
    let mut config = legendre_config(5);
    config.normalize = true;
    let sys = build_system(&config).unwrap();
    for k in 0..5 {
        let f = sys.function(k);
        let sign = f.value(1.0).unwrap().signum();
        for x in grid200() {
            assert!((sign * f.value(x).unwrap() - legendre_normalized(k, x)).abs() <= 1e-8);
        }
    }
}

#[test]
fn hand_derived_chain() {
    let sys = build_system(&legendre_config(4)).unwrap();
    let want = ["1", "x", "x^2/2 - 1/6", "x^3/6 - x/10"];
    for (k, text) in want.iter().enumerate() {
        let oracle = e(text);
        for x in grid200() {
            let diff = (sys.function(k).value(x).unwrap() - oracle.eval(x).unwrap()).abs();
            assert!(diff <= 1e-9, "f{} at {x}: {diff:e}", k + 1);
        }
    }
    let coeffs = sys.coefficients();
    let expected: [&[f64]; 4] = [&[], &[0.0], &[-1.0 / 6.0, 0.0], &[0.0, -0.1, 0.0]];
    for (got, want) in coeffs.iter().zip(expected) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
        }
    }
}

#[test]
fn particular_solution_vanishes_at_base_point() {
    for config in [legendre_config(6), exp_seed_config(), nonconstant_h_config()] {
        let sys = build_system(&config).unwrap();
        for k in 2..=sys.len() {
            let f = &sys.stage(k).unwrap().solution;
            assert!(f.value(config.x0).unwrap().abs() <= 1e-14);
        }
    }
}

#[test]
fn off_center_base_point() {
    let mut config = exp_seed_config();
    config.x0 = -0.6;
    let sys = build_system(&config).unwrap();
    let report = validate_system(&sys, 257, &Thresholds::default());
    assert!(report.pass, "{:?}", report.failures());
    assert_eq!(sys.stage(3).unwrap().solution.value(-0.6).unwrap(), 0.0);
}

#[test]
fn presets_pass_every_check() {
    for config in [legendre_config(6), exp_seed_config(), nonconstant_h_config()] {
        let sys = build_system(&config).unwrap();
        let report = validate_system(&sys, 257, &Thresholds::default());
        assert!(report.pass, "{}: {:?}", config.seed, report.failures());
        assert!(report.orthogonality.max_residual <= 1e-8);
    }
}

#[test]
fn telescoping_bounds_ode_residual() {
    // W_n - h W_{n-1} = (W_n - R_n) - h (W_{n-1} - R_{n-1}) with R the telescoped forms
    let config = nonconstant_h_config();
    let sys = build_system(&config).unwrap();
    let grid = interior_grid(-1.0, 1.0, 257);
    let identity = check_wronskian_identity(&sys, &grid, 1e-7);
    let ode = check_ode(&sys, &grid, 1e-7);
    for n in 2..=sys.len() {
        let bound = 10.0 * (identity.residual(n).unwrap() + 3.0 * identity.residual(n - 1).unwrap()) + 1e-15;
        assert!(ode.residual(n).unwrap() <= bound, "stage {n}");
    }
}

#[test]
fn span_agrees_with_gram_schmidt() {
    let ip = unit();
    let sys = build_system(&legendre_config(6)).unwrap();
    let monomials: Vec<Arc<dyn SmoothMap>> = (0..6)
        .map(|k| Arc::new(e(&format!("x^{k}"))) as Arc<dyn SmoothMap>)
        .collect();
    let gs = gram_schmidt(&monomials, &ip).unwrap();
    for k in 0..6 {
        let f = Arc::clone(sys.function(k));
        let mut terms = vec![(1.0, Arc::clone(&f))];
        for g in &gs[..=k] {
            let c = ip.inner(f.as_ref(), g.as_ref()).unwrap() / ip.inner(g.as_ref(), g.as_ref()).unwrap();
            terms.push((-c, Arc::clone(g)));
        }
        let residual = LinearCombination::new(terms);
        let r = ip.distance(&residual, &e("0")).unwrap();
        assert!(r <= 1e-8 * sys.norms()[k], "f{}: residual {r:e}", k + 1);
    }
}

/// Richardson-extrapolated central difference of order `m`.
fn finite_difference(f: &dyn SmoothMap, x: f64, m: usize, h: f64) -> f64 {
    let central = |h: f64| {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=m {
            let offset = (m as f64 / 2.0 - i as f64) * h;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * f.value(x + offset).unwrap();
            binom = binom * (m - i) as f64 / (i + 1) as f64;
        }
        acc / h.powi(m as i32)
    };
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

fn assert_jets_match_differences(sys: &OrthoSystem, points: &[f64], max_order: usize) {
    for k in 1..sys.len() {
        let f = sys.function(k);
        let top = max_order.min(k);
        for &x in points {
            let jet = f.eval_jet(x, top).unwrap();
            for m in 1..=top {
                let h = if m == 1 { 0.01 } else { 0.04 };
                let fd = finite_difference(f.as_ref(), x, m, h);
                let exact = jet.derivative(m).unwrap();
                let err = (fd - exact).abs() / exact.abs().max(1.0);
                assert!(err <= 1e-5, "f{} order {m} at {x}: jet {exact} fd {fd}", k + 1);
            }
        }
    }
}

#[test]
fn stage_jets_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(17);
    let points: Vec<f64> = (0..12).map(|_| rng.gen_range(-0.9..0.9)).collect();
    for config in [legendre_config(5), exp_seed_config(), nonconstant_h_config()] {
        let sys = build_system(&config).unwrap();
        assert_jets_match_differences(&sys, &points, 4);
    }
}

#[test]
fn values_do_not_depend_on_query_order() {
    let xs: Vec<f64> = (0..60).map(|i| -0.98 + 0.033 * i as f64).collect();
    let forward = build_system(&nonconstant_h_config()).unwrap();
    let backward = build_system(&nonconstant_h_config()).unwrap();
    let f = forward.function(3);
    let g = backward.function(3);
    let a: Vec<u64> = xs.iter().map(|&x| f.value(x).unwrap().to_bits()).collect();
    // high-order jets first, in reverse
    for &x in xs.iter().rev() {
        g.eval_jet(x, 7).unwrap();
    }
    let b: Vec<u64> = xs.iter().map(|&x| g.value(x).unwrap().to_bits()).collect();
    assert_eq!(a, b);
    assert_eq!(forward.gram(), backward.gram());
}

#[test]
fn weighted_space() {
    // w = 1 + x on [0, 2]: still orthogonal, and W(f1..fn) = f1 for h ≡ 1
    let ip = InnerProduct::new(0.0, 2.0, e("1 + x"), 1e-11).unwrap();
    let config = BuildConfig::new(e("exp(-x/2)"), 4, ip);
    let sys = build_system(&config).unwrap();
    let report = validate_system(&sys, 129, &Thresholds::default());
    assert!(report.pass, "{:?}", report.failures());
}
