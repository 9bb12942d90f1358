use product_expectation::expectation::{ScenarioFamily, TestFunction};
use product_expectation::limit::*;
use product_expectation::process::{normal_abs_moment, GBrownianModel, ProcessModel, QuadratureSpec};
use product_expectation::product::{evaluate_en, CylinderFunctional, NumericsSpec};
use product_expectation::time::{dyadic, Time};
use product_expectation::Error;

fn g12() -> GBrownianModel {
    GBrownianModel::interval(1.0, 2.0).unwrap()
}

fn at_one(label: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> CylinderFunctional {
    CylinderFunctional::new(vec![Time::from_integer(1)], TestFunction::new(2, label, f)).unwrap()
}

fn kernel(level: u32) -> ScenarioFamily {
    g12().kernel(Time::from_integer(0), dyadic(1, level), &QuadratureSpec::default()).unwrap()
}

/// Exact nested quadrature of a terminal functional over `2^level` steps.
fn nested(level: u32, phi: &dyn Fn(f64, f64) -> f64) -> f64 {
    let fam = kernel(level);
    fn go(k: u32, x: f64, y: f64, fam: &ScenarioFamily, phi: &dyn Fn(f64, f64) -> f64) -> f64 {
        if k == 0 {
            return phi(x, y);
        }
        fam.expect_with(|dm| fam.expect_with(|dn| go(k - 1, x + dm[0], y + dn[0], fam, phi)))
    }
    go(1 << level, 0.0, 0.0, &fam, phi)
}

/// The same nesting on a fine square grid with cubic interpolation, for
/// levels where the exact tree is too large.
fn nested_on_grid(level: u32, phi: &dyn Fn(f64, f64) -> f64) -> f64 {
    let (half, pts) = (12.0, 1201usize);
    let h = 2.0 * half / (pts - 1) as f64;
    let at = |i: usize| -half + i as f64 * h;
    let cubic = |line: &[f64], u: f64| {
        let u = u.clamp(0.0, (pts - 1) as f64);
        let i = (u.floor() as usize).clamp(1, pts - 3);
        let t = u - i as f64;
        let (p0, p1, p2, p3) = (line[i - 1], line[i], line[i + 1], line[i + 2]);
        p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
    };
    let fam = kernel(level);
    let mut v: Vec<f64> = (0..pts * pts).map(|k| phi(at(k / pts), at(k % pts))).collect();
    for _ in 0..1 << level {
        // Inner sup over the second coordinate, along rows.
        let mut rows = vec![0.0; pts * pts];
        for (src, dst) in v.chunks(pts).zip(rows.chunks_mut(pts)) {
            for (j, out) in dst.iter_mut().enumerate() {
                *out = fam.expect_with(|d| cubic(src, j as f64 + d[0] / h));
            }
        }
        let cols: Vec<Vec<f64>> = (0..pts).map(|j| (0..pts).map(|i| rows[i * pts + j]).collect()).collect();
        for i in 0..pts {
            for j in 0..pts {
                v[i * pts + j] = fam.expect_with(|d| cubic(&cols[j], i as f64 + d[0] / h));
            }
        }
    }
    v[(pts / 2) * pts + pts / 2]
}

#[test]
fn constant_scan_is_flat() {
    let f = CylinderFunctional::constant(1.25);
    let s = convergence_scan(&f, 1..=4, &g12(), &g12(), &NumericsSpec::default(), &ScanCriteria::default())
        .unwrap();
    assert!(s.values.iter().all(|v| *v == 1.25));
    assert!(s.gaps.iter().all(|g| *g == 0.0));
    assert_eq!(s.best_estimate(), Some(1.25));
    assert!(s.cauchy && s.partial.is_none());
}

#[test]
fn singleton_scan_has_vanishing_gaps() {
    let s1 = GBrownianModel::interval(1.0, 1.0).unwrap();
    let f = at_one("xy+x", |a| (a[0] * a[1] + a[0]).clamp(-10.0, 10.0));
    let s =
        convergence_scan(&f, 1..=5, &s1, &s1, &NumericsSpec::default(), &ScanCriteria::default()).unwrap();
    assert!(s.gaps.iter().all(|g| *g < 1e-9), "{:?}", s.gaps);
}

#[test]
fn quadratic_scan_extrapolates_near_sigma_gap() {
    let f = at_one("q", |a| (a[0] * a[0] - a[1] * a[1]).clamp(-25.0, 25.0));
    let criteria = ScanCriteria { tolerance: 0.02, monotone_from: Some(4) };
    let s = convergence_scan(&f, 2..=7, &g12(), &g12(), &NumericsSpec::default(), &criteria).unwrap();
    assert!(s.cauchy, "{:?}", s.gaps);
    let limit = s.extrapolation.unwrap().limit;
    assert!((limit - 3.0).abs() < 0.05, "{limit}");
}

#[test]
fn resource_guard_truncates_the_scan() {
    let f = at_one("x", |a| a[0].clamp(-1.0, 1.0));
    let num = NumericsSpec { max_level: 3, ..NumericsSpec::default() };
    let s = convergence_scan(&f, 2..=5, &g12(), &g12(), &num, &ScanCriteria::default()).unwrap();
    assert_eq!(s.levels, vec![2, 3]);
    assert!(s.partial.is_some());
    let off = CylinderFunctional::new(vec![dyadic(1, 3)], TestFunction::constant(2, 0.0)).unwrap();
    assert!(matches!(
        convergence_scan(&off, 2..=4, &g12(), &g12(), &num, &ScanCriteria::default()),
        Err(Error::NonDyadicTime { .. })
    ));
}

#[test]
fn certificates_dominate_direct_values() {
    let q = QuadratureSpec::default();
    for n in [2, 3, 4] {
        for big in [5.0, 11.0] {
            let c = tightness_bound(n, &g12(), &g12(), big, &q, Default::default()).unwrap();
            assert!(c.direct <= c.bound + 1e-9, "n={n} N={big}: {c:?}");
        }
    }
    // A tiny truncation makes the cutoff visible: the direct value is large.
    let c = tightness_bound(2, &g12(), &g12(), 1.5, &q, Default::default()).unwrap();
    assert!(c.direct > 0.5 && c.holds);
}

#[test]
fn level_order_is_visible_for_skewed_payoffs() {
    let phi = |x: f64, y: f64| (x * y * y).clamp(-20.0, 20.0);
    let f = at_one("x y^2", move |a| phi(a[0], a[1]));
    let r = order_sensitivity(&f, 1, &g12(), &g12(), &NumericsSpec::default()).unwrap();
    let e1 = nested(1, &phi);
    assert!((nested_on_grid(1, &phi) - e1).abs() < 1e-4);
    let e2 = nested_on_grid(2, &phi);
    assert!((e1 - e2).abs() > 1e-3, "{e1} {e2}");
    assert!((r.value - e1).abs() < 5e-3, "{} vs {e1}", r.value);
    assert!((r.value_next - e2).abs() < 5e-3, "{} vs {e2}", r.value_next);
    assert!(r.level_gap > 1e-3);
}

#[test]
fn linear_or_separable_cases_are_order_free() {
    let s1 = GBrownianModel::interval(1.0, 1.0).unwrap();
    let f = at_one("xy", |a| (a[0] * a[1]).clamp(-10.0, 10.0));
    let r = order_sensitivity(&f, 2, &s1, &s1, &NumericsSpec::default()).unwrap();
    assert!(r.level_gap <= 1e-9 && r.order_gap <= 1e-9, "{r:?}");
    let sep = at_one("sep", |a| (a[0] * a[0]).min(9.0) + a[1].sin());
    let r = order_sensitivity(&sep, 2, &g12(), &g12(), &NumericsSpec::default()).unwrap();
    assert!(r.order_gap <= 1e-9, "{r:?}");
}

#[test]
fn non_dyadic_times_respect_the_modulus_bound() {
    let third = Time::new(1, 3);
    let battery = [
        TestFunction::new(2, "clamp(x)", |a| a[0].clamp(-2.0, 2.0)).with_constants(1.0, 2.0),
        TestFunction::new(2, "|x|-|y|", |a| (a[0].abs() - a[1].abs()).clamp(-3.0, 3.0))
            .with_constants(1.0, 3.0),
        TestFunction::new(2, "sin(x+y)", |a| (a[0] + a[1]).sin()).with_constants(1.0, 1.0),
    ];
    let g = g12();
    for phi in battery {
        let f = CylinderFunctional::new(vec![third], phi).unwrap();
        let c = compare_extensions(&f, 5, 8, 8, &g, &g, &NumericsSpec::default()).unwrap();
        assert!(c.holds, "{c:?}");
        let omega = |dt: f64| 2.0 * (2.0 * dt / std::f64::consts::PI).sqrt();
        let want = 2.0 * 2.0 * (omega(11.0 / 32.0 - 1.0 / 3.0) + omega(43.0 / 128.0 - 1.0 / 3.0));
        assert!((c.bound - want).abs() < 1e-12, "{} vs {want}", c.bound);
    }
    let f = CylinderFunctional::new(
        vec![dyadic(1, 2)],
        TestFunction::new(2, "x", |a| a[0].clamp(-1.0, 1.0)).with_constants(1.0, 1.0),
    )
    .unwrap();
    let e = extend_to_time(&f, 3, 3, &g, &g, &NumericsSpec::default()).unwrap();
    let direct = evaluate_en(&f, 3, &g, &g, &NumericsSpec::default()).unwrap();
    assert_eq!(e.report.value, direct.value);
    assert_eq!(extension_bound(&f, 3, 5, &g, &g).unwrap(), 0.0);
    let unknown = CylinderFunctional::new(vec![third], TestFunction::new(2, "x", |a| a[0])).unwrap();
    assert!(extension_bound(&unknown, 3, 5, &g, &g).is_err());
}

#[test]
fn third_moment_stays_below_bound() {
    let g = GBrownianModel::interval(1.0, 2.0).unwrap();
    for t in [dyadic(1, 2), dyadic(1, 1), Time::from_integer(1)] {
        let r = moment_bound_check(t, 6, &g, &g, 64.0, &NumericsSpec::default()).unwrap();
        assert!(r.holds && r.value > 0.0, "{r:?}");
    }
    let r = moment_bound_check(Time::from_integer(1), 2, &g, &g, 64.0, &NumericsSpec::default()).unwrap();
    let want = 2.0 * 8.0 * (8.0 / std::f64::consts::PI).sqrt();
    assert!((r.c - want).abs() < 1e-6, "{} vs {want}", r.c);
    assert!((normal_abs_moment(2.0, 3.0) - want / 2.0).abs() < 1e-6);
    let small = moment_bound_check(dyadic(1, 6), 6, &g, &g, 64.0, &NumericsSpec::default()).unwrap();
    // E|X|^3 of a planar normal with sd sigma*sqrt(t) is 3 sqrt(pi/2) (sigma^2 t)^(3/2).
    let top = 3.0 * (std::f64::consts::PI / 2.0).sqrt() * (4.0f64 / 64.0).powf(1.5);
    assert!(small.holds && (small.value - top).abs() < 0.05 * top, "{small:?} vs {top}");
}
