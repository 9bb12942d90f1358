use product_expectation::pde::*;
use product_expectation::process::GSpec;

fn g12() -> GSpec {
    GSpec::interval(1.0, 2.0).unwrap()
}

#[test]
fn quadratic_data_match_the_closed_form() {
    let grid = PdeGrid::one_d();
    let u = solve_gheat_1d(&g12(), |x| (x * x).clamp(0.0, 100.0), 1.0, &grid).unwrap();
    assert!((u.origin - analytic_quadratic(&g12(), 1.0, 1.0)).abs() < 1e-3, "{}", u.origin);
    assert!(u.max_principle_ok && u.cfl_ratio <= 0.5);
    assert!(u.boundary_influence.unwrap() < 1e-6);
    let v = solve_gheat_1d(&g12(), |x| (-x * x).clamp(-100.0, 0.0), 1.0, &grid).unwrap();
    assert!((v.origin - analytic_quadratic(&g12(), -1.0, 1.0)).abs() < 1e-3, "{}", v.origin);
    let s = GSpec::singleton(1.0).unwrap();
    let w = solve_gheat_1d(&s, |x| (x * x).clamp(0.0, 100.0), 1.0, &grid).unwrap();
    assert!((w.origin - 1.0).abs() < 1e-3, "{}", w.origin);
}

#[test]
fn odd_data_stay_odd_when_g_is_linear() {
    let s = GSpec::singleton(1.5).unwrap();
    let u = solve_gheat_1d(&s, |x| x.clamp(-5.0, 5.0), 1.0, &PdeGrid::one_d()).unwrap();
    assert!(u.origin.abs() <= 1e-9, "{}", u.origin);
    // Linear on the whole domain: the second difference vanishes, for any G.
    let u = solve_gheat_1d(&g12(), |x| 0.3 * x, 1.0, &PdeGrid::one_d()).unwrap();
    assert!(u.origin.abs() <= 1e-9);
    // A genuinely nonlinear G breaks oddness, but u^φ(0) = u^{-φ}(0) still holds.
    let p = solve_gheat_1d(&g12(), |x| x.clamp(-5.0, 5.0), 1.0, &PdeGrid::one_d()).unwrap();
    let m = solve_gheat_1d(&g12(), |x| -x.clamp(-5.0, 5.0), 1.0, &PdeGrid::one_d()).unwrap();
    assert!((p.origin - m.origin).abs() < 1e-12 && p.origin > 0.0);
}

#[test]
fn scheme_is_monotone_and_sublinear() {
    let grid = PdeGrid { boundary_check: false, ..PdeGrid::one_d() };
    let t = 0.5;
    let f = |x: f64| x.sin().clamp(-0.8, 0.8);
    let g = |x: f64| x.sin().clamp(-0.8, 0.8) + 0.2 * (-x * x).exp();
    let uf = solve_gheat_1d(&g12(), f, t, &grid).unwrap();
    let ug = solve_gheat_1d(&g12(), g, t, &grid).unwrap();
    assert!(uf.values.iter().zip(&ug.values).all(|(a, b)| a <= b));
    let psi = |x: f64| (x.abs() - 1.0).clamp(-1.0, 2.0);
    let sum = solve_gheat_1d(&g12(), move |x| f(x) + psi(x), t, &grid).unwrap();
    let up = solve_gheat_1d(&g12(), psi, t, &grid).unwrap();
    assert!(sum.origin <= uf.origin + up.origin + 1e-9);
    assert!(uf.max_principle_ok && ug.max_principle_ok && sum.max_principle_ok);
}

#[test]
fn refinement_shrinks_error_quadratically() {
    let phi = |x: f64| x.tanh() + 0.5 * (1.3 * x).cos();
    let u = |h: f64| {
        let grid = PdeGrid { h, boundary_check: false, ..PdeGrid::one_d() };
        solve_gheat_1d(&g12(), phi, 0.5, &grid).unwrap().origin
    };
    let (a, b, c) = (u(0.2), u(0.1), u(0.05));
    let ratio = (b - a) / (c - b);
    assert!((2.5..=6.0).contains(&ratio), "{ratio}");
}

#[test]
fn planar_solver_reduces_to_the_line() {
    let s2 = GSpec::interval(0.3, 0.7).unwrap();
    let grid = PdeGrid { boundary_check: false, ..PdeGrid::two_d() };
    let f = |x: f64| (x * x).clamp(0.0, 9.0) - x.abs().min(2.0);
    let plane = solve_gheat_2d_separable(&g12(), &s2, move |x, _| f(x), 1.0, &grid).unwrap();
    let line_grid = PdeGrid { tau: Some(plane.tau), boundary_check: false, ..PdeGrid::two_d() };
    let line = solve_gheat_1d(&g12(), f, 1.0, &line_grid).unwrap();
    assert_eq!(line.steps, plane.steps);
    assert!((plane.origin - line.origin).abs() < 1e-6, "{} vs {}", plane.origin, line.origin);
}

#[test]
fn planar_quadratic_and_cross_terms() {
    let grid = PdeGrid::two_d();
    let q = solve_gheat_2d_separable(&g12(), &g12(), |x, y| (x * x - y * y).clamp(-25.0, 25.0), 1.0, &grid)
        .unwrap();
    assert!(q.max_principle_ok);
    // The clamp binds on a few percent of the mass, pulling the value below 4 - 1.
    assert!((q.origin - 2.961).abs() < 5e-3, "{}", q.origin);
    let xy = solve_gheat_2d_separable(&g12(), &g12(), |x, y| (x * y).clamp(-10.0, 10.0), 1.0, &grid).unwrap();
    let neg =
        solve_gheat_2d_separable(&g12(), &g12(), |x, y| -(x * y).clamp(-10.0, 10.0), 1.0, &grid).unwrap();
    assert!((xy.origin - neg.origin).abs() < 1e-9);
    assert!((xy.origin - 0.0595).abs() < 5e-3, "{}", xy.origin);
    let lin = solve_gheat_2d_separable(
        &g12(),
        &g12(),
        |x, y| (x * y).clamp(-10.0, 10.0),
        1.0,
        &PdeGrid { boundary_check: false, ..grid },
    )
    .unwrap();
    assert!(lin.boundary_influence.is_none());
}

#[test]
fn solution_dumps_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let grid = PdeGrid { h: 0.5, boundary_check: false, ..PdeGrid::one_d() };
    let u = solve_gheat_1d(&g12(), |x| x.abs().min(1.0), 0.25, &grid).unwrap();
    u.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,u\n"));
    assert_eq!(text.lines().count(), u.values.len() + 1);
}
