use serde::Serialize;

use super::{RandomVector, ScenarioFamily, SublinearFunctional, TestFunction};
use crate::error::{Error, Result};
use crate::grid::{UniformAxis, ValueGrid};

/// Tolerance for claims that are exact in finite arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Compares two functionals over a battery of test functions.
pub fn check_identically_distributed(
    f1: &SublinearFunctional,
    f2: &SublinearFunctional,
    tests: &[TestFunction],
    tol: f64,
) -> Result<DistributionReport> {
    if tests.is_empty() {
        return Err(Error::InvalidArgument("empty test battery".into()));
    }
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch { expected: f1.dim(), got: f2.dim() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let gaps = tests
        .iter()
        .map(|phi| Ok((f1.evaluate(phi)? - f2.evaluate(phi)?).abs()))
        .collect::<Result<Vec<_>>>()?;
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(DistributionReport { gaps, max_gap, tol, passed: max_gap <= tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceEntry {
    pub label: String,
    /// `Ê[φ(X, Y)]`.
    pub lhs: f64,
    /// `Ê[ψ(X)]` with `ψ(x) = Ê[φ(x, Y)]` evaluated exactly at the values of `X`.
    pub rhs: f64,
    pub gap: f64,
    /// Right-hand side with `ψ` tabulated on the supplied grid, when one was given.
    pub rhs_tabulated: Option<f64>,
    pub tabulation_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub entries: Vec<IndependenceEntry>,
    pub max_gap: f64,
    pub max_tabulation_error: Option<f64>,
    pub tol: f64,
    pub independent: bool,
}

/// Tests whether `Y` is independent from `X` under `family` on a battery of
/// functions of `(x, y)`.
pub fn check_independence(
    family: &ScenarioFamily,
    x: &RandomVector,
    y: &RandomVector,
    tests: &[TestFunction],
    x_grid: Option<&[UniformAxis]>,
    tol: f64,
) -> Result<IndependenceReport> {
    for v in [x, y] {
        if v.in_dim() != family.dim() {
            return Err(Error::DimensionMismatch { expected: family.dim(), got: v.in_dim() });
        }
    }
    let (dx, dy) = (x.out_dim(), y.out_dim());
    if let Some(phi) = tests.iter().find(|p| p.dim() != dx + dy) {
        return Err(Error::DimensionMismatch { expected: dx + dy, got: phi.dim() });
    }
    if let Some(axes) = x_grid {
        if axes.len() != dx {
            return Err(Error::DimensionMismatch { expected: dx, got: axes.len() });
        }
        for law in family.laws() {
            for (node, _) in law.iter() {
                let xv = x.eval(node);
                if !axes.iter().zip(&xv).all(|(a, &v)| a.covers(v)) {
                    return Err(Error::InvalidArgument(format!(
                        "x grid does not cover the value {xv:?} of X"
                    )));
                }
            }
        }
    }

    let joint = |phi: &TestFunction, xv: &[f64], yv: &[f64]| {
        let mut arg = Vec::with_capacity(dx + dy);
        arg.extend_from_slice(xv);
        arg.extend_from_slice(yv);
        phi.eval(&arg)
    };
    let inner = |phi: &TestFunction, xv: &[f64]| family.expect_with(|n| joint(phi, xv, &y.eval(n)));

    let mut entries = Vec::with_capacity(tests.len());
    for phi in tests {
        let lhs = family.expect_with(|n| joint(phi, &x.eval(n), &y.eval(n)));
        let rhs = family.expect_with(|n| inner(phi, &x.eval(n)));
        let (rhs_tabulated, tabulation_error) = match x_grid {
            Some(axes) => {
                let psi = ValueGrid::from_fn(axes.to_vec(), |xv| inner(phi, xv))?;
                let r = family.expect_with(|n| psi.interpolate(&x.eval(n)));
                (Some(r), Some((r - rhs).abs()))
            }
            None => (None, None),
        };
        entries.push(IndependenceEntry {
            label: phi.label().to_string(),
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
            rhs_tabulated,
            tabulation_error,
        });
    }
    let max_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    let max_tabulation_error =
        x_grid.map(|_| entries.iter().filter_map(|e| e.tabulation_error).fold(0.0, f64::max));
    Ok(IndependenceReport { entries, max_gap, max_tabulation_error, tol, independent: max_gap <= tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    /// Largest `Ê_λ[X] − Ê_λ[Y] − Ê[X − Y]` seen (negative when strictly dominated).
    pub worst_violation: f64,
    pub worst_member: usize,
    pub worst_pair: usize,
    pub dominated: bool,
}

/// Checks `Ê_λ[X] − Ê_λ[Y] ≤ Ê[X − Y]` for every member `λ` and pair `(X, Y)`.
pub fn check_domination(
    dominated: &[SublinearFunctional],
    dominating: &SublinearFunctional,
    pairs: &[(TestFunction, TestFunction)],
) -> Result<DominationReport> {
    let mut report = DominationReport {
        worst_violation: f64::NEG_INFINITY,
        worst_member: 0,
        worst_pair: 0,
        dominated: true,
    };
    for (j, (a, b)) in pairs.iter().enumerate() {
        let diff = a.add(&b.negate())?;
        let top = dominating.evaluate(&diff)?;
        for (i, member) in dominated.iter().enumerate() {
            let v = member.evaluate(a)? - member.evaluate(b)? - top;
            if v > report.worst_violation {
                report.worst_violation = v;
                report.worst_member = i;
                report.worst_pair = j;
            }
        }
    }
    report.dominated = report.worst_violation <= EXACT_TOL;
    Ok(report)
}
