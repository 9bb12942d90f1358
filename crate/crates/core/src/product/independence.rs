use serde::Serialize;

use super::engine::{evaluate_en, increment_value_grid};
use super::{CylinderFunctional, NumericsSpec};
use crate::error::{Error, Result};
use crate::expectation::{ScenarioFamily, TestFunction};
use crate::grid::UniformAxis;
use crate::process::ProcessModel;
use crate::time::Time;

/// `Ê^n[φ(ΔX)] = Ê₁[ψ(ΔM)]` with `ψ(x) = Ê₂[φ(x, ΔN)]`, evaluated exactly on
/// the kernel nodes.
pub fn step1_increment_expect(
    phi: impl Fn(f64, f64) -> f64,
    m_kernel: &ScenarioFamily,
    n_kernel: &ScenarioFamily,
) -> Result<f64> {
    for k in [m_kernel, n_kernel] {
        if k.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: k.dim() });
        }
    }
    let v = m_kernel.expect_with(|x| n_kernel.expect_with(|y| phi(x[0], y[0])));
    if !v.is_finite() {
        return Err(Error::NonFinite("step-1 expectation".into()));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridIndependenceEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridIndependenceReport {
    pub level: u32,
    pub tabulation_points: usize,
    pub entries: Vec<GridIndependenceEntry>,
    pub max_gap: f64,
}

/// Checks that the last increment is independent from the earlier values:
/// `Ê^n[φ(X_{t1},…,X_{t_{m-1}}, X_{tm} − X_{t_{m-1}})] = Ê^n[ψ(X_{t1},…)]` with
/// `ψ(x) = Ê^n[φ(x, X_{tm} − X_{t_{m-1}})]` tabulated on its own grid.
///
/// Each test function takes `2m` arguments: the earlier values
/// `(x1, y1, …)` followed by the increment `(dx, dy)`.
pub fn check_grid_independence(
    level: u32,
    times: &[Time],
    battery: &[TestFunction],
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
    tabulation_points: Option<usize>,
) -> Result<GridIndependenceReport> {
    let m = times.len();
    if m == 0 || battery.is_empty() {
        return Err(Error::InvalidArgument("need at least one time and one test function".into()));
    }
    let tab = tabulation_points.unwrap_or(num.observation_points + 10);
    if tab < 3 || tab.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("tabulation count must be odd and >= 3, got {tab}")));
    }
    let horizon = crate::time::to_f64(times[m - 1]);
    let halves =
        [num.half_width(model_m.sigma_bound(), horizon)?, num.half_width(model_n.sigma_bound(), horizon)?];
    let mut entries = Vec::with_capacity(battery.len());
    for phi in battery {
        if phi.dim() != 2 * m {
            return Err(Error::DimensionMismatch { expected: 2 * m, got: phi.dim() });
        }
        let p = phi.clone();
        let on_values = TestFunction::new(2 * m, phi.label(), move |a| {
            let mut b = a.to_vec();
            if m >= 2 {
                b[2 * m - 2] = a[2 * m - 2] - a[2 * m - 4];
                b[2 * m - 1] = a[2 * m - 1] - a[2 * m - 3];
            }
            p.eval(&b)
        });
        let lhs =
            evaluate_en(&CylinderFunctional::new(times.to_vec(), on_values)?, level, model_m, model_n, num)?
                .value;
        let rhs = if m == 1 {
            lhs
        } else {
            let prefix: Vec<UniformAxis> = (0..2 * (m - 1))
                .map(|a| UniformAxis::symmetric(halves[a % 2], tab))
                .collect::<Result<_>>()?;
            let p = phi.clone();
            let (psi, _) = increment_value_grid(
                prefix,
                move |x, d| {
                    let mut args = x.to_vec();
                    args.extend_from_slice(&d);
                    p.eval(&args)
                },
                times[m - 2],
                times[m - 1],
                level,
                [model_m, model_n],
                num,
            )?;
            let outer =
                TestFunction::new(2 * (m - 1), format!("psi[{}]", phi.label()), move |x| psi.interpolate(x));
            evaluate_en(
                &CylinderFunctional::new(times[..m - 1].to_vec(), outer)?,
                level,
                model_m,
                model_n,
                num,
            )?
            .value
        };
        entries.push(GridIndependenceEntry {
            label: phi.label().to_string(),
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
        });
    }
    let max_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    Ok(GridIndependenceReport { level, tabulation_points: tab, entries, max_gap })
}
