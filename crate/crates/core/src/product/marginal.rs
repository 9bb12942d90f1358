//! Single-process recursion on interpolated value grids, used to check that
//! the product construction preserves each marginal.

use std::time::Instant;

use super::engine::{ExpectationReport, Plan};
use super::stencil::{project_law, ProjectionStats};
use super::{CylinderFunctional, NumericsSpec};
use crate::error::{Error, Result};
use crate::grid::{UniformAxis, ValueGrid};
use crate::process::ProcessModel;
use crate::time::{dyadic, format_time, Time};

/// `Ê^n[f]` for a functional reading only one coordinate, computed from that
/// coordinate's process alone.
pub fn marginal_en(
    f: &CylinderFunctional,
    level: u32,
    model: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<ExpectationReport> {
    let clock = Instant::now();
    let c = match (f.touches(0), f.touches(1)) {
        (true, true) => {
            return Err(Error::InvalidArgument(
                "marginal evaluation needs a functional of one coordinate only".into(),
            ))
        }
        (false, true) => 1,
        _ => 0,
    };
    let sigma = model.sigma_bound();
    let plan = Plan::build(f, level, [sigma, sigma], num)?;
    let m = f.m();
    let mut stats = ProjectionStats::default();
    let value = if plan.segments() == 0 {
        f.eval(&vec![0.0; 2 * m])
    } else {
        let half = plan.half[c];
        let obs_axis = UniformAxis::symmetric(half, plan.observation_points)?;
        let run_axis = |j: usize| UniformAxis::symmetric(half, plan.running_points[j]);
        let last = plan.segments() - 1;

        let mut axes = vec![obs_axis; last];
        axes.push(run_axis(last)?);
        let mut grid = ValueGrid::from_fn(axes, |incs| {
            let mut args = vec![0.0; 2 * m];
            let mut acc = 0.0;
            for k in 0..m {
                acc += incs.get(k).copied().unwrap_or(0.0);
                args[2 * k + c] = acc;
            }
            let v = f.eval(&args);
            num.clamp_radius.map_or(v, |r| v.clamp(-r, r))
        })?;

        for j in (0..=last).rev() {
            if j < last {
                let centre = run_axis(j + 1)?.center();
                let sliced = grid_slice_last(&grid, centre)?;
                let mut axes = vec![obs_axis; j];
                axes.push(run_axis(j)?);
                grid = ValueGrid::from_fn(axes, |p| sliced.interpolate(p))?;
            }
            let h = run_axis(j)?.spacing();
            let from = if j == 0 { 0 } else { plan.steps[j - 1] };
            for k in (from..plan.steps[j]).rev() {
                let start = dyadic(k, level);
                let block = Time::from_integer(start.floor().to_integer());
                let fam = model.kernel(start - block, start + dyadic(1, level) - block, &num.quadrature)?;
                // Rescaled nodes exactly as the lattice projection uses them.
                let laws: Vec<Vec<(f64, f64)>> = fam
                    .laws()
                    .iter()
                    .map(|law| {
                        let (_, st) = project_law(law, h, num.moment_matching);
                        stats.merge(st);
                        let mean = law.mean()[0];
                        law.iter().map(|(x, w)| (mean + st.min_scale * (x[0] - mean), w)).collect()
                    })
                    .collect();
                let prev = grid.clone();
                let d = prev.dim();
                grid = ValueGrid::from_fn(prev.axes().to_vec(), |p| {
                    let mut q = p.to_vec();
                    laws.iter()
                        .map(|law| {
                            let mut at = |z: f64| {
                                q[d - 1] = p[d - 1] + z;
                                prev.interpolate(&q)
                            };
                            let a0 = at(law[0].0);
                            a0 + law[1..].iter().map(|&(z, w)| w * (at(z) - a0)).sum::<f64>()
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })?;
            }
        }
        let centre = run_axis(0)?.center();
        grid.values()[centre]
    };
    Ok(ExpectationReport {
        value,
        level,
        times: f.times().iter().map(|t| format_time(*t)).collect(),
        functional: f.label().to_string(),
        nesting: num.nesting,
        running_points: plan.running_points.clone(),
        observation_points: plan.observation_points,
        half_range: plan.half,
        clamp_radius: num.clamp_radius,
        moment_matching: num.moment_matching,
        projection: stats,
        mass_outside: 0.0,
        predicted_cost: 0.0,
        max_tensor_len: plan.tensor_lens.iter().copied().max().unwrap_or(1),
        warnings: Vec::new(),
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

/// Restriction of a grid to node `index` of its last axis.
fn grid_slice_last(grid: &ValueGrid, index: usize) -> Result<ValueGrid> {
    let axes = grid.axes();
    let last = axes[axes.len() - 1].len();
    let values: Vec<f64> = grid.values().chunks_exact(last).map(|c| c[index]).collect();
    ValueGrid::new(axes[..axes.len() - 1].to_vec(), values)
}
