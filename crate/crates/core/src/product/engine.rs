//! Backward recursion for `Ê^n` on the reduced state
//! (increments at past observation times, running sum since the last one).

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::stencil::{AxisOperator, ProjectionStats};
use super::{CylinderFunctional, NestingOrder, NumericsSpec};
use crate::error::{Error, Result};
use crate::grid::UniformAxis;
use crate::process::ProcessModel;
use crate::time::{dyadic, format_time, steps_at, to_f64, Time};

/// A computed `Ê^n[f]` together with the numerics that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectationReport {
    pub value: f64,
    pub level: u32,
    pub times: Vec<String>,
    pub functional: String,
    pub nesting: NestingOrder,
    pub running_points: Vec<usize>,
    pub observation_points: usize,
    pub half_range: [f64; 2],
    pub clamp_radius: Option<f64>,
    pub moment_matching: bool,
    pub projection: ProjectionStats,
    /// Probability mass of the max-variance Gaussian outside the grid box.
    pub mass_outside: f64,
    /// Multiply-adds predicted before the run.
    pub predicted_cost: f64,
    pub max_tensor_len: usize,
    pub warnings: Vec<String>,
    pub wall_ms: f64,
}

/// Static layout of one recursion.
#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub level: u32,
    /// Fine-step index of each relevant observation time.
    pub steps: Vec<i64>,
    /// Coordinates live on the running axes of each segment.
    pub run_active: Vec<[bool; 2]>,
    pub running_points: Vec<usize>,
    pub observation_points: usize,
    pub half: [f64; 2],
    pub horizon: f64,
    pub tensor_lens: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct AxisTag {
    coord: usize,
    /// Segment whose increment this axis carries.
    segment: usize,
    axis: UniformAxis,
}

fn count(active: [bool; 2]) -> usize {
    active.iter().filter(|a| **a).count()
}

impl Plan {
    pub fn build(f: &CylinderFunctional, level: u32, sigma: [f64; 2], num: &NumericsSpec) -> Result<Self> {
        num.validate()?;
        if level == 0 {
            return Err(Error::InvalidArgument("level must be at least 1".into()));
        }
        if level > num.max_level {
            return Err(Error::ResourceLimit(format!(
                "level {level} exceeds the configured maximum {}",
                num.max_level
            )));
        }
        let mut steps = Vec::with_capacity(f.m());
        for &t in f.times() {
            steps.push(steps_at(t, level).ok_or(Error::NonDyadicTime { time: t, level })?);
        }
        let relevant = f.uses().iter().rposition(|u| u[0] || u[1]).map_or(0, |k| k + 1);
        steps.truncate(relevant);
        let run_active: Vec<[bool; 2]> = (0..relevant)
            .map(|j| {
                let later = &f.uses()[j..];
                [later.iter().any(|u| u[0]), later.iter().any(|u| u[1])]
            })
            .collect();
        let horizon = if relevant == 0 { 0.0 } else { to_f64(f.times()[relevant - 1]) };
        let half = [num.half_width(sigma[0], horizon)?, num.half_width(sigma[1], horizon)?];
        let obs = num.observation_points;
        let mut running_points = Vec::with_capacity(relevant);
        let mut tensor_lens = Vec::with_capacity(relevant);
        for j in 0..relevant {
            let obs_axes: usize = run_active[..j].iter().map(|a| count(*a)).sum();
            let run_axes = count(run_active[j]);
            let r = num.running_count(obs_axes + run_axes);
            let len = (obs as u128).pow(obs_axes as u32) * (r as u128).pow(run_axes as u32);
            if len > num.max_tensor_len as u128 {
                return Err(Error::ResourceLimit(format!(
                    "segment {} needs a value tensor of {len} entries (limit {}); \
                     reduce grid counts or the number of observation times",
                    j + 1,
                    num.max_tensor_len
                )));
            }
            running_points.push(r);
            tensor_lens.push(len as usize);
        }
        Ok(Self {
            level,
            steps,
            run_active,
            running_points,
            observation_points: obs,
            half,
            horizon,
            tensor_lens,
        })
    }

    pub fn segments(&self) -> usize {
        self.steps.len()
    }

    fn segment_start(&self, j: usize) -> i64 {
        if j == 0 {
            0
        } else {
            self.steps[j - 1]
        }
    }

    fn run_axis(&self, j: usize, c: usize) -> UniformAxis {
        UniformAxis::symmetric(self.half[c], self.running_points[j]).expect("validated axis")
    }

    fn obs_axis(&self, c: usize) -> UniformAxis {
        UniformAxis::symmetric(self.half[c], self.observation_points).expect("validated axis")
    }

    /// Axes of the value tensor while stepping through segment `j`.
    fn axes(&self, j: usize) -> Vec<AxisTag> {
        let mut axes = Vec::new();
        for i in 0..j {
            for c in 0..2 {
                if self.run_active[i][c] {
                    axes.push(AxisTag { coord: c, segment: i, axis: self.obs_axis(c) });
                }
            }
        }
        for c in 0..2 {
            if self.run_active[j][c] {
                axes.push(AxisTag { coord: c, segment: j, axis: self.run_axis(j, c) });
            }
        }
        axes
    }
}

/// Projected one-step operators, cached per coordinate, spacing and step.
struct OperatorCache<'a> {
    models: [&'a dyn ProcessModel; 2],
    level: u32,
    num: &'a NumericsSpec,
    cache: HashMap<(usize, u64, Option<i64>), Arc<AxisOperator>>,
    stats: ProjectionStats,
}

impl<'a> OperatorCache<'a> {
    fn new(models: [&'a dyn ProcessModel; 2], level: u32, num: &'a NumericsSpec) -> Self {
        Self { models, level, num, cache: HashMap::new(), stats: ProjectionStats::default() }
    }

    fn get(&mut self, c: usize, h: f64, step: i64) -> Result<Arc<AxisOperator>> {
        let model = self.models[c];
        let key = (c, h.to_bits(), (!model.is_stationary()).then_some(step));
        if let Some(op) = self.cache.get(&key) {
            return Ok(op.clone());
        }
        let start = dyadic(step, self.level);
        // Each unit block carries an independent copy of the unit-interval process.
        let block = Time::from_integer(start.floor().to_integer());
        let end = start + dyadic(1, self.level);
        let fam = model.kernel(start - block, end - block, &self.num.quadrature)?;
        let (op, stats) = AxisOperator::from_family(&fam, h, self.num.moment_matching)?;
        self.stats.merge(stats);
        let op = Arc::new(op);
        self.cache.insert(key, op.clone());
        Ok(op)
    }
}

struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Runs the fine steps `from..to` backwards on the trailing running axes.
fn step_segment(
    t: &mut Tensor,
    active: [bool; 2],
    h: [f64; 2],
    steps: std::ops::Range<i64>,
    ops: &mut OperatorCache<'_>,
    nesting: NestingOrder,
) -> Result<()> {
    let n_run = count(active);
    let first_run = t.shape.len() - n_run;
    let pos_m = first_run;
    let pos_n = if active[0] { first_run + 1 } else { first_run };
    for k in steps.rev() {
        let op_m = if active[0] { Some(ops.get(0, h[0], k)?) } else { None };
        let op_n = if active[1] { Some(ops.get(1, h[1], k)?) } else { None };
        let apply_m = |t: &mut Tensor| {
            if let Some(op) = &op_m {
                op.apply(&mut t.data, &t.shape, pos_m);
            }
        };
        let apply_n = |t: &mut Tensor| {
            if let Some(op) = &op_n {
                op.apply(&mut t.data, &t.shape, pos_n);
            }
        };
        match nesting {
            NestingOrder::NInner => {
                apply_n(t);
                apply_m(t);
            }
            NestingOrder::MInner => {
                apply_m(t);
                apply_n(t);
            }
        }
    }
    Ok(())
}

/// Restricts the trailing `k` axes to their centre node.
fn slice_centre(t: Tensor, k: usize) -> Tensor {
    let split = t.shape.len() - k;
    let tail = &t.shape[split..];
    let block: usize = tail.iter().product();
    let mut offset = 0;
    for &len in tail {
        offset = offset * len + (len - 1) / 2;
    }
    let data = t.data.chunks_exact(block).map(|c| c[offset]).collect();
    Tensor { shape: t.shape[..split].to_vec(), data }
}

/// Reinterpolates the trailing axes from `old` grids onto `new` grids.
fn resample_tail(t: Tensor, old: &[UniformAxis], new: &[UniformAxis]) -> Tensor {
    let split = t.shape.len() - old.len();
    let old_block: usize = old.iter().map(UniformAxis::len).product();
    let new_block: usize = new.iter().map(UniformAxis::len).product();
    let mut old_strides = vec![1usize; old.len()];
    for a in (0..old.len().saturating_sub(1)).rev() {
        old_strides[a] = old_strides[a + 1] * old[a + 1].len();
    }
    // Interpolation corners of every new node.
    let corners: Vec<Vec<(usize, f64)>> = (0..new_block)
        .map(|q| {
            let mut rem = q;
            let mut idx = vec![0usize; new.len()];
            for a in (0..new.len()).rev() {
                idx[a] = rem % new[a].len();
                rem /= new[a].len();
            }
            let cells: Vec<(usize, f64)> =
                (0..new.len()).map(|a| old[a].locate(new[a].point(idx[a]))).collect();
            let mut out = Vec::with_capacity(1 << new.len());
            for corner in 0..(1usize << new.len()) {
                let mut w = 1.0;
                let mut flat = 0;
                for (a, &(i, th)) in cells.iter().enumerate() {
                    let up = corner >> a & 1 == 1;
                    w *= if up { th } else { 1.0 - th };
                    flat += (i + up as usize) * old_strides[a];
                }
                if w != 0.0 {
                    out.push((flat, w));
                }
            }
            out
        })
        .collect();
    let prefix = t.data.len() / old_block;
    let mut data = vec![0.0; prefix * new_block];
    data.par_chunks_mut(new_block).enumerate().for_each(|(p, out)| {
        let src = &t.data[p * old_block..(p + 1) * old_block];
        for (o, cs) in out.iter_mut().zip(&corners) {
            *o = cs.iter().map(|&(i, w)| w * src[i]).sum();
        }
    });
    let mut shape = t.shape[..split].to_vec();
    shape.extend(new.iter().map(UniformAxis::len));
    Tensor { shape, data }
}

/// Tabulates `f` on the state grid of the last relevant segment.
fn terminal(f: &CylinderFunctional, axes: &[AxisTag], clamp: Option<f64>) -> Tensor {
    let shape: Vec<usize> = axes.iter().map(|a| a.axis.len()).collect();
    let len: usize = shape.iter().product();
    let m = f.m();
    let mut data = vec![0.0; len];
    data.par_iter_mut().enumerate().for_each_init(
        || (vec![0.0; 2 * m], vec![0.0; 2 * m]),
        |(inc, args), (flat, out)| {
            inc.fill(0.0);
            let mut rem = flat;
            for (a, tag) in axes.iter().enumerate().rev() {
                let l = shape[a];
                inc[2 * tag.segment + tag.coord] = tag.axis.point(rem % l);
                rem /= l;
            }
            let (mut x, mut y) = (0.0, 0.0);
            for k in 0..m {
                x += inc[2 * k];
                y += inc[2 * k + 1];
                args[2 * k] = x;
                args[2 * k + 1] = y;
            }
            let v = f.eval(args);
            *out = match clamp {
                Some(r) => v.clamp(-r, r),
                None => v,
            };
        },
    );
    Tensor { shape, data }
}

/// Predicted multiply-adds of a run, from the operators of each segment's first step.
pub fn predict_cost(
    f: &CylinderFunctional,
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<(Plan, f64)> {
    let models = [model_m, model_n];
    let plan = Plan::build(f, level, [model_m.sigma_bound(), model_n.sigma_bound()], num)?;
    let mut ops = OperatorCache::new(models, level, num);
    let mut cost = 0.0;
    for j in 0..plan.segments() {
        let (from, to) = (plan.segment_start(j), plan.steps[j]);
        if to == from {
            continue;
        }
        let mut work = 0usize;
        for c in 0..2 {
            if plan.run_active[j][c] {
                work += ops.get(c, plan.run_axis(j, c).spacing(), from)?.work();
            }
        }
        cost += (to - from) as f64 * plan.tensor_lens[j] as f64 * work as f64;
    }
    Ok((plan, cost))
}

pub(crate) fn run(
    f: &CylinderFunctional,
    level: u32,
    models: [&dyn ProcessModel; 2],
    num: &NumericsSpec,
) -> Result<ExpectationReport> {
    let clock = Instant::now();
    let (plan, predicted_cost) = predict_cost(f, level, models[0], models[1], num)?;
    let mut ops = OperatorCache::new(models, level, num);
    let value = if plan.segments() == 0 {
        let v = f.eval(&vec![0.0; 2 * f.m()]);
        num.clamp_radius.map_or(v, |r| v.clamp(-r, r))
    } else {
        let last = plan.segments() - 1;
        let mut t = terminal(f, &plan.axes(last), num.clamp_radius);
        for j in (0..=last).rev() {
            if j < last {
                t = slice_centre(t, count(plan.run_active[j + 1]));
                let old: Vec<UniformAxis> =
                    (0..2).filter(|&c| plan.run_active[j][c]).map(|c| plan.obs_axis(c)).collect();
                let new: Vec<UniformAxis> =
                    (0..2).filter(|&c| plan.run_active[j][c]).map(|c| plan.run_axis(j, c)).collect();
                t = resample_tail(t, &old, &new);
            }
            let h = [0, 1].map(|c| plan.run_axis(j, c).spacing());
            step_segment(
                &mut t,
                plan.run_active[j],
                h,
                plan.segment_start(j)..plan.steps[j],
                &mut ops,
                num.nesting,
            )?;
        }
        let t = slice_centre(t, count(plan.run_active[0]));
        t.data[0]
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("E^{level}[{}]", f.label())));
    }

    let mut mass_outside = 0.0;
    for (c, model) in models.iter().enumerate() {
        let sd = model.sigma_bound() * plan.horizon.sqrt();
        if f.touches(c) && sd > 0.0 {
            mass_outside += erfc(plan.half[c] / (sd * std::f64::consts::SQRT_2));
        }
    }
    let mut warnings = Vec::new();
    if mass_outside > 1e-4 {
        warnings.push(format!(
            "grid range leaves an estimated mass {mass_outside:.2e} outside; widen half_range"
        ));
    }
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
        projection: ops.stats,
        mass_outside,
        predicted_cost,
        max_tensor_len: plan.tensor_lens.iter().copied().max().unwrap_or(1),
        warnings,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

/// `Ê^n[f]` for a functional with observation times in `D_n ∩ [0, 1]`.
pub fn evaluate_en(
    f: &CylinderFunctional,
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<ExpectationReport> {
    if let Some(t) = f.times().iter().find(|t| **t > Time::from_integer(1)) {
        return Err(Error::InvalidArgument(format!(
            "time {} lies beyond 1; use concatenate_blocks",
            format_time(*t)
        )));
    }
    run(f, level, [model_m, model_n], num)
}

/// Evaluates a functional whose times span `blocks` unit intervals, each an
/// independent copy of the unit-interval construction, nested backwards.
pub fn concatenate_blocks(
    f: &CylinderFunctional,
    blocks: u32,
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<ExpectationReport> {
    if blocks == 0 {
        return Err(Error::InvalidArgument("at least one block is required".into()));
    }
    let end = Time::from_integer(blocks as i64);
    for &t in f.times() {
        if t > end || t < Time::zero() {
            return Err(Error::InvalidArgument(format!(
                "time {} is outside the {blocks} declared blocks",
                format_time(t)
            )));
        }
        if steps_at(t, level).is_none() {
            return Err(Error::NonDyadicTime { time: t, level });
        }
    }
    run(f, level, [model_m, model_n], num)
}

/// Tabulates `ψ(p) = Ê^n[g(p, X_to − X_from)]` on the `prefix` axes, where the
/// increment is built from the fine steps between `from` and `to`.
pub fn increment_value_grid(
    prefix: Vec<UniformAxis>,
    g: impl Fn(&[f64], [f64; 2]) -> f64 + Sync,
    from: Time,
    to: Time,
    level: u32,
    models: [&dyn ProcessModel; 2],
    num: &NumericsSpec,
) -> Result<(crate::grid::ValueGrid, ProjectionStats)> {
    num.validate()?;
    let s0 = steps_at(from, level).ok_or(Error::NonDyadicTime { time: from, level })?;
    let s1 = steps_at(to, level).ok_or(Error::NonDyadicTime { time: to, level })?;
    if s1 < s0 {
        return Err(Error::InvalidArgument("increment interval is reversed".into()));
    }
    let horizon = to_f64(to);
    let r = num.running_count(prefix.len() + 2);
    let run: Vec<UniformAxis> = models
        .iter()
        .map(|m| UniformAxis::symmetric(num.half_width(m.sigma_bound(), horizon)?, r))
        .collect::<Result<_>>()?;
    let mut shape: Vec<usize> = prefix.iter().map(UniformAxis::len).collect();
    shape.extend([r, r]);
    let len: usize = shape.iter().product();
    if len > num.max_tensor_len {
        return Err(Error::ResourceLimit(format!(
            "tabulation tensor of {len} entries exceeds the limit {}",
            num.max_tensor_len
        )));
    }
    let d = prefix.len();
    let mut data = vec![0.0; len];
    data.par_iter_mut().enumerate().for_each_init(
        || vec![0.0; d],
        |p, (flat, out)| {
            let (iy, ix) = (flat % r, (flat / r) % r);
            let mut rem = flat / (r * r);
            for a in (0..d).rev() {
                p[a] = prefix[a].point(rem % prefix[a].len());
                rem /= prefix[a].len();
            }
            let v = g(p, [run[0].point(ix), run[1].point(iy)]);
            *out = num.clamp_radius.map_or(v, |c| v.clamp(-c, c));
        },
    );
    let mut t = Tensor { shape, data };
    let mut ops = OperatorCache::new(models, level, num);
    let h = [run[0].spacing(), run[1].spacing()];
    step_segment(&mut t, [true, true], h, s0..s1, &mut ops, num.nesting)?;
    let t = slice_centre(t, 2);
    Ok((crate::grid::ValueGrid::new(prefix, t.data)?, ops.stats))
}
