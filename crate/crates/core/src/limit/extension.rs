use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::ProcessModel;
use crate::product::{evaluate_en, CylinderFunctional, ExpectationReport, NumericsSpec};
use crate::time::{ceil_to_level, dyadic, format_time, Time};

/// Deepest level tried when searching for a feasible approximation level.
const MAX_SEARCH_LEVEL: u32 = 40;

/// Level-`level` dyadic times approaching `times` from above, bumped one
/// step where needed so they stay strictly increasing.
pub fn dyadic_approximants(times: &[Time], level: u32) -> Result<Vec<Time>> {
    if let Some(t) = times.iter().find(|t| **t < Time::zero() || **t > Time::one()) {
        return Err(Error::InvalidArgument(format!("time {} is outside [0, 1]", format_time(*t))));
    }
    match approximants_at(times, level) {
        Some(v) => Ok(v),
        None => {
            let minimal =
                (level + 1..=MAX_SEARCH_LEVEL).find(|l| approximants_at(times, *l).is_some()).ok_or_else(
                    || Error::InvalidArgument("times are closer than any supported level resolves".into()),
                )?;
            Err(Error::TimesTooClose { level, minimal })
        }
    }
}

fn approximants_at(times: &[Time], level: u32) -> Option<Vec<Time>> {
    let mut out: Vec<Time> = Vec::with_capacity(times.len());
    for &t in times {
        let mut c = ceil_to_level(t, level);
        if let Some(&prev) = out.last() {
            if c <= prev {
                c = prev + dyadic(1, level);
            }
        }
        if c > Time::one() {
            return None;
        }
        out.push(c);
    }
    Some(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Extension {
    pub target_level: u32,
    pub times: Vec<String>,
    pub dyadic_times: Vec<String>,
    pub report: ExpectationReport,
}

/// Evaluates `f` at its level-`level` dyadic approximants, with the recursion
/// run at `eval_level >= level`.
pub fn extend_to_time(
    f: &CylinderFunctional,
    level: u32,
    eval_level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<Extension> {
    if eval_level < level {
        return Err(Error::InvalidArgument(format!(
            "evaluation level {eval_level} is below the approximation level {level}"
        )));
    }
    let approx = dyadic_approximants(f.times(), level)?;
    let report = evaluate_en(&f.retimed(approx.clone())?, eval_level, model_m, model_n, num)?;
    Ok(Extension {
        target_level: level,
        times: f.times().iter().map(|t| format_time(*t)).collect(),
        dyadic_times: approx.iter().map(|t| format_time(*t)).collect(),
        report,
    })
}

/// `2 L Σ_k Σ_c (ω_c(t_k, t_k^i) + ω_c(t_k, t_k^j))` with `ω_c` the
/// increment modulus of process `c`.
pub fn extension_bound(
    f: &CylinderFunctional,
    level_i: u32,
    level_j: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
) -> Result<f64> {
    let lip = f.phi().lipschitz().ok_or_else(|| {
        Error::InvalidArgument(format!("functional '{}' has no recorded Lipschitz constant", f.label()))
    })?;
    let ti = dyadic_approximants(f.times(), level_i)?;
    let tj = dyadic_approximants(f.times(), level_j)?;
    let mut sum = 0.0;
    for (k, &t) in f.times().iter().enumerate() {
        for (c, model) in [model_m, model_n].into_iter().enumerate() {
            if f.uses()[k][c] {
                sum += model.increment_modulus(t, ti[k])? + model.increment_modulus(t, tj[k])?;
            }
        }
    }
    Ok(2.0 * lip * sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionComparison {
    pub level_i: u32,
    pub level_j: u32,
    pub value_i: f64,
    pub value_j: f64,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Observed difference between two approximation levels against the modulus bound.
pub fn compare_extensions(
    f: &CylinderFunctional,
    level_i: u32,
    level_j: u32,
    eval_level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<ExtensionComparison> {
    let vi = extend_to_time(f, level_i, eval_level, model_m, model_n, num)?.report.value;
    let vj = extend_to_time(f, level_j, eval_level, model_m, model_n, num)?.report.value;
    let bound = extension_bound(f, level_i, level_j, model_m, model_n)?;
    let gap = (vi - vj).abs();
    Ok(ExtensionComparison {
        level_i,
        level_j,
        value_i: vi,
        value_j: vj,
        gap,
        bound,
        holds: gap <= bound + 1e-12,
    })
}
