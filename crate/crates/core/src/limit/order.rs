use serde::Serialize;

use crate::error::{Error, Result};
use crate::expectation::TestFunction;
use crate::process::{normal_abs_moment, ProcessModel};
use crate::product::{evaluate_en, CylinderFunctional, NestingOrder, NumericsSpec};
use crate::time::{to_f64, Time};

#[derive(Debug, Clone, Serialize)]
pub struct OrderSensitivity {
    pub level: u32,
    pub value: f64,
    pub value_next: f64,
    /// `|Ê^n[f] - Ê^{n+1}[f]|`.
    pub level_gap: f64,
    pub value_flipped: f64,
    /// Gap between the default nesting and the flipped one at level `n`.
    pub order_gap: f64,
}

pub fn order_sensitivity(
    f: &CylinderFunctional,
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
) -> Result<OrderSensitivity> {
    let base = NumericsSpec { nesting: NestingOrder::NInner, ..num.clone() };
    let flip = NumericsSpec { nesting: NestingOrder::MInner, ..num.clone() };
    let value = evaluate_en(f, level, model_m, model_n, &base)?.value;
    let value_next = evaluate_en(f, level + 1, model_m, model_n, &base)?.value;
    let value_flipped = evaluate_en(f, level, model_m, model_n, &flip)?.value;
    Ok(OrderSensitivity {
        level,
        value,
        value_next,
        level_gap: (value - value_next).abs(),
        value_flipped,
        order_gap: (value - value_flipped).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentBound {
    pub time: String,
    pub level: u32,
    pub clamp: f64,
    /// `Ê^n[min(|X_t|^3, R)]` with the Euclidean norm.
    pub value: f64,
    /// `Ê_1[|B_1|^3] + Ê_2[|B_1|^3]`.
    pub c: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn moment_bound_check(
    t: Time,
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    clamp: f64,
    num: &NumericsSpec,
) -> Result<MomentBound> {
    let mut c = 0.0;
    for model in [model_m, model_n] {
        let spec = model.g_spec().ok_or_else(|| {
            Error::InvalidArgument(format!("moment bound needs G-Brownian models, got {}", model.label()))
        })?;
        c += [spec.sigma_min(), spec.sigma_max()]
            .into_iter()
            .chain(spec.finite_set().unwrap_or(&[]).iter().copied())
            .map(|s| normal_abs_moment(s, 3.0))
            .fold(0.0, f64::max);
    }
    let phi =
        TestFunction::new(2, format!("min(|x|^3, {clamp})"), move |a| a[0].hypot(a[1]).powi(3).min(clamp));
    let value = evaluate_en(&CylinderFunctional::new(vec![t], phi)?, level, model_m, model_n, num)?.value;
    let bound = 4.0 * c * to_f64(t).powf(1.5);
    Ok(MomentBound {
        time: crate::time::format_time(t),
        level,
        clamp,
        value,
        c,
        bound,
        holds: value <= bound + 1e-9,
    })
}
