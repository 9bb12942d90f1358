use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::{ProcessModel, QuadratureSpec};
use crate::product::NestingOrder;
use crate::time::dyadic;

const RAMP_POINTS: usize = 4001;

/// Markov-type bound on the mass of the increment vector outside the ball of radius `N`.
#[derive(Debug, Clone, Serialize)]
pub struct TightnessCertificate {
    pub level: u32,
    pub truncation: f64,
    pub bound: f64,
    /// `Σ_k` of the per-step increment moduli of the first process.
    pub modulus_sum_m: f64,
    pub modulus_sum_n: f64,
    /// `Ê^n[φ_N]` on the 1-norm of all increments.
    pub direct: f64,
    pub holds: bool,
}

/// The cutoff: 0 below `N - 1`, 1 above `N`, linear between.
pub fn cutoff(truncation: f64, r: f64) -> f64 {
    (r - (truncation - 1.0)).clamp(0.0, 1.0)
}

pub fn tightness_bound(
    level: u32,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    truncation: f64,
    quad: &QuadratureSpec,
    nesting: NestingOrder,
) -> Result<TightnessCertificate> {
    if !(truncation > 1.0 && truncation.is_finite()) {
        return Err(Error::InvalidArgument(format!("truncation must exceed 1, got {truncation}")));
    }
    let steps = 1i64 << level;
    let mut sums = [0.0; 2];
    for (s, model) in sums.iter_mut().zip([model_m, model_n]) {
        for k in 0..steps {
            *s += model.increment_modulus(dyadic(k, level), dyadic(k + 1, level))?;
        }
    }
    let bound = (sums[0] + sums[1]) / (truncation - 1.0);
    let direct = direct_cutoff_expectation(level, [model_m, model_n], truncation, quad, nesting)?;
    Ok(TightnessCertificate {
        level,
        truncation,
        bound,
        modulus_sum_m: sums[0],
        modulus_sum_n: sums[1],
        direct,
        holds: direct <= bound + 1e-9,
    })
}

/// Backward recursion on the accumulated norm `s = Σ |ΔM| + |ΔN|`.
/// The value is 1 for `s >= N`, so the grid stops there.
fn direct_cutoff_expectation(
    level: u32,
    models: [&dyn ProcessModel; 2],
    truncation: f64,
    quad: &QuadratureSpec,
    nesting: NestingOrder,
) -> Result<f64> {
    let h = truncation / (RAMP_POINTS - 1) as f64;
    let mut v: Vec<f64> = (0..RAMP_POINTS).map(|i| cutoff(truncation, i as f64 * h)).collect();
    let order = match nesting {
        NestingOrder::NInner => [1, 0],
        NestingOrder::MInner => [0, 1],
    };
    let at = |v: &[f64], s: f64| {
        let u = s / h;
        if u >= (RAMP_POINTS - 1) as f64 {
            return v[RAMP_POINTS - 1];
        }
        let i = u.floor() as usize;
        let th = u - i as f64;
        v[i] + th * (v[i + 1] - v[i])
    };
    for k in (0..1i64 << level).rev() {
        for &c in &order {
            let fam = models[c].kernel(dyadic(k, level), dyadic(k + 1, level), quad)?;
            let prev = v.clone();
            for (i, out) in v.iter_mut().enumerate() {
                let s = i as f64 * h;
                *out = fam.expect_with(|x| at(&prev, s + x[0].abs()));
            }
        }
    }
    Ok(v[0])
}
