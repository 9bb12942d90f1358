//! A small expression language for test functions of the observed values
//! `x1..xm`, `y1..ym`, with interval estimates of their constants.

mod bounds;
mod parse;

use std::sync::Arc;

pub use bounds::{check_growth, estimate_lipschitz_bound, growth, Growth, GrowthPair, Interval};
pub use parse::{parse_expr, var_name, Expr, Func, EXP_CAP};

use crate::error::Result;
use crate::expectation::TestFunction;
use crate::product::CylinderFunctional;
use crate::time::Time;

/// Parses `text` into a functional at `times`. Constants are estimated on the
/// box `[-half[0], half[0]]` for `x` variables and `[-half[1], half[1]]` for `y`.
pub fn parse_functional(text: &str, times: Vec<Time>, half: [f64; 2]) -> Result<CylinderFunctional> {
    let m = times.len();
    let expr = parse_expr(text, m)?;
    check_growth(&expr)?;
    let bx: Vec<Interval> = (0..2 * m).map(|i| Interval::new(-half[i % 2], half[i % 2])).collect();
    let (l, k) = estimate_lipschitz_bound(&expr, &bx)?;
    let mut vars = Vec::new();
    expr.variables(&mut vars);
    let uses = (0..m).map(|k| [vars.contains(&(2 * k)), vars.contains(&(2 * k + 1))]).collect();
    let expr = Arc::new(expr);
    let phi = TestFunction::new(2 * m, text.trim(), move |a| expr.eval(a)).with_constants(l, k);
    CylinderFunctional::with_uses(times, phi, uses)
}
