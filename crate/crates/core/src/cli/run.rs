use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Analysis, Expect, ExperimentConfig, FunctionalConfig};
use super::report::Row;
use crate::dsl::{parse_expr, parse_functional};
use crate::error::{Error, Result};
use crate::expectation::{
    check_independence, demo_independence_asymmetry, point_table_function, AsymmetryOutcome, Direction,
    RandomVector, SearchSpace, TestFunction,
};
use crate::limit::{
    compare_extensions, convergence_scan, moment_bound_check, order_sensitivity, tightness_bound,
    ConvergenceScan, ScanCriteria,
};
use crate::pde::{solve_gheat_1d, solve_gheat_2d_separable, PdeGrid, PdeSolution};
use crate::process::{GSpec, SharedModel};
use crate::product::{
    check_grid_independence, concatenate_blocks, evaluate_en, marginal_en, CylinderFunctional,
};
use crate::time::{parse_time, to_f64, Time};

/// A named pass/fail assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub target: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn expect(name: &str, observed: f64, e: &Expect) -> Self {
        Self {
            name: name.into(),
            observed,
            tolerance: e.tol,
            target: Some(e.value),
            passed: (observed - e.value).abs() <= e.tol,
        }
    }

    fn at_most(name: &str, observed: f64, tolerance: f64) -> Self {
        Self { name: name.into(), observed, tolerance, target: None, passed: observed <= tolerance }
    }

    fn at_least(name: &str, observed: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            tolerance: threshold,
            target: None,
            passed: observed >= threshold,
        }
    }

    fn row(&self) -> Row {
        Row::new(format!("check:{}", self.name), None, self.observed)
            .err(self.tolerance)
            .aux(self.target, Some(if self.passed { 1.0 } else { 0.0 }))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub truncated: Option<String>,
    pub error: Option<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.truncated.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

/// Everything resolved from a config that the analyses share.
pub struct Context {
    pub config: ExperimentConfig,
    pub model_m: SharedModel,
    pub model_n: SharedModel,
    pub times: Vec<Time>,
    pub functional: CylinderFunctional,
    scan: OnceLock<std::result::Result<ConvergenceScan, String>>,
}

/// Per-axis box on which expression constants are estimated.
pub fn expression_box(
    config: &ExperimentConfig,
    m: &SharedModel,
    n: &SharedModel,
    horizon: f64,
) -> Result<[f64; 2]> {
    Ok([
        config.numerics.half_width(m.sigma_bound(), horizon)?,
        config.numerics.half_width(n.sigma_bound(), horizon)?,
    ])
}

pub fn build_functional(
    fc: &FunctionalConfig,
    config: &ExperimentConfig,
    m: &SharedModel,
    n: &SharedModel,
) -> Result<(Vec<Time>, CylinderFunctional)> {
    let times = fc.parsed_times()?;
    let end = Time::from_integer(fc.blocks as i64);
    if let Some(t) = times.iter().find(|t| **t < Time::from_integer(0) || **t > end) {
        return Err(Error::Config(format!("time {t} lies outside [0, {}]", fc.blocks)));
    }
    let horizon = times.iter().copied().map(to_f64).fold(0.0, f64::max);
    let half = expression_box(config, m, n, horizon)?;
    let f = parse_functional(&fc.expr, times.clone(), half)?;
    Ok((times, f))
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.numerics.validate()?;
        let model_m = config.models.m.build("M")?;
        let model_n = config.models.n.build("N")?;
        let (times, functional) = build_functional(&config.functional, &config, &model_m, &model_n)?;
        if config.levels.min == 0 || config.levels.min > config.levels.max {
            return Err(Error::Config(format!(
                "invalid level range {}..{}",
                config.levels.min, config.levels.max
            )));
        }
        Ok(Self { config, model_m, model_n, times, functional, scan: OnceLock::new() })
    }

    fn models(&self) -> (&dyn crate::process::ProcessModel, &dyn crate::process::ProcessModel) {
        (self.model_m.as_ref(), self.model_n.as_ref())
    }

    fn g_specs(&self) -> Result<(GSpec, GSpec)> {
        match (self.config.models.m.g_spec()?, self.config.models.n.g_spec()?) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Config("this analysis needs g-brownian models".into())),
        }
    }

    /// The scan over `levels`, computed once per run.
    fn scan(&self) -> Result<&ConvergenceScan> {
        let (m, n) = self.models();
        let lv = self.config.levels;
        self.scan
            .get_or_init(|| {
                convergence_scan(
                    &self.functional,
                    lv.min..=lv.max,
                    m,
                    n,
                    &self.config.numerics,
                    &ScanCriteria::default(),
                )
                .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::InvalidArgument(e.clone()))
    }

    pub fn execute(&self, i: usize) -> Outcome {
        let clock = Instant::now();
        let analysis = &self.config.analyses[i];
        let mut out = Outcome::default();
        if let Err(e) = self.dispatch(analysis, &mut out) {
            match e {
                Error::ResourceLimit(msg) => out.truncated = Some(msg),
                e => out.error = Some(e.to_string()),
            }
        }
        let name = analysis.name();
        if let Some(msg) = &out.truncated {
            out.rows.iter_mut().for_each(|r| r.analysis.push_str(":truncated"));
            if out.rows.is_empty() {
                out.rows.push(Row::new(format!("{name}:truncated"), None, 0.0));
            }
            eprintln!("{name}: truncated: {msg}");
        }
        let rows = std::mem::take(&mut out.rows);
        let checks: Vec<Row> = out.checks.iter().map(|c| c.row()).collect();
        let total = clock.elapsed().as_secs_f64() * 1e3;
        let fp = self.config.fingerprint(i);
        out.rows = rows
            .into_iter()
            .chain(checks)
            .map(|mut r| {
                r.fingerprint = fp.clone();
                if r.wall_ms == 0.0 {
                    r.wall_ms = total;
                }
                r
            })
            .collect();
        out
    }

    fn level_or_max(&self, level: Option<u32>) -> u32 {
        level.unwrap_or(self.config.levels.max)
    }

    fn dispatch(&self, analysis: &Analysis, out: &mut Outcome) -> Result<()> {
        let (m, n) = self.models();
        let num = &self.config.numerics;
        let f = &self.functional;
        match analysis {
            Analysis::Evaluate { level, expect } => {
                let level = self.level_or_max(*level);
                let r = if self.config.functional.blocks > 1 {
                    concatenate_blocks(f, self.config.functional.blocks, level, m, n, num)?
                } else {
                    evaluate_en(f, level, m, n, num)?
                };
                for w in &r.warnings {
                    eprintln!("evaluate: warning: {w}");
                }
                let mut row = Row::new("evaluate", Some(level), r.value)
                    .err(r.mass_outside)
                    .aux(Some(r.predicted_cost), Some(r.max_tensor_len as f64));
                row.wall_ms = r.wall_ms;
                out.rows.push(row);
                out.checks.extend(expect.map(|e| Check::expect("evaluate", r.value, &e)));
            }
            Analysis::Scan { tolerance, monotone_from, require_cauchy, expect } => {
                let scan = self.scan()?;
                for (k, (&level, &value)) in scan.levels.iter().zip(&scan.values).enumerate() {
                    let mut row = Row::new("scan", Some(level), value);
                    row.err_est = k.checked_sub(1).map(|j| scan.gaps[j]);
                    row.wall_ms = scan.wall_ms[k];
                    out.rows.push(row);
                }
                let criteria = ScanCriteria { tolerance: *tolerance, monotone_from: *monotone_from };
                let cauchy = scan.is_cauchy(&criteria, self.config.levels.min);
                if let Some(best) = scan.best_estimate() {
                    let mut row = Row::new("scan-limit", scan.levels.last().copied(), best);
                    row.err_est = scan.gaps.last().copied();
                    row.aux1 = scan.extrapolation.map(|e| e.ratio);
                    row.aux2 = Some(if cauchy { 1.0 } else { 0.0 });
                    out.rows.push(row);
                    out.checks.extend(expect.map(|e| Check::expect("scan-limit", best, &e)));
                }
                if *require_cauchy {
                    let last = scan.gaps.last().copied().unwrap_or(f64::INFINITY);
                    out.checks.push(Check {
                        name: "scan-cauchy".into(),
                        observed: if last.is_finite() { last } else { 0.0 },
                        tolerance: *tolerance,
                        target: None,
                        passed: cauchy,
                    });
                }
                if let Some(msg) = &scan.partial {
                    out.truncated = Some(msg.clone());
                }
            }
            Analysis::Tightness { truncation, at_levels, expect } => {
                let levels: Vec<u32> = at_levels
                    .clone()
                    .unwrap_or_else(|| (self.config.levels.min..=self.config.levels.max).collect());
                for &level in &levels {
                    for &big_n in truncation {
                        let c = tightness_bound(level, m, n, big_n, &num.quadrature, num.nesting)?;
                        out.rows.push(
                            Row::new("tightness", Some(level), c.direct)
                                .err(c.bound)
                                .aux(Some(big_n), Some(if c.holds { 1.0 } else { 0.0 })),
                        );
                        out.checks.push(Check::at_most("tightness", c.direct, c.bound + 1e-9));
                    }
                }
                if let (Some(e), Some(first)) = (expect, out.rows.first().and_then(|r| r.err_est)) {
                    out.checks.push(Check::expect("tightness-bound", first, e));
                }
            }
            Analysis::Independence { battery, level, tabulation_points, tolerance } => {
                let level = self.level_or_max(*level);
                let mm = self.times.len();
                let tests = battery
                    .iter()
                    .map(|text| {
                        let e = std::sync::Arc::new(parse_expr(text, mm)?);
                        Ok(TestFunction::new(2 * mm, text.trim(), move |a| e.eval(a)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let r = check_grid_independence(level, &self.times, &tests, m, n, num, *tabulation_points)?;
                for e in &r.entries {
                    out.rows
                        .push(Row::new("independence", Some(level), e.lhs).err(e.gap).aux(Some(e.rhs), None));
                }
                out.checks.push(Check::at_most("independence", r.max_gap, *tolerance));
            }
            Analysis::Order { level, min_gap } => {
                let level = level.unwrap_or(self.config.levels.min);
                let r = order_sensitivity(f, level, m, n, num)?;
                out.rows.push(
                    Row::new("order", Some(level), r.value)
                        .err(r.order_gap)
                        .aux(Some(r.value_flipped), Some(r.level_gap)),
                );
                out.checks.extend(min_gap.map(|g| Check::at_least("order-level-gap", r.level_gap, g)));
            }
            Analysis::PdeCompare { tolerance, expect } => {
                let scan = self.scan()?;
                let lattice = scan
                    .best_estimate()
                    .ok_or_else(|| Error::InvalidArgument("scan produced no values".into()))?;
                let sol = self.solve_pde()?;
                let diff = (sol.origin - lattice).abs();
                out.rows.push(
                    Row::new("pde-compare", scan.levels.last().copied(), sol.origin)
                        .err(diff)
                        .aux(Some(lattice), Some(sol.cfl_ratio)),
                );
                out.checks.push(Check::at_most("pde-vs-lattice", diff, *tolerance));
                out.checks.extend(expect.map(|e| Check::expect("pde", sol.origin, &e)));
                if let Some(msg) = &scan.partial {
                    out.truncated = Some(msg.clone());
                }
            }
            Analysis::MomentBound { times, level, clamp } => {
                let level = self.level_or_max(*level);
                for t in times {
                    let t = parse_time(t)?;
                    let r = moment_bound_check(t, level, m, n, *clamp, num)?;
                    out.rows.push(
                        Row::new("moment-bound", Some(level), r.value)
                            .err(r.bound)
                            .aux(Some(to_f64(t)), Some(if r.holds { 1.0 } else { 0.0 })),
                    );
                    out.checks.push(Check::at_most("moment-bound", r.value, r.bound + 1e-9));
                }
            }
            Analysis::AsymmetryDemo { weight_denominator, min_gap } => {
                asymmetry(*weight_denominator, *min_gap, out)?;
            }
            Analysis::Marginal { level, tolerance, expect } => {
                let level = self.level_or_max(*level);
                let model = if f.touches(1) { n } else { m };
                let marginal = marginal_en(f, level, model, num)?;
                let joint = evaluate_en(f, level, m, n, num)?;
                let diff = (marginal.value - joint.value).abs();
                out.rows.push(
                    Row::new("marginal", Some(level), marginal.value).err(diff).aux(Some(joint.value), None),
                );
                out.checks.push(Check::at_most("marginal-vs-joint", diff, *tolerance));
                out.checks.extend(expect.map(|e| Check::expect("marginal", marginal.value, &e)));
            }
            Analysis::Extend { level_i, level_j, eval_level } => {
                let eval = eval_level.unwrap_or(*level_i.max(level_j));
                let c = compare_extensions(f, *level_i, *level_j, eval, m, n, num)?;
                out.rows.push(
                    Row::new("extend", Some(*level_j), c.value_j)
                        .err(c.gap)
                        .aux(Some(c.value_i), Some(c.bound)),
                );
                out.checks.push(Check::at_most("extension-bound", c.gap, c.bound));
            }
        }
        Ok(())
    }

    /// G-heat solution for the functional's single observation time.
    pub fn solve_pde(&self) -> Result<PdeSolution> {
        let (sx, sy) = self.g_specs()?;
        let f = &self.functional;
        if f.m() != 1 {
            return Err(Error::Config("the PDE solver needs a functional with one observation time".into()));
        }
        let t = to_f64(self.times[0]);
        let phi = f.phi().clone();
        match (f.touches(0), f.touches(1)) {
            (true, true) => {
                let grid = self.config.pde.clone().unwrap_or_else(PdeGrid::two_d);
                solve_gheat_2d_separable(&sx, &sy, move |x, y| phi.eval(&[x, y]), t, &grid)
            }
            (x, _) => {
                let grid = self.config.pde.clone().unwrap_or_else(PdeGrid::one_d);
                let (spec, at) = if x { (sx, 0) } else { (sy, 1) };
                solve_gheat_1d(
                    &spec,
                    move |v| {
                        let mut a = [0.0; 2];
                        a[at] = v;
                        phi.eval(&a)
                    },
                    t,
                    &grid,
                )
            }
        }
    }
}

/// Exhaustive witness search, re-confirmed on the full point-table battery.
pub fn asymmetry(weight_denominator: u32, min_gap: f64, out: &mut Outcome) -> Result<()> {
    let space = SearchSpace { weight_denominator, min_gap, ..SearchSpace::default() };
    let outcome = demo_independence_asymmetry(&space)?;
    let w = match outcome {
        AsymmetryOutcome::Witness(w) => w,
        AsymmetryOutcome::NoWitness { families_searched } => {
            out.rows.push(Row::new("asymmetry-demo", None, 0.0).aux(None, Some(families_searched as f64)));
            out.checks.push(Check::at_least("asymmetry-gap", 0.0, min_gap));
            return Ok(());
        }
    };
    let swap = |phi: &TestFunction| {
        let p = phi.clone();
        TestFunction::new(2, format!("swapped {}", phi.label()), move |a| p.eval(&[a[1], a[0]]))
    };
    let battery: Vec<TestFunction> = (0..81)
        .map(|mut code| {
            let mut t = [0.0; 4];
            for v in t.iter_mut() {
                *v = (code % 3) as f64 - 1.0;
                code /= 3;
            }
            point_table_function(t)
        })
        .collect();
    let (x, y): (&RandomVector, &RandomVector) = (&w.x, &w.y);
    let tol = space.hold_tol;
    let (holding, failing) = match w.holding {
        Direction::YFromX => (
            check_independence(&w.family, x, y, &battery, None, tol)?,
            check_independence(&w.family, y, x, &[swap(&w.phi)], None, tol)?,
        ),
        Direction::XFromY => (
            check_independence(&w.family, y, x, &battery.iter().map(swap).collect::<Vec<_>>(), None, tol)?,
            check_independence(&w.family, x, y, std::slice::from_ref(&w.phi), None, tol)?,
        ),
    };
    let direction = match w.holding {
        Direction::YFromX => 0.0,
        Direction::XFromY => 1.0,
    };
    out.rows.push(
        Row::new("asymmetry-demo", None, failing.max_gap)
            .err(holding.max_gap)
            .aux(Some(direction), Some(w.families_searched as f64)),
    );
    out.checks.push(Check::at_most("asymmetry-holding", holding.max_gap, tol));
    out.checks.push(Check::at_least("asymmetry-gap", failing.max_gap, min_gap));
    Ok(())
}

/// Runs every analysis, concurrently when `jobs > 1`; results keep declaration order.
pub fn run_all(ctx: &Context, jobs: usize) -> Vec<Outcome> {
    let n = ctx.config.analyses.len();
    if jobs <= 1 {
        return (0..n).map(|i| ctx.execute(i)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(|i| ctx.execute(i)).collect()),
        Err(_) => (0..n).map(|i| ctx.execute(i)).collect(),
    }
}
