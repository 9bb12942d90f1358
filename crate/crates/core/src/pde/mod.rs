//! Explicit monotone finite differences for the G-heat equation
//! `∂_t u = G(u_xx)` and its separable planar form `∂_t u = G₁(u_xx) + G₂(u_yy)`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{g_function, GSpec};

/// Spatial and temporal discretisation of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeGrid {
    pub h: f64,
    /// Fixed time step; must satisfy the CFL condition. `None` picks the
    /// largest step below `cfl_target` that divides the horizon evenly.
    pub tau: Option<f64>,
    pub cfl_target: f64,
    /// Domain half-width per axis is `range_multiplier * sigma_bar * sqrt(T)`.
    pub range_multiplier: f64,
    /// Also solve on the `boundary_multiplier` domain and report the difference at 0.
    pub boundary_check: bool,
    pub boundary_multiplier: f64,
}

impl Default for PdeGrid {
    fn default() -> Self {
        Self::one_d()
    }
}

impl PdeGrid {
    pub fn one_d() -> Self {
        Self {
            h: 0.025,
            tau: None,
            cfl_target: 0.45,
            range_multiplier: 6.0,
            boundary_check: true,
            boundary_multiplier: 8.0,
        }
    }

    pub fn two_d() -> Self {
        Self { h: 0.1, ..Self::one_d() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {}", self.h)));
        }
        if !(self.cfl_target > 0.0 && self.cfl_target <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "cfl target must lie in (0, 0.5], got {}",
                self.cfl_target
            )));
        }
        if self.range_multiplier < 6.0 || self.boundary_multiplier <= self.range_multiplier {
            return Err(Error::InvalidArgument(
                "domain needs range_multiplier >= 6 and a larger boundary_multiplier".into(),
            ));
        }
        Ok(())
    }

    /// Nodes per side of the origin for an axis of the given volatility.
    fn side(&self, sigma_bar: f64, horizon: f64, multiplier: f64) -> usize {
        let half = (multiplier * sigma_bar * horizon.sqrt()).max(1.0);
        (half / self.h).ceil() as usize
    }

    /// Time step and step count for diffusion rate `rate = Σ σ̄²`.
    fn schedule(&self, rate: f64, horizon: f64) -> Result<(f64, usize, f64)> {
        if horizon == 0.0 {
            return Ok((0.0, 0, 0.0));
        }
        let h2 = self.h * self.h;
        let tau = match self.tau {
            Some(tau) => {
                let ratio = tau * rate / h2;
                if ratio > 0.5 {
                    return Err(Error::Cfl { ratio, suggested_tau: self.cfl_target * h2 / rate });
                }
                tau
            }
            None if rate == 0.0 => horizon,
            None => self.cfl_target * h2 / rate,
        };
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        let steps = (horizon / tau * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let tau = horizon / steps as f64;
        Ok((tau, steps, tau * rate / h2))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeSolution {
    pub terminal_time: f64,
    /// Half-width per axis.
    pub half_range: Vec<f64>,
    /// Nodes per axis.
    pub points: Vec<usize>,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub cfl_ratio: f64,
    pub boundary: String,
    /// `u(T, ·)`, row-major with the last axis fastest.
    pub values: Vec<f64>,
    pub origin: f64,
    pub data_min: f64,
    pub data_max: f64,
    pub max_principle_ok: bool,
    /// `|u(T,0)|` difference against the wider domain, when computed.
    pub boundary_influence: Option<f64>,
}

impl PdeSolution {
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.points[axis] / 2) as f64) * self.h
    }

    /// Writes `x[,y],u` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        let io = |e: csv::Error| Error::Io(e.into());
        if self.points.len() == 1 {
            w.write_record(["x", "u"]).map_err(io)?;
            for (i, u) in self.values.iter().enumerate() {
                w.write_record([self.node(0, i).to_string(), u.to_string()]).map_err(io)?;
            }
        } else {
            w.write_record(["x", "y", "u"]).map_err(io)?;
            let ny = self.points[1];
            for (k, u) in self.values.iter().enumerate() {
                let (i, j) = (k / ny, k % ny);
                w.write_record([self.node(0, i).to_string(), self.node(1, j).to_string(), u.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("terminal time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn bounds(values: &[f64]) -> Result<(f64, f64)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite("initial data".into()));
    }
    Ok((lo, hi))
}

fn within(values: &[f64], lo: f64, hi: f64) -> bool {
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    values.iter().all(|u| *u >= lo - slack && *u <= hi + slack)
}

/// Second difference with copy-gradient ghosts: zero at the two ends.
#[inline]
fn second_difference(line: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 == line.len() {
        0.0
    } else {
        (line[i - 1] + line[i + 1]) - 2.0 * line[i]
    }
}

fn run_1d(
    spec: &GSpec,
    phi: &dyn Fn(f64) -> f64,
    t: f64,
    grid: &PdeGrid,
    multiplier: f64,
) -> Result<PdeSolution> {
    let sigma = spec.sigma_max();
    let side = grid.side(sigma, t, multiplier);
    let n = 2 * side + 1;
    let h = grid.h;
    let mut u: Vec<f64> = (0..n).map(|i| phi((i as f64 - side as f64) * h)).collect();
    let (lo, hi) = bounds(&u)?;
    let (tau, steps, cfl) = grid.schedule(sigma * sigma, t)?;
    let mut next = u.clone();
    for _ in 0..steps {
        for (i, out) in next.iter_mut().enumerate() {
            *out = u[i] + tau * g_function(spec, second_difference(&u, i) / (h * h));
        }
        std::mem::swap(&mut u, &mut next);
    }
    let ok = within(&u, lo, hi);
    Ok(PdeSolution {
        terminal_time: t,
        half_range: vec![side as f64 * h],
        points: vec![n],
        h,
        tau,
        steps,
        cfl_ratio: cfl,
        boundary: "neumann-copy-gradient".into(),
        origin: u[side],
        values: u,
        data_min: lo,
        data_max: hi,
        max_principle_ok: ok,
        boundary_influence: None,
    })
}

/// Solves `∂_t u = G(u_xx)`, `u(0, ·) = φ`, up to time `t`.
pub fn solve_gheat_1d(spec: &GSpec, phi: impl Fn(f64) -> f64, t: f64, grid: &PdeGrid) -> Result<PdeSolution> {
    grid.validate()?;
    check_horizon(t)?;
    let mut sol = run_1d(spec, &phi, t, grid, grid.range_multiplier)?;
    if grid.boundary_check {
        let wide = run_1d(spec, &phi, t, grid, grid.boundary_multiplier)?;
        sol.boundary_influence = Some((wide.origin - sol.origin).abs());
    }
    Ok(sol)
}

fn run_2d(
    specs: [&GSpec; 2],
    phi: &(dyn Fn(f64, f64) -> f64 + Sync),
    t: f64,
    grid: &PdeGrid,
    multiplier: f64,
) -> Result<PdeSolution> {
    let sig = [specs[0].sigma_max(), specs[1].sigma_max()];
    let sides = [grid.side(sig[0], t, multiplier), grid.side(sig[1], t, multiplier)];
    let (nx, ny) = (2 * sides[0] + 1, 2 * sides[1] + 1);
    let h = grid.h;
    let h2 = h * h;
    let mut u: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| phi(((k / ny) as f64 - sides[0] as f64) * h, ((k % ny) as f64 - sides[1] as f64) * h))
        .collect();
    let (lo, hi) = bounds(&u)?;
    let (tau, steps, cfl) = grid.schedule(sig[0] * sig[0] + sig[1] * sig[1], t)?;
    let mut next = u.clone();
    for _ in 0..steps {
        let src = &u;
        next.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            let here = &src[i * ny..(i + 1) * ny];
            for (j, out) in row.iter_mut().enumerate() {
                let dxx = if i == 0 || i + 1 == nx {
                    0.0
                } else {
                    (src[(i - 1) * ny + j] + src[(i + 1) * ny + j]) - 2.0 * here[j]
                };
                let dyy = second_difference(here, j);
                *out = here[j] + tau * (g_function(specs[0], dxx / h2) + g_function(specs[1], dyy / h2));
            }
        });
        std::mem::swap(&mut u, &mut next);
    }
    let ok = within(&u, lo, hi);
    Ok(PdeSolution {
        terminal_time: t,
        half_range: vec![sides[0] as f64 * h, sides[1] as f64 * h],
        points: vec![nx, ny],
        h,
        tau,
        steps,
        cfl_ratio: cfl,
        boundary: "neumann-copy-gradient".into(),
        origin: u[sides[0] * ny + sides[1]],
        values: u,
        data_min: lo,
        data_max: hi,
        max_principle_ok: ok,
        boundary_influence: None,
    })
}

/// Solves `∂_t u = G₁(u_xx) + G₂(u_yy)`, `u(0, ·) = φ`, up to time `t`.
pub fn solve_gheat_2d_separable(
    spec_x: &GSpec,
    spec_y: &GSpec,
    phi: impl Fn(f64, f64) -> f64 + Sync,
    t: f64,
    grid: &PdeGrid,
) -> Result<PdeSolution> {
    grid.validate()?;
    check_horizon(t)?;
    let mut sol = run_2d([spec_x, spec_y], &phi, t, grid, grid.range_multiplier)?;
    if grid.boundary_check {
        let wide = run_2d([spec_x, spec_y], &phi, t, grid, grid.boundary_multiplier)?;
        sol.boundary_influence = Some((wide.origin - sol.origin).abs());
    }
    Ok(sol)
}

/// `u(t, 0)` for the data `a x²`: `u = a x² + G(2a) t`, i.e. `(a⁺σ̄² − a⁻σ̲²) t`.
pub fn analytic_quadratic(spec: &GSpec, a: f64, t: f64) -> f64 {
    g_function(spec, 2.0 * a) * t
}
