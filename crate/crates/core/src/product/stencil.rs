//! Lattice projection of one-step kernels and their application along a
//! tensor axis.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expectation::{DiscreteLaw, ScenarioFamily};

const SNAP: f64 = 1e-9;

/// Weights `weights[j]` at grid offsets `offset + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub offset: i64,
    pub weights: Vec<f64>,
}

impl Stencil {
    fn end(&self) -> i64 {
        self.offset + self.weights.len() as i64
    }

    fn variance(&self, h: f64) -> f64 {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (j, w) in self.weights.iter().enumerate() {
            let x = (self.offset + j as i64) as f64 * h;
            m1 += w * x;
            m2 += w * x * x;
        }
        m2 - m1 * m1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionStats {
    /// Smallest node rescaling factor applied.
    pub min_scale: f64,
    /// Largest projected-minus-true variance left after rescaling.
    pub max_excess_variance: f64,
}

impl Default for ProjectionStats {
    fn default() -> Self {
        Self { min_scale: 1.0, max_excess_variance: 0.0 }
    }
}

impl ProjectionStats {
    pub fn merge(&mut self, other: ProjectionStats) {
        self.min_scale = self.min_scale.min(other.min_scale);
        self.max_excess_variance = self.max_excess_variance.max(other.max_excess_variance);
    }
}

/// Linear-interpolation projection of a scalar law onto the lattice `hZ`
/// after rescaling its nodes about the mean by `scale`.
fn project(law: &DiscreteLaw, h: f64, mean: f64, scale: f64) -> Stencil {
    let mut pieces: Vec<(i64, f64)> = Vec::with_capacity(2 * law.len());
    for (x, w) in law.iter() {
        let u = (mean + scale * (x[0] - mean)) / h;
        let mut k = u.floor();
        let mut theta = u - k;
        if theta < SNAP {
            theta = 0.0;
        } else if theta > 1.0 - SNAP {
            k += 1.0;
            theta = 0.0;
        }
        let k = k as i64;
        pieces.push((k, w * (1.0 - theta)));
        if theta > 0.0 {
            pieces.push((k + 1, w * theta));
        }
    }
    let lo = pieces.iter().map(|p| p.0).min().unwrap_or(0);
    let hi = pieces.iter().map(|p| p.0).max().unwrap_or(0);
    let mut weights = vec![0.0; (hi - lo + 1) as usize];
    for (k, w) in pieces {
        weights[(k - lo) as usize] += w;
    }
    let first = weights.iter().position(|w| *w != 0.0).unwrap_or(0);
    let last = weights.iter().rposition(|w| *w != 0.0).unwrap_or(0);
    Stencil { offset: lo + first as i64, weights: weights[first..=last].to_vec() }
}

/// Projects `law`, choosing the rescaling so the projected variance equals
/// the true one whenever that is attainable.
pub fn project_law(law: &DiscreteLaw, h: f64, moment_matching: bool) -> (Stencil, ProjectionStats) {
    let mean = law.mean()[0];
    let var = law.expect(|x| (x[0] - mean) * (x[0] - mean)).max(0.0);
    let excess = |c: f64| {
        let s = project(law, h, mean, c);
        let v = s.variance(h) - var;
        (s, v)
    };
    let (s1, e1) = excess(1.0);
    let tol = 1e-13 * h * h;
    if !moment_matching || e1 <= tol {
        return (s1, ProjectionStats { min_scale: 1.0, max_excess_variance: e1.max(0.0) });
    }
    let (s0, e0) = excess(0.0);
    if e0 >= 0.0 {
        return (s0, ProjectionStats { min_scale: 0.0, max_excess_variance: e0 });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = (s1, e1);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (s, e) = excess(mid);
        if e.abs() <= tol {
            hi = mid;
            best = (s, e.max(0.0));
            break;
        }
        if e > 0.0 {
            hi = mid;
            best = (s, e);
        } else {
            lo = mid;
        }
    }
    (best.0, ProjectionStats { min_scale: hi, max_excess_variance: best.1.max(0.0) })
}

/// `V ↦ max_law Σ w V(· + offset)` along one axis with clamped boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOperator {
    pub stencils: Vec<Stencil>,
}

impl AxisOperator {
    pub fn from_family(
        family: &ScenarioFamily,
        h: f64,
        moment_matching: bool,
    ) -> Result<(Self, ProjectionStats)> {
        if family.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: family.dim() });
        }
        let mut stats = ProjectionStats::default();
        let mut stencils: Vec<Stencil> = Vec::with_capacity(family.len());
        for law in family.laws() {
            let (s, st) = project_law(law, h, moment_matching);
            stats.merge(st);
            if !stencils.contains(&s) {
                stencils.push(s);
            }
        }
        Ok((Self { stencils }, stats))
    }

    /// Number of multiply-adds per output value.
    pub fn work(&self) -> usize {
        self.stencils.iter().map(|s| s.weights.len()).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.stencils.len() == 1 && self.stencils[0].offset == 0 && self.stencils[0].weights == [1.0]
    }

    fn apply_line(&self, line: &mut [f64], pad: &mut Vec<f64>, out: &mut Vec<f64>) {
        let len = line.len() as i64;
        let left = (-self.stencils.iter().map(|s| s.offset).min().unwrap_or(0)).max(0);
        let right = (self.stencils.iter().map(Stencil::end).max().unwrap_or(1) - 1).max(0);
        pad.clear();
        pad.extend(std::iter::repeat_n(line[0], left as usize));
        pad.extend_from_slice(line);
        pad.extend(std::iter::repeat_n(line[line.len() - 1], right as usize));
        out.clear();
        out.resize(line.len(), f64::NEG_INFINITY);
        for s in &self.stencils {
            let start = (s.offset + left) as usize;
            for g in 0..len as usize {
                let window = &pad[g + start..g + start + s.weights.len()];
                // Anchored at the first entry so constants pass through exactly.
                let a0 = window[0];
                let v = a0 + window[1..].iter().zip(&s.weights[1..]).map(|(a, w)| w * (a - a0)).sum::<f64>();
                if v > out[g] {
                    out[g] = v;
                }
            }
        }
        line.copy_from_slice(out);
    }

    /// Applies the operator along `axis` of a row-major tensor.
    pub fn apply(&self, data: &mut [f64], shape: &[usize], axis: usize) {
        if self.is_identity() {
            return;
        }
        let len = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        if inner == 1 {
            data.par_chunks_mut(len).for_each_init(
                || (Vec::new(), Vec::new()),
                |(pad, out), line| self.apply_line(line, pad, out),
            );
            return;
        }
        let block = len * inner;
        let src = data.to_vec();
        let last = len as i64 - 1;
        data.par_chunks_mut(inner).enumerate().for_each_init(
            || vec![0.0; inner],
            |acc, (r, row)| {
                let (o, g) = (r / len, (r % len) as i64);
                let base = o * block;
                let row_at = |j: i64| {
                    let idx = j.clamp(0, last) as usize;
                    &src[base + idx * inner..base + (idx + 1) * inner]
                };
                for (k, s) in self.stencils.iter().enumerate() {
                    let first = row_at(g + s.offset);
                    acc.copy_from_slice(first);
                    for (j, w) in s.weights.iter().enumerate().skip(1) {
                        let srow = row_at(g + s.offset + j as i64);
                        for ((a, v), v0) in acc.iter_mut().zip(srow).zip(first) {
                            *a += w * (v - v0);
                        }
                    }
                    if k == 0 {
                        row.copy_from_slice(acc);
                    } else {
                        for (r, a) in row.iter_mut().zip(acc.iter()) {
                            if *a > *r {
                                *r = *a;
                            }
                        }
                    }
                }
            },
        );
    }
}
