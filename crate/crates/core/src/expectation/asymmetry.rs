//! Exhaustive search for a family under which independence holds in one
//! direction only.
//!
//! The sample space is `{0,1} x {0,1}`, `X` is the first coordinate and `Y`
//! the second. Candidate laws put weights `k/d` on the four points; candidate
//! families are unordered pairs of distinct laws. Test functions are all point
//! tables with values in `{-1, 0, 1}`.

use serde::Serialize;

use super::{DiscreteLaw, RandomVector, ScenarioFamily, TestFunction};
use crate::error::{Error, Result};

const POINTS: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSpace {
    /// Weights are multiples of `1 / weight_denominator`.
    pub weight_denominator: u32,
    /// Restrict to one-law (linear) families.
    pub singleton_only: bool,
    /// Minimal failing gap for a witness.
    pub min_gap: f64,
    /// Tolerance for the direction that must hold.
    pub hold_tol: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self { weight_denominator: 4, singleton_only: false, min_gap: 0.05, hold_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `Ê[φ(X,Y)] = Ê[Ê[φ(x,Y)]_{x=X}]`.
    YFromX,
    /// `Ê[φ(X,Y)] = Ê[Ê[φ(X,y)]_{y=Y}]`.
    XFromY,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub family: ScenarioFamily,
    pub x: RandomVector,
    pub y: RandomVector,
    pub phi: TestFunction,
    pub phi_table: [f64; 4],
    pub holding: Direction,
    pub gap: f64,
    pub families_searched: usize,
}

#[derive(Debug, Clone)]
pub enum AsymmetryOutcome {
    Witness(Box<Witness>),
    NoWitness { families_searched: usize },
}

impl AsymmetryOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Self::Witness(w) => Some(w),
            Self::NoWitness { .. } => None,
        }
    }
}

fn simplex_weights(d: u32) -> Vec<[f64; 4]> {
    let mut out = Vec::new();
    for a in 0..=d {
        for b in 0..=d - a {
            for c in 0..=d - a - b {
                let e = d - a - b - c;
                let f = |k: u32| k as f64 / d as f64;
                out.push([f(a), f(b), f(c), f(e)]);
            }
        }
    }
    out
}

fn expect(laws: &[[f64; 4]], f: impl Fn(usize) -> f64) -> f64 {
    laws.iter().map(|w| (0..4).map(|i| w[i] * f(i)).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
}

/// Gaps of both independence identities for the point table `phi` (index `2x + y`).
fn direction_gaps(laws: &[[f64; 4]], phi: &[f64; 4]) -> (f64, f64) {
    let lhs = expect(laws, |i| phi[i]);
    let psi = [0, 1].map(|x| expect(laws, |i| phi[2 * x + (i & 1)]));
    let rhs_y = expect(laws, |i| psi[i >> 1]);
    let chi = [0, 1].map(|y| expect(laws, |i| phi[(i & 2) + y]));
    let rhs_x = expect(laws, |i| chi[i & 1]);
    ((lhs - rhs_y).abs(), (lhs - rhs_x).abs())
}

pub fn demo_independence_asymmetry(space: &SearchSpace) -> Result<AsymmetryOutcome> {
    if space.weight_denominator == 0 {
        return Err(Error::InvalidArgument("weight denominator must be positive".into()));
    }
    let laws = simplex_weights(space.weight_denominator);
    let battery: Vec<[f64; 4]> = (0..81)
        .map(|mut code| {
            let mut t = [0.0; 4];
            for v in t.iter_mut() {
                *v = (code % 3) as f64 - 1.0;
                code /= 3;
            }
            t
        })
        .collect();

    let mut candidates: Vec<Vec<[f64; 4]>> = Vec::new();
    if space.singleton_only {
        candidates.extend(laws.iter().map(|l| vec![*l]));
    } else {
        for i in 0..laws.len() {
            for j in i + 1..laws.len() {
                candidates.push(vec![laws[i], laws[j]]);
            }
        }
    }

    let mut best: Option<(usize, [f64; 4], Direction, f64)> = None;
    for (c, fam) in candidates.iter().enumerate() {
        let gaps: Vec<(f64, f64)> = battery.iter().map(|phi| direction_gaps(fam, phi)).collect();
        let y_holds = gaps.iter().all(|g| g.0 <= space.hold_tol);
        let x_holds = gaps.iter().all(|g| g.1 <= space.hold_tol);
        let found = match (y_holds, x_holds) {
            (true, false) => Some((Direction::YFromX, 1)),
            (false, true) => Some((Direction::XFromY, 0)),
            _ => None,
        };
        if let Some((dir, failing)) = found {
            for (phi, g) in battery.iter().zip(&gaps) {
                let gap = if failing == 1 { g.1 } else { g.0 };
                if gap >= space.min_gap && best.is_none_or(|b| gap > b.3 + 1e-12) {
                    best = Some((c, *phi, dir, gap));
                }
            }
        }
    }

    let families_searched = candidates.len();
    let Some((c, table, holding, gap)) = best else {
        return Ok(AsymmetryOutcome::NoWitness { families_searched });
    };
    let family = ScenarioFamily::new(
        candidates[c]
            .iter()
            .map(|w| DiscreteLaw::from_points(&POINTS.map(|p| p.to_vec()), w.to_vec()))
            .collect::<Result<Vec<_>>>()?,
        "asymmetry witness",
    )?;
    let phi = point_table_function(table);
    Ok(AsymmetryOutcome::Witness(Box::new(Witness {
        family,
        x: RandomVector::coordinates(2, &[0])?,
        y: RandomVector::coordinates(2, &[1])?,
        phi,
        phi_table: table,
        holding,
        gap,
        families_searched,
    })))
}

/// The function on `{0,1}^2` with `f(x, y) = table[2x + y]`, Lipschitz-extended bilinearly.
pub fn point_table_function(table: [f64; 4]) -> TestFunction {
    let label = format!("table{table:?}");
    let lip = 2.0 * table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    TestFunction::new(2, label, move |v| {
        let (x, y) = (v[0].clamp(0.0, 1.0), v[1].clamp(0.0, 1.0));
        (1.0 - x) * (1.0 - y) * table[0]
            + (1.0 - x) * y * table[1]
            + x * (1.0 - y) * table[2]
            + x * y * table[3]
    })
    .with_constants(lip, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::check_independence;

    #[test]
    fn linear_families_have_no_witness() {
        let space = SearchSpace { singleton_only: true, ..Default::default() };
        let out = demo_independence_asymmetry(&space).unwrap();
        assert!(matches!(out, AsymmetryOutcome::NoWitness { families_searched: 35 }));
    }

    #[test]
    fn default_space_has_witness_confirmed_by_checker() {
        let out = demo_independence_asymmetry(&SearchSpace::default()).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.gap >= 0.05);
        let tests = [w.phi.clone()];
        let yx = check_independence(&w.family, &w.x, &w.y, &tests, None, 1e-9).unwrap();
        let swapped = TestFunction::new(2, "swapped", {
            let phi = w.phi.clone();
            move |v| phi.eval(&[v[1], v[0]])
        });
        let xy = check_independence(&w.family, &w.y, &w.x, &[swapped], None, 1e-9).unwrap();
        let (holds, fails) = match w.holding {
            Direction::YFromX => (yx, xy),
            Direction::XFromY => (xy, yx),
        };
        assert!(holds.independent);
        assert!(!fails.independent);
        assert!((fails.max_gap - w.gap).abs() < 1e-12);
    }
}
