use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expectation::TestFunction;
use crate::time::{format_time, Time};

/// A bounded Lipschitz function of the joint process at finitely many times.
///
/// The test function takes `2m` arguments ordered `(x1, y1, x2, y2, …)`,
/// where `xk`/`yk` are the values of the first/second process at `t_k`.
#[derive(Debug, Clone)]
pub struct CylinderFunctional {
    times: Vec<Time>,
    phi: TestFunction,
    uses: Vec<[bool; 2]>,
}

impl CylinderFunctional {
    /// A functional assumed to depend on every argument.
    pub fn new(times: Vec<Time>, phi: TestFunction) -> Result<Self> {
        let uses = vec![[true, true]; times.len()];
        Self::with_uses(times, phi, uses)
    }

    /// `uses[k][c]` declares whether `phi` reads coordinate `c` at time `t_k`.
    /// Undeclared arguments are fed zeros.
    pub fn with_uses(times: Vec<Time>, phi: TestFunction, uses: Vec<[bool; 2]>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("a functional needs at least one time".into()));
        }
        if phi.dim() != 2 * times.len() {
            return Err(Error::DimensionMismatch { expected: 2 * times.len(), got: phi.dim() });
        }
        if uses.len() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: uses.len() });
        }
        if times[0] < Time::zero() {
            return Err(Error::InvalidArgument(format!(
                "negative observation time {}",
                format_time(times[0])
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "observation times must increase strictly: {} then {}",
                format_time(w[0]),
                format_time(w[1])
            )));
        }
        Ok(Self { times, phi, uses })
    }

    pub fn constant(c: f64) -> Self {
        let phi = TestFunction::constant(2, c);
        Self { times: vec![Time::from_integer(1)], phi, uses: vec![[false, false]] }
    }

    pub fn times(&self) -> &[Time] {
        &self.times
    }

    pub fn phi(&self) -> &TestFunction {
        &self.phi
    }

    pub fn uses(&self) -> &[[bool; 2]] {
        &self.uses
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn label(&self) -> &str {
        self.phi.label()
    }

    /// Whether any argument of coordinate `c` is read.
    pub fn touches(&self, c: usize) -> bool {
        self.uses.iter().any(|u| u[c])
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        self.phi.eval(args)
    }

    /// Same function at other times (used when moving to dyadic approximants).
    pub fn retimed(&self, times: Vec<Time>) -> Result<Self> {
        Self::with_uses(times, self.phi.clone(), self.uses.clone())
    }

    pub fn negate(&self) -> Self {
        Self { times: self.times.clone(), phi: self.phi.negate(), uses: self.uses.clone() }
    }

    /// Samples the box `[-half, half]^{2m}` on a Halton sequence and checks
    /// the recorded bound and Lipschitz constant (1-norm).
    pub fn check_constants(&self, half: f64, samples: usize) -> Result<()> {
        let d = self.phi.dim();
        let point = |i: usize| -> Vec<f64> {
            (0..d).map(|k| half * (2.0 * halton(i + 1, PRIMES[k % PRIMES.len()]) - 1.0)).collect()
        };
        let mut prev: Option<(Vec<f64>, f64)> = None;
        for i in 0..samples {
            let p = point(i);
            let v = self.eval(&p);
            if let Some(k) = self.phi.bound() {
                if v.abs() > k * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "|phi| = {v} exceeds recorded bound {k} at {p:?}"
                    )));
                }
            }
            if let Some(l) = self.phi.lipschitz() {
                // A far pair (the previous sample) and a near one along one axis.
                let mut near = p.clone();
                near[i % d] += 1e-3 * half;
                let pairs =
                    prev.iter().map(|(q, w)| (q.clone(), *w)).chain([(near.clone(), self.eval(&near))]);
                for (q, w) in pairs {
                    let dist: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
                    if dist > 0.0 && (v - w).abs() / dist > l * (1.0 + 1e-6) + 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "difference quotient {} exceeds recorded Lipschitz constant {l}",
                            (v - w).abs() / dist
                        )));
                    }
                }
            }
            prev = Some((p, v));
        }
        Ok(())
    }
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
