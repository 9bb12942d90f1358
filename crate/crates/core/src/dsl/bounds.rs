use std::f64::consts::{FRAC_PI_2, PI};

use super::parse::{Expr, Func, EXP_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Self::new(
            p.iter().copied().fold(f64::INFINITY, f64::min),
            p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn scale(self, c: f64) -> Self {
        self.mul(Self::point(c))
    }

    fn hull(self, o: Self) -> Self {
        Self::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    fn powi(self, n: u32) -> Self {
        let (a, b) = (self.lo.powi(n as i32), self.hi.powi(n as i32));
        if n % 2 == 1 {
            Self::new(a, b)
        } else if self.contains_zero() {
            Self::new(0.0, a.max(b))
        } else {
            Self::new(a.min(b), a.max(b))
        }
    }

    fn sin(self) -> Self {
        if self.hi - self.lo >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let hits = |peak: f64| {
            let k = ((self.lo - peak) / (2.0 * PI)).ceil();
            peak + 2.0 * PI * k <= self.hi
        };
        let (a, b) = (self.lo.sin(), self.hi.sin());
        Self::new(
            if hits(-FRAC_PI_2) { -1.0 } else { a.min(b) },
            if hits(FRAC_PI_2) { 1.0 } else { a.max(b) },
        )
    }

    fn cos(self) -> Self {
        Self::new(self.lo + FRAC_PI_2, self.hi + FRAC_PI_2).sin()
    }
}

/// Value range and per-variable gradient ranges of an expression over a box.
#[derive(Debug, Clone)]
struct Enclosure {
    value: Interval,
    grad: Vec<Interval>,
}

impl Enclosure {
    fn constant(v: f64, dim: usize) -> Self {
        Self { value: Interval::point(v), grad: vec![Interval::point(0.0); dim] }
    }

    fn map_grad(mut self, f: impl Fn(Interval) -> Interval) -> Self {
        self.grad.iter_mut().for_each(|g| *g = f(*g));
        self
    }

    /// Smooth unary function with value range `value` and derivative range `slope`.
    fn chain(self, value: Interval, slope: Interval) -> Self {
        Self { value, ..self }.map_grad(|g| g.mul(slope))
    }

    /// Either branch may be active where the ranges overlap: hull of both gradients.
    fn select(a: Self, b: Self, a_wins: bool, b_wins: bool, value: Interval) -> Self {
        if a_wins {
            Self { value, grad: a.grad }
        } else if b_wins {
            Self { value, grad: b.grad }
        } else {
            let grad = a.grad.iter().zip(&b.grad).map(|(x, y)| x.hull(*y)).collect();
            Self { value, grad }
        }
    }

    fn min(a: Self, b: Self) -> Self {
        let value = Interval::new(a.value.lo.min(b.value.lo), a.value.hi.min(b.value.hi));
        let (a_wins, b_wins) = (a.value.hi < b.value.lo, b.value.hi < a.value.lo);
        Self::select(a, b, a_wins, b_wins, value)
    }

    fn max(a: Self, b: Self) -> Self {
        let value = Interval::new(a.value.lo.max(b.value.lo), a.value.hi.max(b.value.hi));
        let (a_wins, b_wins) = (a.value.lo > b.value.hi, b.value.lo > a.value.hi);
        Self::select(a, b, a_wins, b_wins, value)
    }
}

fn enclose(e: &Expr, bx: &[Interval]) -> Enclosure {
    let dim = bx.len();
    match e {
        Expr::Const(c) => Enclosure::constant(*c, dim),
        Expr::Var(i) => {
            let mut out = Enclosure::constant(0.0, dim);
            out.value = bx[*i];
            out.grad[*i] = Interval::point(1.0);
            out
        }
        Expr::Neg(a) => {
            let a = enclose(a, bx);
            Enclosure { value: a.value.neg(), ..a }.map_grad(Interval::neg)
        }
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            let (l, mut r) = (enclose(l, bx), enclose(r, bx));
            if matches!(e, Expr::Sub(..)) {
                r = Enclosure { value: r.value.neg(), ..r }.map_grad(Interval::neg);
            }
            let grad = l.grad.iter().zip(&r.grad).map(|(a, b)| a.add(*b)).collect();
            Enclosure { value: l.value.add(r.value), grad }
        }
        Expr::Mul(l, r) => {
            let (l, r) = (enclose(l, bx), enclose(r, bx));
            let grad =
                l.grad.iter().zip(&r.grad).map(|(gl, gr)| gl.mul(r.value).add(l.value.mul(*gr))).collect();
            Enclosure { value: l.value.mul(r.value), grad }
        }
        Expr::Div(a, c) => {
            let a = enclose(a, bx);
            Enclosure { value: a.value.scale(1.0 / c), ..a }.map_grad(|g| g.scale(1.0 / c))
        }
        Expr::Pow(a, n) => {
            let a = enclose(a, bx);
            match n {
                0 => Enclosure::constant(1.0, dim),
                _ => {
                    let slope = a.value.powi(n - 1).scale(*n as f64);
                    let value = a.value.powi(*n);
                    a.chain(value, slope)
                }
            }
        }
        Expr::Call(f, args) => {
            let mut encs: Vec<Enclosure> = args.iter().map(|a| enclose(a, bx)).collect();
            match f {
                Func::Min => encs.into_iter().reduce(Enclosure::min).expect("arity checked"),
                Func::Max => encs.into_iter().reduce(Enclosure::max).expect("arity checked"),
                Func::Clamp => {
                    let hi = encs.pop().expect("arity");
                    let lo = encs.pop().expect("arity");
                    let x = encs.pop().expect("arity");
                    Enclosure::min(Enclosure::max(x, lo), hi)
                }
                Func::Abs => {
                    let a = encs.pop().expect("arity");
                    let v = a.value;
                    if v.lo >= 0.0 {
                        a
                    } else if v.hi <= 0.0 {
                        Enclosure { value: v.neg(), ..a }.map_grad(Interval::neg)
                    } else {
                        let value = Interval::new(0.0, v.mag());
                        a.chain(value, Interval::new(-1.0, 1.0))
                    }
                }
                Func::Sin => {
                    let a = encs.pop().expect("arity");
                    let (value, slope) = (a.value.sin(), a.value.cos());
                    a.chain(value, slope)
                }
                Func::Cos => {
                    let a = encs.pop().expect("arity");
                    let (value, slope) = (a.value.cos(), a.value.sin().neg());
                    a.chain(value, slope)
                }
                Func::Exp => {
                    let a = encs.pop().expect("arity");
                    let v = a.value;
                    let c = Interval::new(v.lo.clamp(-EXP_CAP, EXP_CAP), v.hi.clamp(-EXP_CAP, EXP_CAP));
                    let value = Interval::new(c.lo.exp(), c.hi.exp());
                    let slope = if v.lo >= -EXP_CAP && v.hi <= EXP_CAP {
                        value
                    } else if v.hi < -EXP_CAP || v.lo > EXP_CAP {
                        Interval::point(0.0)
                    } else {
                        value.hull(Interval::point(0.0))
                    };
                    a.chain(value, slope)
                }
            }
        }
    }
}

/// Conservative `(L, K)` over the box: `L` bounds the gradient 1-norm (so
/// `|e(p) - e(q)| <= L |p - q|_1`) and `K` bounds `|e|`.
pub fn estimate_lipschitz_bound(e: &Expr, bx: &[Interval]) -> Result<(f64, f64)> {
    if bx.iter().any(|i| !(i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi)) {
        return Err(Error::InvalidArgument("bounding box must be finite and non-empty".into()));
    }
    let enc = enclose(e, bx);
    let l: f64 = enc.grad.iter().map(|g| g.mag()).sum();
    let k = enc.value.mag();
    if !(l.is_finite() && k.is_finite()) {
        return Err(Error::NonFinite("interval bound".into()));
    }
    // Outward margin for rounding in the interval arithmetic.
    let pad = |v: f64| v * (1.0 + 1e-12) + 1e-300;
    Ok((pad(l), pad(k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Growth {
    Bounded,
    Linear,
    Superlinear,
}

/// Growth of an expression towards `+∞` and towards `-∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthPair {
    pub up: Growth,
    pub down: Growth,
}

impl GrowthPair {
    fn both(g: Growth) -> Self {
        Self { up: g, down: g }
    }

    fn swap(self) -> Self {
        Self { up: self.down, down: self.up }
    }

    fn worst(self) -> Growth {
        self.up.max(self.down)
    }
}

fn times(a: Growth, b: Growth) -> Growth {
    use Growth::*;
    match (a, b) {
        (Bounded, g) | (g, Bounded) => g,
        _ => Superlinear,
    }
}

fn raise(g: Growth, n: u32) -> Growth {
    match (g, n) {
        (_, 0) => Growth::Bounded,
        (g, 1) => g,
        (Growth::Bounded, _) => Growth::Bounded,
        _ => Growth::Superlinear,
    }
}

pub fn growth(e: &Expr) -> GrowthPair {
    use Growth::*;
    match e {
        Expr::Const(_) => GrowthPair::both(Bounded),
        Expr::Var(_) => GrowthPair::both(Linear),
        Expr::Neg(a) => growth(a).swap(),
        Expr::Add(l, r) => {
            let (l, r) = (growth(l), growth(r));
            GrowthPair { up: l.up.max(r.up), down: l.down.max(r.down) }
        }
        Expr::Sub(l, r) => {
            let (l, r) = (growth(l), growth(r));
            GrowthPair { up: l.up.max(r.down), down: l.down.max(r.up) }
        }
        Expr::Mul(l, r) => GrowthPair::both(times(growth(l).worst(), growth(r).worst())),
        Expr::Div(a, c) => {
            let g = growth(a);
            if *c > 0.0 {
                g
            } else {
                g.swap()
            }
        }
        Expr::Pow(a, n) => {
            let g = growth(a);
            if n % 2 == 0 {
                GrowthPair { up: raise(g.worst(), *n), down: Bounded }
            } else {
                GrowthPair { up: raise(g.up, *n), down: raise(g.down, *n) }
            }
        }
        Expr::Call(f, args) => {
            let gs: Vec<GrowthPair> = args.iter().map(growth).collect();
            match f {
                Func::Min => GrowthPair {
                    up: gs.iter().map(|g| g.up).min().expect("arity"),
                    down: gs.iter().map(|g| g.down).max().expect("arity"),
                },
                Func::Max => GrowthPair {
                    up: gs.iter().map(|g| g.up).max().expect("arity"),
                    down: gs.iter().map(|g| g.down).min().expect("arity"),
                },
                Func::Clamp => {
                    let (x, lo, hi) = (gs[0], gs[1], gs[2]);
                    GrowthPair { up: x.up.max(lo.up).min(hi.up), down: x.down.min(lo.down).max(hi.down) }
                }
                Func::Abs => GrowthPair { up: gs[0].worst(), down: Bounded },
                Func::Sin | Func::Cos | Func::Exp => GrowthPair::both(Bounded),
            }
        }
    }
}

fn children(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Const(_) | Expr::Var(_) => Vec::new(),
        Expr::Neg(a) | Expr::Div(a, _) | Expr::Pow(a, _) => vec![a],
        Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => vec![l, r],
        Expr::Call(_, args) => args.iter().collect(),
    }
}

/// Smallest superlinear subtree on the path from a superlinear `e`.
fn offending(e: &Expr) -> &Expr {
    match children(e).into_iter().find(|c| growth(c).worst() == Growth::Superlinear) {
        Some(c) => offending(c),
        None => e,
    }
}

/// Rejects expressions that can grow faster than linearly in some direction.
pub fn check_growth(e: &Expr) -> Result<Growth> {
    let g = growth(e).worst();
    if g == Growth::Superlinear {
        return Err(Error::Unbounded(format!(
            "subexpression '{}' grows faster than linearly; wrap it in clamp, min or max",
            offending(e)
        )));
    }
    Ok(g)
}
