//! Exact rational times and dyadic grids.
//!
//! Times are carried as `Ratio<i64>`; membership in `D_n` is decided by
//! integer arithmetic only.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Time = Ratio<i64>;

pub const MAX_LEVEL: u32 = 40;

pub fn dyadic(k: i64, level: u32) -> Time {
    Ratio::new(k, 1i64 << level)
}

pub fn to_f64(t: Time) -> f64 {
    t.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"k/2^n"`, `"p/q"` or an integer.
pub fn parse_time(text: &str) -> Result<Time> {
    let s = text.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse time '{text}'"));
    match s.split_once('/') {
        None => s.parse::<i64>().map(Time::from_integer).map_err(|_| bad()),
        Some((num, den)) => {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim();
            let den: i64 = match den.split_once('^') {
                Some((base, exp)) => {
                    let base: i64 = base.trim().parse().map_err(|_| bad())?;
                    let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
                    base.checked_pow(exp).ok_or_else(bad)?
                }
                None => den.parse().map_err(|_| bad())?,
            };
            if den == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(num, den))
        }
    }
}

pub fn format_time(t: Time) -> String {
    format!("{}/{}", t.numer(), t.denom())
}

/// Number of level-`n` steps in `t`, or `None` when `t` is not in `D_n`.
pub fn steps_at(t: Time, level: u32) -> Option<i64> {
    let scaled = t * Time::from_integer(1i64 << level);
    scaled.is_integer().then(|| scaled.to_integer())
}

pub fn is_dyadic_at(t: Time, level: u32) -> bool {
    steps_at(t, level).is_some()
}

/// Smallest level-`level` dyadic rational `>= t`.
pub fn ceil_to_level(t: Time, level: u32) -> Time {
    let scaled = t * Time::from_integer(1i64 << level);
    dyadic(scaled.ceil().to_integer(), level)
}

/// The mesh `D_n ∩ [0, 1]` with `delta_n = 2^-n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "dyadic level must lie in 1..={MAX_LEVEL}, got {level}"
            )));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn delta(&self) -> Time {
        dyadic(1, self.level)
    }

    pub fn steps(&self) -> i64 {
        1i64 << self.level
    }

    pub fn points(&self) -> impl Iterator<Item = Time> + '_ {
        (0..=self.steps()).map(move |k| dyadic(k, self.level))
    }

    pub fn contains(&self, t: Time) -> bool {
        t >= Time::zero() && t <= Time::from_integer(1) && is_dyadic_at(t, self.level)
    }

    pub fn refine(&self) -> Result<Self> {
        Self::new(self.level + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_time_notations() {
        assert_eq!(parse_time("3/2^2").unwrap(), Ratio::new(3, 4));
        assert_eq!(parse_time("1/3").unwrap(), Ratio::new(1, 3));
        assert_eq!(parse_time(" 1 ").unwrap(), Time::from_integer(1));
        assert!(parse_time("1/0").is_err());
        assert!(parse_time("x").is_err());
    }

    #[test]
    fn ceil_approaches_from_above() {
        let third = Ratio::new(1, 3);
        assert_eq!(ceil_to_level(third, 5), Ratio::new(11, 32));
        assert_eq!(ceil_to_level(third, 8), Ratio::new(86, 256));
        assert_eq!(ceil_to_level(Ratio::new(1, 2), 3), Ratio::new(1, 2));
    }

    #[test]
    fn grids_are_nested() {
        for n in 1..8 {
            let g = DyadicGrid::new(n).unwrap();
            let fine = g.refine().unwrap();
            assert_eq!(g.delta(), dyadic(1, n));
            assert!(g.points().all(|t| fine.contains(t)));
            assert_eq!(g.points().count() as i64, g.steps() + 1);
        }
        let g = DyadicGrid::new(2).unwrap();
        assert!(!g.contains(Ratio::new(1, 8)));
        assert!(!g.contains(Ratio::new(5, 4)));
    }
}
