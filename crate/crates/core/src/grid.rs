//! Uniform axes and multilinear value grids.

use crate::error::{Error, Result};

/// `count` equally spaced points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    lo: f64,
    hi: f64,
    count: usize,
}

impl UniformAxis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!("an axis needs at least 2 points, got {count}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("axis range [{lo}, {hi}] is empty or non-finite")));
        }
        Ok(Self { lo, hi, count })
    }

    /// Symmetric axis on `[-half, half]`; `count` must be odd so that 0 is a node.
    pub fn symmetric(half: f64, count: usize) -> Result<Self> {
        if count.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "symmetric axes need an odd point count, got {count}"
            )));
        }
        Self::new(-half, half, count)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    pub fn center(&self) -> usize {
        (self.count - 1) / 2
    }

    pub fn covers(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Cell index and fractional offset of `x`, clamped to the axis.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        if x <= self.lo {
            return (0, 0.0);
        }
        if x >= self.hi {
            return (self.count - 2, 1.0);
        }
        let u = (x - self.lo) / self.spacing();
        let i = (u.floor() as usize).min(self.count - 2);
        (i, (u - i as f64).clamp(0.0, 1.0))
    }
}

/// Values stored on a rectangular grid, read back by clamped multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    axes: Vec<UniformAxis>,
    values: Vec<f64>,
}

impl ValueGrid {
    pub fn new(axes: Vec<UniformAxis>, values: Vec<f64>) -> Result<Self> {
        let len: usize = axes.iter().map(UniformAxis::len).product();
        if axes.is_empty() || len != values.len() {
            return Err(Error::InvalidArgument(format!(
                "value grid expects {len} values over {} axes, got {}",
                axes.len(),
                values.len()
            )));
        }
        Ok(Self { axes, values })
    }

    /// Tabulates `f` at every grid node (row-major, last axis fastest).
    pub fn from_fn(axes: Vec<UniformAxis>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let len: usize = axes.iter().map(UniformAxis::len).product();
        let mut point = vec![0.0; axes.len()];
        let mut values = Vec::with_capacity(len);
        for flat in 0..len {
            let mut rem = flat;
            for (d, axis) in axes.iter().enumerate().rev() {
                point[d] = axis.point(rem % axis.len());
                rem /= axis.len();
            }
            values.push(f(&point));
        }
        Self::new(axes, values)
    }

    pub fn axes(&self) -> &[UniformAxis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether every coordinate of `x` lies inside the grid box.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &v)| a.covers(v))
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.axes.len());
        let d = self.axes.len();
        let mut base = 0usize;
        let mut strides = vec![0usize; d];
        let mut stride = 1usize;
        for k in (0..d).rev() {
            strides[k] = stride;
            stride *= self.axes[k].len();
        }
        let mut cells = Vec::with_capacity(d);
        for (k, axis) in self.axes.iter().enumerate() {
            let (i, t) = axis.locate(x[k]);
            base += i * strides[k];
            cells.push(t);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    w *= cells[k];
                    idx += strides[k];
                } else {
                    w *= 1.0 - cells[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes() {
        let ax = UniformAxis::new(-1.0, 1.0, 5).unwrap();
        let ay = UniformAxis::new(0.0, 2.0, 3).unwrap();
        let g = ValueGrid::from_fn(vec![ax, ay], |p| p[0].sin() + p[1] * p[1]).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let p = [ax.point(i), ay.point(j)];
                assert_eq!(g.interpolate(&p), p[0].sin() + p[1] * p[1]);
            }
        }
    }

    #[test]
    fn clamps_outside() {
        let ax = UniformAxis::new(0.0, 1.0, 2).unwrap();
        let g = ValueGrid::new(vec![ax], vec![1.0, 3.0]).unwrap();
        assert_eq!(g.interpolate(&[-5.0]), 1.0);
        assert_eq!(g.interpolate(&[5.0]), 3.0);
        assert_eq!(g.interpolate(&[0.25]), 1.5);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(UniformAxis::new(0.0, 1.0, 1).is_err());
        assert!(UniformAxis::new(1.0, 1.0, 3).is_err());
        assert!(UniformAxis::symmetric(1.0, 4).is_err());
        assert_eq!(UniformAxis::symmetric(2.0, 5).unwrap().point(2), 0.0);
    }

    proptest! {
        #[test]
        fn interpolant_stays_within_stored_range(
            vals in proptest::collection::vec(-10.0f64..10.0, 12),
            x in -2.0f64..2.0, y in -2.0f64..2.0,
        ) {
            let ax = UniformAxis::new(-1.0, 1.0, 4).unwrap();
            let ay = UniformAxis::new(-1.0, 1.0, 3).unwrap();
            let g = ValueGrid::new(vec![ax, ay], vals).unwrap();
            let v = g.interpolate(&[x, y]);
            prop_assert!(v >= g.min() - 1e-12 && v <= g.max() + 1e-12);
        }
    }
}
