use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::QuadratureSpec;

/// Order of the two one-dimensional sups inside a fine step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NestingOrder {
    /// Inner expectation over the second process, outer over the first.
    #[default]
    NInner,
    /// Flipped order, for diagnostics only.
    MInner,
}

/// Discretisation parameters of the lattice recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSpec {
    pub quadrature: QuadratureSpec,
    /// Points per running axis (odd). `None` picks 201, 101 or 61 for
    /// segments with at most 2, 3 or more active axes.
    pub running_points: Option<usize>,
    /// Points per past-observation axis (odd).
    pub observation_points: usize,
    /// Axis half-width is `range_multiplier * sigma_bar * max(1, sqrt(horizon))`.
    pub range_multiplier: f64,
    /// Explicit half-width for every axis; must cover `4 * sigma_bar * sqrt(horizon)`.
    pub half_range: Option<f64>,
    /// Terminal values are clamped to `[-R, R]` when set.
    pub clamp_radius: Option<f64>,
    /// Rescale kernel laws so their lattice projection keeps the exact variance.
    pub moment_matching: bool,
    pub nesting: NestingOrder,
    pub max_level: u32,
    /// Largest value tensor (number of doubles) the engine may allocate.
    pub max_tensor_len: usize,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            running_points: None,
            observation_points: 21,
            range_multiplier: 6.0,
            half_range: None,
            clamp_radius: None,
            moment_matching: true,
            nesting: NestingOrder::NInner,
            max_level: 12,
            max_tensor_len: 1 << 25,
        }
    }
}

impl NumericsSpec {
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        for (name, count) in
            [("running", self.running_points), ("observation", Some(self.observation_points))]
        {
            if let Some(c) = count {
                if c < 3 || c % 2 == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "{name} point count must be odd and at least 3, got {c}"
                    )));
                }
            }
        }
        if !(self.range_multiplier >= 4.0 && self.range_multiplier.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "range multiplier must be at least 4, got {}",
                self.range_multiplier
            )));
        }
        if let Some(h) = self.half_range {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("invalid half range {h}")));
            }
        }
        if let Some(r) = self.clamp_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("clamp radius must be positive, got {r}")));
            }
        }
        Ok(())
    }

    /// Running-axis count for a segment with `active_axes` live axes.
    pub fn running_count(&self, active_axes: usize) -> usize {
        self.running_points.unwrap_or(match active_axes {
            0..=2 => 201,
            3 => 101,
            _ => 61,
        })
    }

    /// Half-width of the axes of a coordinate with increment scale `sigma_bar`.
    pub fn half_width(&self, sigma_bar: f64, horizon: f64) -> Result<f64> {
        let spread = sigma_bar * horizon.max(0.0).sqrt();
        match self.half_range {
            Some(h) if h < 4.0 * spread => Err(Error::InvalidArgument(format!(
                "half range {h} does not cover 4 sigma_bar sqrt(horizon) = {}",
                4.0 * spread
            ))),
            Some(h) => Ok(h),
            None if sigma_bar == 0.0 => Ok(1.0),
            None => Ok(self.range_multiplier * sigma_bar * horizon.sqrt().max(1.0)),
        }
    }
}
