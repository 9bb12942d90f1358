use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The volatility set `Γ` of a one-dimensional G-Brownian motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSpec {
    sigma_min: f64,
    sigma_max: f64,
    /// Explicit finite `Γ`, used instead of the interval when present.
    finite: Option<Vec<f64>>,
}

impl GSpec {
    pub fn interval(sigma_min: f64, sigma_max: f64) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_max.is_finite() && 0.0 <= sigma_min && sigma_min <= sigma_max) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= sigma_min <= sigma_max < inf, got [{sigma_min}, {sigma_max}]"
            )));
        }
        Ok(Self { sigma_min, sigma_max, finite: None })
    }

    pub fn singleton(sigma: f64) -> Result<Self> {
        Self::interval(sigma, sigma)
    }

    pub fn finite(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() || sigmas.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("finite sigma set must be nonempty and finite".into()));
        }
        let abs: Vec<f64> = sigmas.iter().map(|s| s.abs()).collect();
        let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = abs.iter().copied().fold(0.0, f64::max);
        Ok(Self { sigma_min: lo, sigma_max: hi, finite: Some(abs) })
    }

    pub fn dim(&self) -> usize {
        1
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn finite_set(&self) -> Option<&[f64]> {
        self.finite.as_deref()
    }

    pub fn is_singleton(&self) -> bool {
        self.sigma_min == self.sigma_max
    }

    /// Volatilities used for kernels: the finite set, or `count` uniform
    /// samples of the interval including both endpoints.
    pub fn samples(&self, count: usize) -> Result<Vec<f64>> {
        if let Some(set) = &self.finite {
            return Ok(set.clone());
        }
        if self.is_singleton() {
            return Ok(vec![self.sigma_min]);
        }
        if count < 2 {
            return Err(Error::InvalidArgument(
                "a non-degenerate sigma interval needs at least 2 samples".into(),
            ));
        }
        let step = (self.sigma_max - self.sigma_min) / (count - 1) as f64;
        Ok((0..count)
            .map(|i| if i + 1 == count { self.sigma_max } else { self.sigma_min + i as f64 * step })
            .collect())
    }
}

/// `G(a) = ½ sup_{σ∈Γ} a σ²`.
pub fn g_function(spec: &GSpec, a: f64) -> f64 {
    match &spec.finite {
        Some(set) => 0.5 * set.iter().map(|s| a * s * s).fold(f64::NEG_INFINITY, f64::max),
        None => {
            0.5 * (spec.sigma_max * spec.sigma_max * a.max(0.0)
                - spec.sigma_min * spec.sigma_min * (-a).max(0.0))
        }
    }
}
