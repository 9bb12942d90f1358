use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature resolution of one fine-step kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss-Hermite nodes per increment.
    pub nodes: usize,
    /// Volatility samples on `[sigma_min, sigma_max]`, endpoints included.
    pub sigma_samples: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: 7, sigma_samples: 5 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if self.sigma_samples < 1 {
            return Err(Error::InvalidArgument("at least one sigma sample is required".into()));
        }
        Ok(())
    }
}

/// Gauss-Hermite rule for the standard normal density: nodes ascending,
/// weights summing to one. Exact for polynomials of degree `< 2n`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::InvalidArgument("Gauss-Hermite order must be positive".into()));
    }
    // Newton iteration on the orthonormal physicists' recurrence.
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    let nodes: Vec<f64> = x.iter().rev().map(|v| v * std::f64::consts::SQRT_2).collect();
    let total: f64 = w.iter().sum();
    let weights: Vec<f64> = w.iter().rev().map(|v| v / total).collect();
    Ok((nodes, weights))
}

/// `E|Z|^p` for `Z ~ N(0, sigma^2)` by composite Simpson on the half line.
pub fn normal_abs_moment(sigma: f64, p: f64) -> f64 {
    if sigma == 0.0 {
        return if p == 0.0 { 1.0 } else { 0.0 };
    }
    let hi = 14.0;
    let steps = 4000;
    let h = hi / steps as f64;
    let f = |z: f64| z.powf(p) * (-0.5 * z * z).exp();
    let mut acc = f(0.0) + f(hi);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    2.0 * sigma.powf(p) * acc * h / 3.0 / (2.0 * PI).sqrt()
}
