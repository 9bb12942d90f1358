use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::process::ProcessModel;
use crate::product::{evaluate_en, CylinderFunctional, NumericsSpec};
use crate::time::steps_at;

/// Geometric-decay extrapolation of the last three values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Signed ratio of the last two differences.
    pub ratio: f64,
    /// Spread between the last two ratios when four values exist; smaller is better.
    pub ratio_spread: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCriteria {
    /// Largest acceptable final gap for a Cauchy verdict.
    pub tolerance: f64,
    /// Gaps must decrease from this level on (default: the first scanned level).
    pub monotone_from: Option<u32>,
}

impl Default for ScanCriteria {
    fn default() -> Self {
        Self { tolerance: 0.02, monotone_from: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceScan {
    pub functional: String,
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    /// `gaps[k] = |values[k+1] - values[k]|`.
    pub gaps: Vec<f64>,
    pub extrapolation: Option<Extrapolation>,
    pub cauchy: bool,
    /// Set when a level hit the resource guard; `values` stop before it.
    pub partial: Option<String>,
    pub numerics_fingerprint: String,
    pub wall_ms: Vec<f64>,
}

impl ConvergenceScan {
    /// The extrapolated limit, or the last value when none could be fitted.
    pub fn best_estimate(&self) -> Option<f64> {
        self.extrapolation.map(|e| e.limit).or(self.values.last().copied())
    }

    /// Gaps from `monotone_from` (default `n_min`) on never increase and the
    /// last one is below the tolerance.
    pub fn is_cauchy(&self, criteria: &ScanCriteria, n_min: u32) -> bool {
        let from = criteria.monotone_from.unwrap_or(n_min);
        let watched: Vec<f64> =
            self.gaps.iter().zip(&self.levels).filter(|(_, n)| **n >= from).map(|(g, _)| *g).collect();
        !watched.is_empty()
            && watched.windows(2).all(|w| w[1] <= w[0])
            && watched.last().is_some_and(|g| *g < criteria.tolerance)
    }
}

pub fn numerics_fingerprint(num: &NumericsSpec) -> String {
    let json = serde_json::to_string(num).expect("numerics serialise");
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

/// Fits `v_k = L + c r^k` through the last three values when the last two
/// gaps decrease.
pub fn extrapolate(values: &[f64]) -> Option<Extrapolation> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    if d2 == 0.0 {
        return Some(Extrapolation { limit: values[n - 1], ratio: 0.0, ratio_spread: None });
    }
    if d2.abs() >= d1.abs() {
        return None;
    }
    let ratio = d2 / d1;
    let ratio_spread = (n >= 4).then(|| {
        let d0 = values[n - 3] - values[n - 4];
        (ratio - d1 / d0).abs()
    });
    Some(Extrapolation { limit: values[n - 1] + d2 * ratio / (1.0 - ratio), ratio, ratio_spread })
}

/// Evaluates `Ê^n[f]` for every level in `levels` with identical numerics.
pub fn convergence_scan(
    f: &CylinderFunctional,
    levels: std::ops::RangeInclusive<u32>,
    model_m: &dyn ProcessModel,
    model_n: &dyn ProcessModel,
    num: &NumericsSpec,
    criteria: &ScanCriteria,
) -> Result<ConvergenceScan> {
    let n_min = *levels.start();
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level range".into()));
    }
    if let Some(&t) = f.times().iter().find(|t| steps_at(**t, n_min).is_none()) {
        return Err(Error::NonDyadicTime { time: t, level: n_min });
    }
    let mut scan = ConvergenceScan {
        functional: f.label().to_string(),
        levels: Vec::new(),
        values: Vec::new(),
        gaps: Vec::new(),
        extrapolation: None,
        cauchy: false,
        partial: None,
        numerics_fingerprint: numerics_fingerprint(num),
        wall_ms: Vec::new(),
    };
    for n in levels {
        match evaluate_en(f, n, model_m, model_n, num) {
            Ok(r) => {
                if let Some(prev) = scan.values.last() {
                    scan.gaps.push((r.value - prev).abs());
                }
                scan.levels.push(n);
                scan.values.push(r.value);
                scan.wall_ms.push(r.wall_ms);
            }
            Err(Error::ResourceLimit(msg)) => {
                scan.partial = Some(format!("stopped at level {n}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    scan.extrapolation = extrapolate(&scan.values);
    scan.cauchy = scan.is_cauchy(criteria, n_min);
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence_is_recovered() {
        let v: Vec<f64> = (0..5).map(|k| 3.0 - 0.5f64.powi(k)).collect();
        let e = extrapolate(&v).unwrap();
        assert!((e.limit - 3.0).abs() < 1e-12);
        assert!((e.ratio - 0.5).abs() < 1e-12);
        assert!(e.ratio_spread.unwrap() < 1e-12);
        let alternating: Vec<f64> = (0..4).map(|k| 1.0 + (-0.25f64).powi(k)).collect();
        assert!((extrapolate(&alternating).unwrap().limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growing_gaps_are_not_extrapolated() {
        assert!(extrapolate(&[0.0, 0.1, 0.3]).is_none());
        assert!(extrapolate(&[0.0, 0.1]).is_none());
        assert_eq!(extrapolate(&[2.0, 2.0, 2.0]).unwrap().limit, 2.0);
    }
}
