//! Experiment configs (TOML).
//!
//! ```toml
//! [models.m]
//! kind = "g-brownian"
//! sigma = [1.0, 2.0]          # interval; or sigma_set = [1.0, 2.0] for a finite set
//!
//! [models.n]
//! kind = "finite-kernel"
//! kernels = [{ length = "1/4", points = [-0.5, 0.5], weights = [[0.5, 0.5]] }]
//!
//! [functional]
//! expr = "clamp(x1^2 - y1^2, -25, 25)"
//! times = ["1"]
//!
//! [levels]
//! min = 2
//! max = 8
//!
//! [numerics]                  # optional, see NumericsSpec
//!
//! [[analysis]]
//! kind = "scan"
//! expect = { value = 3.0, tol = 0.05 }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expectation::{DiscreteLaw, ScenarioFamily};
use crate::pde::PdeGrid;
use crate::process::{FiniteKernelModel, GBrownianModel, GSpec, SharedModel};
use crate::product::NumericsSpec;
use crate::time::{parse_time, Time};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub models: Models,
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub levels: Levels,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub pde: Option<PdeGrid>,
    #[serde(default)]
    pub output: Output,
    #[serde(default, rename = "analysis")]
    pub analyses: Vec<Analysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Models {
    pub m: ModelConfig,
    pub n: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    GBrownian {
        #[serde(default)]
        sigma: Option<[f64; 2]>,
        #[serde(default)]
        sigma_set: Option<Vec<f64>>,
    },
    FiniteKernel {
        kernels: Vec<KernelConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub length: String,
    pub points: Vec<f64>,
    /// One row of weights per law.
    pub weights: Vec<Vec<f64>>,
}

impl ModelConfig {
    pub fn g_spec(&self) -> Result<Option<GSpec>> {
        match self {
            Self::GBrownian { sigma: Some([lo, hi]), sigma_set: None } => GSpec::interval(*lo, *hi).map(Some),
            Self::GBrownian { sigma: None, sigma_set: Some(set) } => GSpec::finite(set.clone()).map(Some),
            Self::GBrownian { .. } => {
                Err(Error::Config("g-brownian model needs exactly one of 'sigma' and 'sigma_set'".into()))
            }
            Self::FiniteKernel { .. } => Ok(None),
        }
    }

    pub fn build(&self, label: &str) -> Result<SharedModel> {
        if let Some(spec) = self.g_spec()? {
            return Ok(Arc::new(GBrownianModel::new(spec)));
        }
        let Self::FiniteKernel { kernels } = self else { unreachable!() };
        if kernels.is_empty() {
            return Err(Error::Config(format!("model {label}: no kernels")));
        }
        let mut entries = Vec::with_capacity(kernels.len());
        for k in kernels {
            let laws =
                k.weights.iter().map(|w| DiscreteLaw::scalar(&k.points, w)).collect::<Result<Vec<_>>>()?;
            let len = parse_time(&k.length)?;
            entries.push((len, ScenarioFamily::new(laws, format!("{label} kernel {}", k.length))?));
        }
        Ok(Arc::new(FiniteKernelModel::stationary(label, entries)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub expr: String,
    /// Rational strings such as "1/2", "3/2^3" or "1/3".
    pub times: Vec<String>,
    /// Unit intervals the times may span (concatenated blocks).
    #[serde(default = "one")]
    pub blocks: u32,
}

fn one() -> u32 {
    1
}

impl FunctionalConfig {
    pub fn parsed_times(&self) -> Result<Vec<Time>> {
        self.times.iter().map(|t| parse_time(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    pub min: u32,
    pub max: u32,
}

impl Default for Levels {
    fn default() -> Self {
        Self { min: 2, max: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Target value with an absolute tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// `Ê^n[f]` at one level (default: `levels.max`).
    Evaluate {
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    /// Values over `levels`, gaps and an extrapolated limit.
    Scan {
        #[serde(default = "scan_tol")]
        tolerance: f64,
        #[serde(default)]
        monotone_from: Option<u32>,
        #[serde(default)]
        require_cauchy: bool,
        #[serde(default)]
        expect: Option<Expect>,
    },
    Tightness {
        #[serde(default = "truncations")]
        truncation: Vec<f64>,
        /// Defaults to every level in `levels`.
        #[serde(default)]
        at_levels: Option<Vec<u32>>,
        /// Target for the first certificate bound.
        #[serde(default)]
        expect: Option<Expect>,
    },
    /// Grid independence of the last increment. Battery expressions read the
    /// earlier values `x1, y1, ...` and the increment as the last pair.
    Independence {
        battery: Vec<String>,
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        tabulation_points: Option<usize>,
        #[serde(default = "indep_tol")]
        tolerance: f64,
    },
    /// Level and nesting-order gaps at one level.
    Order {
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        min_gap: Option<f64>,
    },
    /// Lattice limit (from a scan over `levels`) against the G-heat solver.
    PdeCompare {
        #[serde(default = "pde_tol")]
        tolerance: f64,
        #[serde(default)]
        expect: Option<Expect>,
    },
    MomentBound {
        #[serde(default = "moment_times")]
        times: Vec<String>,
        #[serde(default)]
        level: Option<u32>,
        #[serde(default = "moment_clamp")]
        clamp: f64,
    },
    AsymmetryDemo {
        #[serde(default = "denominator")]
        weight_denominator: u32,
        #[serde(default = "asym_gap")]
        min_gap: f64,
    },
    /// Joint recursion against the single-process recursion.
    Marginal {
        #[serde(default)]
        level: Option<u32>,
        #[serde(default = "marginal_tol")]
        tolerance: f64,
        #[serde(default)]
        expect: Option<Expect>,
    },
    /// Non-dyadic times through dyadic approximants at two levels.
    Extend {
        level_i: u32,
        level_j: u32,
        #[serde(default)]
        eval_level: Option<u32>,
    },
}

fn scan_tol() -> f64 {
    0.02
}
fn truncations() -> Vec<f64> {
    vec![5.0, 11.0]
}
fn indep_tol() -> f64 {
    1e-2
}
fn pde_tol() -> f64 {
    0.05
}
fn moment_times() -> Vec<String> {
    vec!["1/4".into(), "1/2".into(), "1".into()]
}
fn moment_clamp() -> f64 {
    64.0
}
fn denominator() -> u32 {
    4
}
fn asym_gap() -> f64 {
    0.05
}
fn marginal_tol() -> f64 {
    1e-6
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Evaluate { .. } => "evaluate",
            Self::Scan { .. } => "scan",
            Self::Tightness { .. } => "tightness",
            Self::Independence { .. } => "independence",
            Self::Order { .. } => "order",
            Self::PdeCompare { .. } => "pde-compare",
            Self::MomentBound { .. } => "moment-bound",
            Self::AsymmetryDemo { .. } => "asymmetry-demo",
            Self::Marginal { .. } => "marginal",
            Self::Extend { .. } => "extend",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Hash of everything that determines the rows of analysis `i`.
    pub fn fingerprint(&self, i: usize) -> String {
        #[derive(Serialize)]
        struct Section<'a> {
            engine: &'a str,
            models: &'a Models,
            functional: &'a FunctionalConfig,
            levels: &'a Levels,
            numerics: &'a NumericsSpec,
            pde: &'a Option<PdeGrid>,
            analysis: &'a Analysis,
        }
        let section = Section {
            engine: crate::ENGINE_VERSION,
            models: &self.models,
            functional: &self.functional,
            levels: &self.levels,
            numerics: &self.numerics,
            pde: &self.pde,
            analysis: &self.analyses[i],
        };
        let json = serde_json::to_string(&section).expect("config serialises");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}
