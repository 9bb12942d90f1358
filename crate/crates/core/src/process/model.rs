use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use super::{gauss_hermite, GSpec, QuadratureSpec};
use crate::error::{Error, Result};
use crate::expectation::{DiscreteLaw, ScenarioFamily, TestFunction};
use crate::time::{format_time, to_f64, Time};

/// An independent-increment process described by its one-step kernels.
pub trait ProcessModel: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    /// Scenario family of the increment over `[start, end]`.
    fn kernel(&self, start: Time, end: Time, quad: &QuadratureSpec) -> Result<ScenarioFamily>;

    /// Upper bound for the dominating expectation of `|X_end − X_start|`.
    fn increment_modulus(&self, start: Time, end: Time) -> Result<f64>;

    fn is_stationary(&self) -> bool;

    /// Bound on the increment standard deviation per unit square-root time,
    /// used to size value grids.
    fn sigma_bound(&self) -> f64;

    fn g_spec(&self) -> Option<&GSpec> {
        None
    }
}

pub type SharedModel = Arc<dyn ProcessModel>;

fn check_interval(start: Time, end: Time) -> Result<()> {
    if start < Time::zero() || end < start {
        return Err(Error::InvalidArgument(format!(
            "invalid interval [{}, {}]",
            format_time(start),
            format_time(end)
        )));
    }
    Ok(())
}

/// One law per sampled volatility: Gauss-Hermite nodes scaled by `σ√dt`.
pub fn gbm_step_kernel(spec: &GSpec, dt: f64, quad: &QuadratureSpec) -> Result<ScenarioFamily> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    quad.validate()?;
    let (z, w) = gauss_hermite(quad.nodes)?;
    let root = dt.sqrt();
    let laws = spec
        .samples(quad.sigma_samples)?
        .into_iter()
        .map(|sigma| {
            let scale = sigma * root;
            DiscreteLaw::scalar(&z.iter().map(|z| z * scale).collect::<Vec<_>>(), &w)
        })
        .collect::<Result<Vec<_>>>()?;
    ScenarioFamily::new(laws, format!("G-normal dt={dt}"))
}

/// G-Brownian motion with volatility set given by a [`GSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GBrownianModel {
    spec: GSpec,
}

impl GBrownianModel {
    pub fn new(spec: GSpec) -> Self {
        Self { spec }
    }

    pub fn interval(sigma_min: f64, sigma_max: f64) -> Result<Self> {
        Ok(Self::new(GSpec::interval(sigma_min, sigma_max)?))
    }

    pub fn spec(&self) -> &GSpec {
        &self.spec
    }
}

impl ProcessModel for GBrownianModel {
    fn label(&self) -> String {
        match self.spec.finite_set() {
            Some(set) => format!("G-BM sigma in {set:?}"),
            None => format!("G-BM sigma in [{}, {}]", self.spec.sigma_min(), self.spec.sigma_max()),
        }
    }

    fn kernel(&self, start: Time, end: Time, quad: &QuadratureSpec) -> Result<ScenarioFamily> {
        check_interval(start, end)?;
        if start == end {
            return ScenarioFamily::point_mass(&[0.0]);
        }
        gbm_step_kernel(&self.spec, to_f64(end - start), quad)
    }

    fn increment_modulus(&self, start: Time, end: Time) -> Result<f64> {
        let dt = to_f64(end - start).abs();
        Ok(self.spec.sigma_max() * (2.0 * dt / std::f64::consts::PI).sqrt())
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn sigma_bound(&self) -> f64 {
        self.spec.sigma_max()
    }

    fn g_spec(&self) -> Option<&GSpec> {
        Some(&self.spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum KernelTable {
    /// Keyed by interval length.
    Stationary(Vec<(Time, ScenarioFamily)>),
    /// Keyed by `(start, end)`.
    PerInterval(Vec<((Time, Time), ScenarioFamily)>),
}

/// A model whose increments are given by an explicit table of scalar families.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernelModel {
    label: String,
    table: KernelTable,
}

impl FiniteKernelModel {
    pub fn stationary(label: impl Into<String>, entries: Vec<(Time, ScenarioFamily)>) -> Result<Self> {
        for (len, fam) in &entries {
            if *len <= Time::zero() {
                return Err(Error::InvalidArgument("kernel lengths must be positive".into()));
            }
            Self::check_family(fam)?;
        }
        Ok(Self { label: label.into(), table: KernelTable::Stationary(entries) })
    }

    pub fn per_interval(
        label: impl Into<String>,
        entries: Vec<((Time, Time), ScenarioFamily)>,
    ) -> Result<Self> {
        for ((s, t), fam) in &entries {
            check_interval(*s, *t)?;
            Self::check_family(fam)?;
        }
        Ok(Self { label: label.into(), table: KernelTable::PerInterval(entries) })
    }

    /// The same family for every interval of the given length.
    pub fn uniform(label: impl Into<String>, length: Time, family: ScenarioFamily) -> Result<Self> {
        Self::stationary(label, vec![(length, family)])
    }

    fn check_family(fam: &ScenarioFamily) -> Result<()> {
        if fam.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: fam.dim() });
        }
        Ok(())
    }

    fn lookup(&self, start: Time, end: Time) -> Result<ScenarioFamily> {
        check_interval(start, end)?;
        if start == end {
            return ScenarioFamily::point_mass(&[0.0]);
        }
        let found = match &self.table {
            KernelTable::Stationary(e) => e.iter().find(|(l, _)| *l == end - start).map(|(_, f)| f),
            KernelTable::PerInterval(e) => {
                e.iter().find(|((s, t), _)| *s == start && *t == end).map(|(_, f)| f)
            }
        };
        found.cloned().ok_or_else(|| Error::MissingInterval { model: self.label.clone(), start, end })
    }

    fn families(&self) -> Vec<(f64, &ScenarioFamily)> {
        match &self.table {
            KernelTable::Stationary(e) => e.iter().map(|(l, f)| (to_f64(*l), f)).collect(),
            KernelTable::PerInterval(e) => e.iter().map(|((s, t), f)| (to_f64(*t - *s), f)).collect(),
        }
    }
}

impl ProcessModel for FiniteKernelModel {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn kernel(&self, start: Time, end: Time, _quad: &QuadratureSpec) -> Result<ScenarioFamily> {
        self.lookup(start, end)
    }

    fn increment_modulus(&self, start: Time, end: Time) -> Result<f64> {
        let (s, t) = if start <= end { (start, end) } else { (end, start) };
        Ok(self.lookup(s, t)?.expect_with(|x| x[0].abs()))
    }

    fn is_stationary(&self) -> bool {
        matches!(self.table, KernelTable::Stationary(_))
    }

    fn sigma_bound(&self) -> f64 {
        self.families()
            .into_iter()
            .map(|(len, fam)| {
                let second = fam.laws().iter().map(|l| l.expect(|x| x[0] * x[0])).fold(0.0, f64::max);
                (second / len).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// `inner` observed on `[offset + s, offset + t]`.
#[derive(Debug, Clone)]
pub struct ShiftedModel {
    inner: SharedModel,
    offset: Time,
}

impl ShiftedModel {
    pub fn new(inner: SharedModel, offset: Time) -> Self {
        Self { inner, offset }
    }
}

impl ProcessModel for ShiftedModel {
    fn label(&self) -> String {
        format!("{} shifted by {}", self.inner.label(), format_time(self.offset))
    }

    fn kernel(&self, start: Time, end: Time, quad: &QuadratureSpec) -> Result<ScenarioFamily> {
        self.inner.kernel(start + self.offset, end + self.offset, quad)
    }

    fn increment_modulus(&self, start: Time, end: Time) -> Result<f64> {
        self.inner.increment_modulus(start + self.offset, end + self.offset)
    }

    fn is_stationary(&self) -> bool {
        self.inner.is_stationary()
    }

    fn sigma_bound(&self) -> f64 {
        self.inner.sigma_bound()
    }

    fn g_spec(&self) -> Option<&GSpec> {
        self.inner.g_spec()
    }
}

/// Smooth bounded functions used for refinement checks of one-step kernels.
pub fn refinement_battery() -> Vec<TestFunction> {
    vec![
        TestFunction::new(1, "clamp(x,-10,10)", |x| x[0].clamp(-10.0, 10.0)),
        TestFunction::new(1, "clamp(x^2,0,100)", |x| (x[0] * x[0]).clamp(0.0, 100.0)),
        TestFunction::new(1, "clamp(x^3,-1000,1000)", |x| x[0].powi(3).clamp(-1000.0, 1000.0)),
        TestFunction::new(1, "clamp(x^4,0,10000)", |x| x[0].powi(4).clamp(0.0, 10000.0)),
        TestFunction::new(1, "cos(x/2)", |x| (0.5 * x[0]).cos()),
    ]
}

/// Largest gap over the battery between the `dt` kernel and the nested
/// composition of two `dt/2` kernels.
pub fn refinement_gap(
    model: &dyn ProcessModel,
    start: Time,
    end: Time,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mid = (start + end) / Time::from_integer(2);
    let whole = model.kernel(start, end, quad)?;
    let first = model.kernel(start, mid, quad)?;
    let second = model.kernel(mid, end, quad)?;
    let mut worst = 0.0f64;
    for phi in refinement_battery() {
        let direct = whole.expect_with(|x| phi.eval(x));
        let nested = first.expect_with(|a| second.expect_with(|b| phi.eval(&[a[0] + b[0]])));
        worst = worst.max((direct - nested).abs());
    }
    Ok(worst)
}
