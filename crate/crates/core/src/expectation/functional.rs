use std::fmt;
use std::sync::Arc;

use super::ScenarioFamily;
use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type Evaluator = Arc<dyn Fn(&dyn Fn(&[f64]) -> f64) -> f64 + Send + Sync>;

/// A scalar test function on `R^dim` with optional recorded constants.
#[derive(Clone)]
pub struct TestFunction {
    dim: usize,
    f: ScalarFn,
    lipschitz: Option<f64>,
    bound: Option<f64>,
    label: String,
}

impl TestFunction {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, f: Arc::new(f), lipschitz: None, bound: None, label: label.into() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, format!("{c}"), move |_| c).with_constants(0.0, c.abs())
    }

    /// Records the Lipschitz constant (w.r.t. the 1-norm) and sup bound.
    pub fn with_constants(mut self, lipschitz: f64, bound: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self.bound = Some(bound);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let f = self.f.clone();
        let mut out = Self::new(self.dim, format!("{lambda}*({})", self.label), move |x| lambda * f(x));
        out.lipschitz = self.lipschitz.map(|l| l * lambda.abs());
        out.bound = self.bound.map(|k| k * lambda.abs());
        out
    }

    pub fn shift(&self, c: f64) -> Self {
        let f = self.f.clone();
        let mut out = Self::new(self.dim, format!("({})+{c}", self.label), move |x| f(x) + c);
        out.lipschitz = self.lipschitz;
        out.bound = self.bound.map(|k| k + c.abs());
        out
    }

    pub fn add(&self, other: &TestFunction) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let (f, g) = (self.f.clone(), other.f.clone());
        let mut out =
            Self::new(self.dim, format!("({})+({})", self.label, other.label), move |x| f(x) + g(x));
        out.lipschitz = self.lipschitz.zip(other.lipschitz).map(|(a, b)| a + b);
        out.bound = self.bound.zip(other.bound).map(|(a, b)| a + b);
        Ok(out)
    }

    pub fn negate(&self) -> Self {
        self.scale(-1.0)
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish()
    }
}

/// A map from scenario nodes in `R^in_dim` to `R^out_dim`.
#[derive(Clone)]
pub struct RandomVector {
    in_dim: usize,
    out_dim: usize,
    map: VectorFn,
    label: String,
}

impl RandomVector {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        label: impl Into<String>,
        map: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { in_dim, out_dim, map: Arc::new(map), label: label.into() }
    }

    /// Selects the listed coordinates of each node.
    pub fn coordinates(in_dim: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= in_dim) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} out of range for dimension {in_dim}"
            )));
        }
        let idx = indices.to_vec();
        let label = format!("coords{idx:?}");
        Ok(Self::new(in_dim, idx.len(), label, move |x, out| {
            for (o, &i) in out.iter_mut().zip(&idx) {
                *o = x[i];
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, "id", |x, out| out.copy_from_slice(x))
    }

    pub fn constant(in_dim: usize, value: Vec<f64>) -> Self {
        let label = format!("const{value:?}");
        Self::new(in_dim, value.len(), label, move |_, out| out.copy_from_slice(&value))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, node: &[f64], out: &mut [f64]) {
        (self.map)(node, out)
    }

    pub fn eval(&self, node: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.apply(node, &mut out);
        out
    }
}

impl fmt::Debug for RandomVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RandomVector({} -> {}, {})", self.in_dim, self.out_dim, self.label)
    }
}

/// A functional on test functions of `R^dim`, e.g. the distribution of a random vector.
#[derive(Clone)]
pub struct SublinearFunctional {
    dim: usize,
    eval: Evaluator,
    label: String,
}

impl SublinearFunctional {
    pub fn from_fn(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&dyn Fn(&[f64]) -> f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, eval: Arc::new(eval), label: label.into() }
    }

    pub fn from_family(family: ScenarioFamily) -> Self {
        let label = family.label().to_string();
        Self::from_fn(family.dim(), label, move |f| family.expect_with(f))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn evaluate_with(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        (self.eval)(f)
    }

    pub fn evaluate(&self, phi: &TestFunction) -> Result<f64> {
        if phi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: phi.dim() });
        }
        let v = self.evaluate_with(&|x| phi.eval(x));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{}[{}]", self.label, phi.label())));
        }
        Ok(v)
    }
}

impl fmt::Debug for SublinearFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SublinearFunctional(dim {}, {})", self.dim, self.label)
    }
}

/// The distribution `φ ↦ Ê[φ(X)]` of `X` under `family`.
pub fn distribution(family: &ScenarioFamily, x: &RandomVector) -> Result<SublinearFunctional> {
    Ok(SublinearFunctional::from_family(family.pushforward(x)?))
}
