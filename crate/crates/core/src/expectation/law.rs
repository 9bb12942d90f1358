use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finitely supported probability law on `R^dim`.
///
/// Nodes are stored flat, `dim` coordinates per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(dim: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLaw("dimension must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidLaw("a law needs at least one node".into()));
        }
        if nodes.len() != dim * weights.len() {
            return Err(Error::InvalidLaw(format!(
                "{} weights but {} coordinates for dimension {dim}",
                weights.len(),
                nodes.len()
            )));
        }
        if let Some(x) = nodes.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidLaw(format!("non-finite node coordinate {x}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidLaw(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, nodes, weights })
    }

    pub fn from_points(points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        Self::new(dim, points.concat(), weights)
    }

    pub fn scalar(values: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec(), weights.to_vec())
    }

    pub fn point_mass(point: &[f64]) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Linear expectation of `f` under this law.
    ///
    /// Summed relative to the first node's value so that constants come back
    /// exactly even when the weights only sum to one up to rounding.
    pub fn expect(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut it = self.iter();
        let Some((x0, _)) = it.next() else { return 0.0 };
        let a = f(x0);
        a + it.map(|(x, w)| w * (f(x) - a)).sum::<f64>()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, w) in self.iter() {
            for (mi, xi) in m.iter_mut().zip(x) {
                *mi += w * xi;
            }
        }
        m
    }

    /// Independent coupling `self ⊗ other`, nodes concatenated coordinatewise.
    pub fn product(&self, other: &DiscreteLaw) -> Result<Self> {
        let dim = self.dim + other.dim;
        let mut nodes = Vec::with_capacity(dim * self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, wx) in self.iter() {
            for (y, wy) in other.iter() {
                nodes.extend_from_slice(x);
                nodes.extend_from_slice(y);
                weights.push(wx * wy);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(dim, nodes, weights)
    }

    /// Image law under `map: R^dim -> R^out_dim`.
    pub fn pushforward(&self, out_dim: usize, map: impl Fn(&[f64], &mut [f64])) -> Result<Self> {
        let mut nodes = vec![0.0; out_dim * self.len()];
        for (i, out) in nodes.chunks_exact_mut(out_dim.max(1)).enumerate() {
            map(self.node(i), out);
        }
        Self::new(out_dim, nodes, self.weights.clone())
    }
}

/// A sublinear expectation `Ê[f] = max_P E_P[f]` over finitely many laws.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFamily {
    laws: Vec<DiscreteLaw>,
    label: String,
}

impl ScenarioFamily {
    pub fn new(laws: Vec<DiscreteLaw>, label: impl Into<String>) -> Result<Self> {
        let first = laws.first().ok_or(Error::EmptyFamily)?;
        if let Some(l) = laws.iter().find(|l| l.dim() != first.dim()) {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: l.dim() });
        }
        Ok(Self { laws, label: label.into() })
    }

    pub fn singleton(law: DiscreteLaw, label: impl Into<String>) -> Self {
        Self { laws: vec![law], label: label.into() }
    }

    pub fn point_mass(point: &[f64]) -> Result<Self> {
        Ok(Self::singleton(DiscreteLaw::point_mass(point)?, "point mass"))
    }

    pub fn dim(&self) -> usize {
        self.laws[0].dim()
    }

    pub fn laws(&self) -> &[DiscreteLaw] {
        &self.laws
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn is_linear(&self) -> bool {
        self.laws.len() == 1
    }

    /// `max_P E_P[f]` without dimension checks.
    pub fn expect_with(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.laws.iter().map(|l| l.expect(&f)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value and index of the first maximising law.
    pub fn expect_argmax(&self, f: impl Fn(&[f64]) -> f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, l) in self.laws.iter().enumerate() {
            let v = l.expect(&f);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Checked evaluation of a test function of matching dimension.
    pub fn expect(&self, f: &super::TestFunction) -> Result<f64> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        let v = self.expect_with(|x| f.eval(x));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("expectation of '{}'", f.label())));
        }
        Ok(v)
    }

    /// `Ê[φ(X)]` for a random vector `X` on this family's nodes.
    pub fn expect_of(&self, x: &super::RandomVector, phi: &super::TestFunction) -> Result<f64> {
        if x.in_dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.in_dim() });
        }
        if phi.dim() != x.out_dim() {
            return Err(Error::DimensionMismatch { expected: x.out_dim(), got: phi.dim() });
        }
        let v = self.expect_with(|node| phi.eval(&x.eval(node)));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("expectation of '{}'", phi.label())));
        }
        Ok(v)
    }

    /// Union of the law lists; its functional is the pointwise max of the inputs.
    pub fn merge(families: &[ScenarioFamily], label: impl Into<String>) -> Result<Self> {
        let laws = families.iter().flat_map(|f| f.laws.iter().cloned()).collect();
        Self::new(laws, label)
    }

    /// All pairwise product laws.
    pub fn product(&self, other: &ScenarioFamily) -> Result<Self> {
        let mut laws = Vec::with_capacity(self.len() * other.len());
        for p in &self.laws {
            for q in &other.laws {
                laws.push(p.product(q)?);
            }
        }
        Self::new(laws, format!("{} x {}", self.label, other.label))
    }

    pub fn pushforward(&self, x: &super::RandomVector) -> Result<Self> {
        if x.in_dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.in_dim() });
        }
        let laws = self
            .laws
            .iter()
            .map(|l| l.pushforward(x.out_dim(), |a, b| x.apply(a, b)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(laws, format!("{} under {}", self.label, x.label()))
    }
}
