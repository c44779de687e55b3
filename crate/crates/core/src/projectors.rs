//! Deterministic future generation.
//!
//! [`LinearProjector`] maps a state to `K` futures through an affine base
//! and an evenly spaced grid of offsets, squashed by `tanh`. [`Anticipator`]
//! appends counterfactual variants built around the branch center, with an
//! optional mirrored partner `2c - v` for each variant.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FutureSet, StateVector};

/// Contract for anything that turns a compact state into candidate futures.
pub trait Projector: Send + Sync + fmt::Debug {
    fn project(&self, state: &StateVector, branches: usize) -> Result<FutureSet>;
}

/// A per-dimension parameter that may be given as a single broadcast scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Broadcast {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Broadcast {
    fn resolve(&self, dim: usize) -> Result<Vec<f64>> {
        let values = match self {
            Broadcast::Scalar(v) => vec![*v; dim],
            Broadcast::Vector(v) if v.len() == dim => v.clone(),
            Broadcast::Vector(v) => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                })
            }
        };
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(values)
    }
}

impl From<f64> for Broadcast {
    fn from(v: f64) -> Self {
        Broadcast::Scalar(v)
    }
}

impl From<Vec<f64>> for Broadcast {
    fn from(v: Vec<f64>) -> Self {
        Broadcast::Vector(v)
    }
}

/// Gain, offset and perturbation half-width of a [`LinearProjector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProjectorParams {
    #[serde(default = "unit_gain")]
    pub w: Broadcast,
    #[serde(default = "zero_offset")]
    pub b: Broadcast,
    #[serde(default = "default_span")]
    pub span: f64,
}

fn unit_gain() -> Broadcast {
    Broadcast::Scalar(1.0)
}

fn zero_offset() -> Broadcast {
    Broadcast::Scalar(0.0)
}

/// Default perturbation half-width.
pub const DEFAULT_SPAN: f64 = 0.5;

fn default_span() -> f64 {
    DEFAULT_SPAN
}

impl Default for LinearProjectorParams {
    fn default() -> Self {
        Self {
            w: unit_gain(),
            b: zero_offset(),
            span: DEFAULT_SPAN,
        }
    }
}

impl LinearProjectorParams {
    pub fn new(w: impl Into<Broadcast>, b: impl Into<Broadcast>, span: f64) -> Self {
        Self {
            w: w.into(),
            b: b.into(),
            span,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.span.is_finite() && self.span >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "span must be finite and >= 0, got {}",
                self.span
            )));
        }
        Ok(())
    }
}

/// Evenly spaced offsets `-span + 2·span·k/(K-1)`; a single branch sits at 0.
pub fn deltas(branches: usize, span: f64) -> Vec<f64> {
    if branches == 1 {
        return vec![0.0];
    }
    // Written as span·(2k - (K-1))/(K-1) so the grid is exactly antisymmetric.
    let last = (branches - 1) as i64;
    (0..branches as i64)
        .map(|k| span * (2 * k - last) as f64 / last as f64)
        .collect()
}

/// `F_k = tanh(w ⊙ s + b + δ_k)` for `k = 0..K`.
pub fn project_linear(
    state: &StateVector,
    branches: usize,
    params: &LinearProjectorParams,
) -> Result<FutureSet> {
    if branches == 0 {
        return Err(Error::InvalidConfig("branch count must be >= 1".into()));
    }
    params.validate()?;
    let dim = state.dim();
    let w = params.w.resolve(dim)?;
    let b = params.b.resolve(dim)?;
    let base: Vec<f64> = state
        .iter()
        .zip(w.iter().zip(&b))
        .map(|(s, (w, b))| w * s + b)
        .collect();

    let mut data = Vec::with_capacity(branches * dim);
    for delta in deltas(branches, params.span) {
        data.extend(base.iter().map(|v| (v + delta).tanh()));
    }
    FutureSet::from_flat(branches, dim, data)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProjector {
    pub params: LinearProjectorParams,
}

impl LinearProjector {
    pub fn new(params: LinearProjectorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Projector for LinearProjector {
    fn project(&self, state: &StateVector, branches: usize) -> Result<FutureSet> {
        project_linear(state, branches, &self.params)
    }
}

type CenterMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// One counterfactual transform `center -> variant`.
#[derive(Clone)]
pub enum Perturbation {
    /// `c + delta` on every dimension.
    Shift(f64),
    /// `factor · c`.
    Scale(f64),
    Custom { name: String, map: CenterMap },
}

impl Perturbation {
    pub fn custom(
        name: impl Into<String>,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Perturbation::Custom {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    /// Parses the serialized built-ins `shift:<real>` and `scale:<real>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let unknown = || Error::UnknownPerturbation(spec.to_string());
        let (kind, value) = spec.split_once(':').ok_or_else(unknown)?;
        let value: f64 = value.trim().parse().map_err(|_| unknown())?;
        if !value.is_finite() {
            return Err(unknown());
        }
        match kind.trim() {
            "shift" => Ok(Perturbation::Shift(value)),
            "scale" => Ok(Perturbation::Scale(value)),
            _ => Err(unknown()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Perturbation::Shift(v) => format!("shift:{v}"),
            Perturbation::Scale(v) => format!("scale:{v}"),
            Perturbation::Custom { name, .. } => name.clone(),
        }
    }

    pub fn apply(&self, center: &[f64]) -> Vec<f64> {
        match self {
            Perturbation::Shift(d) => center.iter().map(|c| c + d).collect(),
            Perturbation::Scale(f) => center.iter().map(|c| c * f).collect(),
            Perturbation::Custom { map, .. } => map(center),
        }
    }
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perturbation({})", self.name())
    }
}

/// Ordered perturbations plus the mirror flag.
#[derive(Debug, Clone, Default)]
pub struct PerturbationSet {
    pub perturbations: Vec<Perturbation>,
    pub symmetric: bool,
}

impl PerturbationSet {
    pub fn new(perturbations: Vec<Perturbation>, symmetric: bool) -> Self {
        Self {
            perturbations,
            symmetric,
        }
    }

    /// Number of rows appended by [`anticipate`].
    pub fn variant_count(&self) -> usize {
        self.perturbations.len() * if self.symmetric { 2 } else { 1 }
    }
}

/// Appends `v = p(c)` (and `2c - v` when symmetric) for every perturbation,
/// after the base rows, in declaration order. No `tanh` is applied here.
pub fn anticipate(base: &FutureSet, set: &PerturbationSet) -> Result<FutureSet> {
    let center = base.center();
    let mut out = base.clone();
    for p in &set.perturbations {
        let variant = p.apply(&center);
        if variant.len() != center.len() {
            return Err(Error::PerturbationOutputDimMismatch {
                name: p.name(),
                expected: center.len(),
                got: variant.len(),
            });
        }
        out.push_row(&variant)?;
        if set.symmetric {
            let mirrored: Vec<f64> = center
                .iter()
                .zip(&variant)
                .map(|(c, v)| 2.0 * c - v)
                .collect();
            out.push_row(&mirrored)?;
        }
    }
    Ok(out)
}

/// Wraps a base projector and augments its output with counterfactuals.
#[derive(Debug, Clone)]
pub struct Anticipator {
    pub base: Arc<dyn Projector>,
    pub perturbations: PerturbationSet,
}

impl Anticipator {
    pub fn new(base: Arc<dyn Projector>, perturbations: PerturbationSet) -> Self {
        Self {
            base,
            perturbations,
        }
    }
}

impl Projector for Anticipator {
    fn project(&self, state: &StateVector, branches: usize) -> Result<FutureSet> {
        let base = self.base.project(state, branches)?;
        anticipate(&base, &self.perturbations)
    }
}

/// Serialized projector description used inside graph documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    #[serde(flatten)]
    pub linear: LinearProjectorParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<String>,
    #[serde(default)]
    pub symmetric: bool,
}

impl ProjectorSpec {
    pub fn build(&self) -> Result<Arc<dyn Projector>> {
        let linear: Arc<dyn Projector> = Arc::new(LinearProjector::new(self.linear.clone())?);
        if self.perturbations.is_empty() {
            return Ok(linear);
        }
        let perturbations = self
            .perturbations
            .iter()
            .map(|s| Perturbation::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Anticipator::new(
            linear,
            PerturbationSet::new(perturbations, self.symmetric),
        )))
    }
}
