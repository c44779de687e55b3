//! Typed containers shared by every layer: present states, future sets,
//! backend configuration and the bundle returned by one hypercausal step.

use std::collections::BTreeMap;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A present state `S_t`: a nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Fails with `DimensionMismatch` unless the vector has `dim` entries.
    pub fn expect_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(state: StateVector) -> Self {
        state.0
    }
}

impl Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

/// `K` candidate futures stored row-major as a `K × D` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureSet {
    branches: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FutureSet {
    /// Builds a future set from explicit rows. All rows must share one length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let branches = rows.len();
        if branches == 0 {
            return Err(Error::Empty("future set"));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Empty("future row"));
        }
        let mut data = Vec::with_capacity(branches * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_flat(branches, dim, data)
    }

    pub fn from_flat(branches: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if branches == 0 || dim == 0 {
            return Err(Error::Empty("future set"));
        }
        if data.len() != branches * dim {
            return Err(Error::DimensionMismatch {
                expected: branches * dim,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            branches,
            dim,
            data,
        })
    }

    /// Number of branches `K`.
    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major flattened view.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |row| row[j])
    }

    /// Per-dimension center `mean(F, 0)`.
    pub fn center(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for row in self.rows() {
            for (acc, v) in sums.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let k = self.branches as f64;
        sums.into_iter().map(|s| s / k).collect()
    }

    /// Per-dimension population standard deviation, averaged over dimensions.
    pub fn mean_branch_std(&self) -> f64 {
        let center = self.center();
        let k = self.branches as f64;
        let total: f64 = (0..self.dim)
            .map(|j| {
                let var = self
                    .column(j)
                    .map(|v| (v - center[j]).powi(2))
                    .sum::<f64>()
                    / k;
                var.sqrt()
            })
            .sum();
        total / self.dim as f64
    }

    pub(crate) fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if let Some(index) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        self.data.extend_from_slice(row);
        self.branches += 1;
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Static configuration handed to backend factories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub dim: usize,
    pub branches: usize,
    /// Shot count; `None` selects analytic execution.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_depth() -> usize {
    1
}

impl BackendConfig {
    pub fn new(dim: usize, branches: usize) -> Self {
        Self {
            dim,
            branches,
            shots: None,
            depth: 1,
            seed: 0,
        }
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = Some(shots);
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        if self.branches < 2 {
            return Err(Error::InvalidConfig("branches must be >= 2".into()));
        }
        if self.depth < 1 {
            return Err(Error::InvalidConfig("depth must be >= 1".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidConfig("shots must be >= 1 when present".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendCapabilities {
    pub analytic: bool,
    pub sampled: bool,
    /// Output does not depend on any seed.
    pub deterministic: bool,
}

impl BackendCapabilities {
    pub fn is_valid(&self) -> bool {
        self.analytic || self.sampled
    }
}

/// Diagnostic keys written by every hypercausal step.
pub mod diag {
    pub const BRANCH_STD: &str = "branch_std";
    pub const K_EFFECTIVE: &str = "k_effective";
    pub const WALL_TIME_S: &str = "wall_time_s";
}

/// Result of one triadic step `(x_t, S_{t-1}) -> (S_t, F_t, Ŝ_{t+1})`.
#[derive(Debug, Clone)]
pub struct TriadicOutput {
    pub state: StateVector,
    pub futures: FutureSet,
    pub representative: StateVector,
    /// The previous state passed in, kept for consistency-loss evaluation.
    pub previous: Option<StateVector>,
    pub policy: String,
    pub diagnostics: BTreeMap<String, f64>,
}
