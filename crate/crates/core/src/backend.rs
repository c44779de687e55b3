//! Native execution engines.
//!
//! Three engines implement [`Backend`]:
//!
//! * [`CircuitBackend`] in analytic mode prepares `depth` repetitions of
//!   `RY(θ_i)` on every wire followed by a CNOT chain `0→1→…→D-1`, then reads
//!   Pauli-Z expectations per wire.
//! * [`CircuitBackend`] in sampled mode runs the same circuit, draws shots and
//!   turns the bitstring counts into expectation estimates.
//! * [`ReferenceBackend`] is a seeded deterministic `tanh(W·x + b)` map.
//!
//! Wire `i` is bit `D-1-i` of a basis index, so a bitstring printed with
//! `{:0D$b}` has wire 0 leftmost.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a counter-based
//! stream cipher generator seeded from a `u64`, so draws are identical across
//! platforms. Shots are sampled by inverse CDF over the cumulative
//! probability table.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projectors::{LinearProjector, Projector};
use crate::types::{BackendConfig, FutureSet, StateVector};

/// Largest register the statevector engine will allocate.
pub const MAX_WIRES: usize = 24;

/// Clamps each input component to `[-π, π]` to obtain rotation angles.
pub fn encode_input(x: &StateVector) -> Vec<f64> {
    x.iter()
        .map(|v| v.clamp(-std::f64::consts::PI, std::f64::consts::PI))
        .collect()
}

/// Dense statevector over `num_wires` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_wires: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// `|0…0⟩`.
    pub fn zero(num_wires: usize) -> Result<Self> {
        if num_wires == 0 || num_wires > MAX_WIRES {
            return Err(Error::InvalidConfig(format!(
                "wire count must be in 1..={MAX_WIRES}, got {num_wires}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_wires];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_wires,
            amplitudes,
        })
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.num_wires - 1 - wire)
    }

    /// `RY(θ) = exp(-iθY/2)`.
    pub fn apply_ry(&mut self, wire: usize, theta: f64) {
        let mask = self.mask(wire);
        let (s, c) = (theta / 2.0).sin_cos();
        for i0 in 0..self.amplitudes.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let a0 = self.amplitudes[i0];
            let a1 = self.amplitudes[i1];
            self.amplitudes[i0] = a0 * c - a1 * s;
            self.amplitudes[i1] = a0 * s + a1 * c;
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 && norm != 1.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
    }

    fn bit(&self, index: usize, wire: usize) -> bool {
        index & self.mask(wire) != 0
    }

    pub fn bitstring(&self, index: usize) -> String {
        format!("{:0width$b}", index, width = self.num_wires)
    }
}

/// Prepares the layered RY + CNOT-chain circuit from `|0…0⟩`.
pub fn run_circuit(angles: &[f64], depth: usize) -> Result<QuantumState> {
    if depth == 0 {
        return Err(Error::InvalidConfig("depth must be >= 1".into()));
    }
    let mut state = QuantumState::zero(angles.len())?;
    for _ in 0..depth {
        for (wire, theta) in angles.iter().enumerate() {
            state.apply_ry(wire, *theta);
        }
        for wire in 1..angles.len() {
            state.apply_cnot(wire - 1, wire);
        }
    }
    state.normalize();
    Ok(state)
}

/// `⟨Z_i⟩ = Σ_b |amp(b)|² (1 - 2 b_i)` for every wire.
pub fn expectation_z(state: &QuantumState) -> StateVector {
    let mut out = vec![0.0; state.num_wires];
    for (index, amp) in state.amplitudes.iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (wire, acc) in out.iter_mut().enumerate() {
            if state.bit(index, wire) {
                *acc -= p;
            } else {
                *acc += p;
            }
        }
    }
    for v in &mut out {
        *v = v.clamp(-1.0, 1.0);
    }
    StateVector::new(out).expect("expectations of a normalized state are finite")
}

/// Draws `shots` basis outcomes i.i.d. from `|amp|²`.
pub fn sample_counts(state: &QuantumState, shots: u64, seed: u64) -> Result<BitstringCounts> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be >= 1".into()));
    }
    let probs = state.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let last_supported = probs
        .iter()
        .rposition(|p| *p > 0.0)
        .ok_or_else(|| Error::InvalidCounts("state has zero norm".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|c| *c <= u).min(last_supported);
        *tallies.entry(idx).or_default() += 1;
    }
    let counts = tallies
        .into_iter()
        .map(|(idx, c)| (state.bitstring(idx), c))
        .collect();
    BitstringCounts::new(counts)
}

/// Measurement histogram keyed by bitstrings with wire 0 leftmost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstringCounts {
    dim: usize,
    counts: BTreeMap<String, u64>,
}

impl BitstringCounts {
    /// Validates keys and drops zero-count entries.
    pub fn new(counts: BTreeMap<String, u64>) -> Result<Self> {
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let dim = counts
            .keys()
            .next()
            .map(String::len)
            .ok_or_else(|| Error::InvalidCounts("no positive counts".into()))?;
        if dim == 0 {
            return Err(Error::InvalidCounts("empty bitstring key".into()));
        }
        for key in counts.keys() {
            if key.len() != dim {
                return Err(Error::InconsistentKeyLength {
                    key: key.clone(),
                    expected: dim,
                });
            }
            if !key.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::InvalidCounts(format!("non-binary key `{key}`")));
            }
        }
        Ok(Self { dim, counts })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Imports keys in the given bit order, reversing wire-0-rightmost keys.
    pub fn with_endianness(counts: BTreeMap<String, u64>, endianness: Endianness) -> Result<Self> {
        match endianness {
            Endianness::Wire0Left => Self::new(counts),
            Endianness::Wire0Right => Self::new(
                counts
                    .into_iter()
                    .map(|(k, v)| (k.chars().rev().collect(), v))
                    .collect(),
            ),
        }
    }

    pub fn to_document(&self, endianness: Endianness) -> CountsDocument {
        let counts = match endianness {
            Endianness::Wire0Left => self.counts.clone(),
            Endianness::Wire0Right => self
                .counts
                .iter()
                .map(|(k, v)| (k.chars().rev().collect(), *v))
                .collect(),
        };
        CountsDocument { endianness, counts }
    }

    pub fn to_json(&self, endianness: Endianness) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document(endianness))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CountsDocument = serde_json::from_str(text)?;
        Self::with_endianness(doc.counts, doc.endianness)
    }
}

/// Bit order of serialized bitstring keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endianness {
    #[serde(rename = "wire0-left")]
    Wire0Left,
    #[serde(rename = "wire0-right")]
    Wire0Right,
}

/// On-disk counts table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsDocument {
    pub endianness: Endianness,
    pub counts: BTreeMap<String, u64>,
}

/// Sign convention for turning bits into ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Bit 1 ↦ +1, i.e. `(2 b_i - 1)`.
    OnePositive,
    /// Bit 0 ↦ +1, i.e. `(1 - 2 b_i)`, matching `⟨Z⟩`.
    #[default]
    Physics,
}

/// Per-wire sign-weighted average of the counts.
///
/// Sums are accumulated in integers so the two conventions are exact
/// negations of each other.
pub fn counts_to_expectations(counts: &BitstringCounts, convention: Convention) -> StateVector {
    let mut sums = vec![0i128; counts.dim];
    for (key, c) in counts.iter() {
        let c = c as i128;
        for (acc, bit) in sums.iter_mut().zip(key.bytes()) {
            let one = bit == b'1';
            let positive = match convention {
                Convention::OnePositive => one,
                Convention::Physics => !one,
            };
            if positive {
                *acc += c;
            } else {
                *acc -= c;
            }
        }
    }
    let n = counts.total() as f64;
    StateVector::new(sums.into_iter().map(|s| s as f64 / n).collect())
        .expect("counts produce finite expectations")
}

/// Level-2 execution contract: `x -> S = f(x)` and `S -> F = g(S, K)`.
pub trait Backend: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn config(&self) -> &BackendConfig;

    /// Output dimension `D`.
    fn dim(&self) -> usize {
        self.config().dim
    }

    /// Expected input length.
    fn input_dim(&self) -> usize {
        self.config().dim
    }

    /// Runs the engine; `seed` only matters for sampled execution.
    fn execute_seeded(&self, x: &StateVector, seed: u64) -> Result<StateVector>;

    fn execute(&self, x: &StateVector) -> Result<StateVector> {
        self.execute_seeded(x, self.config().seed)
    }

    fn projector(&self) -> &Arc<dyn Projector>;

    /// `F_t = g(S_t, K)` through the owned projector.
    fn project(&self, state: &StateVector) -> Result<FutureSet> {
        self.projector().project(state, self.config().branches)
    }
}

fn default_projector() -> Arc<dyn Projector> {
    Arc::new(LinearProjector::default())
}

/// Layered RY/CNOT statevector engine, analytic or shot-sampled.
#[derive(Debug, Clone)]
pub struct CircuitBackend {
    name: String,
    config: BackendConfig,
    convention: Convention,
    projector: Arc<dyn Projector>,
}

impl CircuitBackend {
    /// Analytic when `config.shots` is `None`, sampled otherwise.
    pub fn new(name: impl Into<String>, config: BackendConfig) -> Result<Self> {
        config.validate()?;
        if config.dim > MAX_WIRES {
            return Err(Error::InvalidConfig(format!(
                "circuit engine supports at most {MAX_WIRES} wires"
            )));
        }
        Ok(Self {
            name: name.into(),
            config,
            convention: Convention::Physics,
            projector: default_projector(),
        })
    }

    pub fn with_projector(mut self, projector: Arc<dyn Projector>) -> Self {
        self.projector = projector;
        self
    }

    /// Convention used by the sampled estimator (physics by default).
    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn is_sampled(&self) -> bool {
        self.config.shots.is_some()
    }

    /// Prepared state for `x`, before readout.
    pub fn prepare(&self, x: &StateVector) -> Result<QuantumState> {
        x.expect_dim(self.config.dim)?;
        run_circuit(&encode_input(x), self.config.depth)
    }
}

impl Backend for CircuitBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn execute_seeded(&self, x: &StateVector, seed: u64) -> Result<StateVector> {
        let state = self.prepare(x)?;
        match self.config.shots {
            None => Ok(expectation_z(&state)),
            Some(shots) => {
                let counts = sample_counts(&state, shots, seed)?;
                Ok(counts_to_expectations(&counts, self.convention))
            }
        }
    }

    fn projector(&self) -> &Arc<dyn Projector> {
        &self.projector
    }
}

/// Deterministic compiled-style engine `S = tanh(W·x + b)`.
///
/// With [`ReferenceBackend::new`], `W` (row-major `D × D`) and then `b` are
/// drawn i.i.d. uniform on `[-1, 1]/√D` from ChaCha8 seeded with
/// `config.seed`.
#[derive(Debug, Clone)]
pub struct ReferenceBackend {
    config: BackendConfig,
    weights: Vec<f64>,
    bias: Vec<f64>,
    projector: Arc<dyn Projector>,
}

impl ReferenceBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let scale = 1.0 / (d as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut draw = || rng.gen_range(-1.0..=1.0) * scale;
        let weights: Vec<f64> = (0..d * d).map(|_| draw()).collect();
        let bias: Vec<f64> = (0..d).map(|_| draw()).collect();
        Self::with_weights(config, weights, bias)
    }

    pub fn with_weights(config: BackendConfig, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        if weights.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: weights.len(),
            });
        }
        if bias.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("reference weights must be finite".into()));
        }
        Ok(Self {
            config,
            weights,
            bias,
            projector: default_projector(),
        })
    }

    /// `W = I`, `b = 0`.
    pub fn identity(config: BackendConfig) -> Result<Self> {
        let d = config.dim;
        let mut weights = vec![0.0; d * d];
        for i in 0..d {
            weights[i * d + i] = 1.0;
        }
        Self::with_weights(config, weights, vec![0.0; d])
    }

    pub fn with_projector(mut self, projector: Arc<dyn Projector>) -> Self {
        self.projector = projector;
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

impl Backend for ReferenceBackend {
    fn name(&self) -> &str {
        "reference"
    }

    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn execute_seeded(&self, x: &StateVector, _seed: u64) -> Result<StateVector> {
        let d = self.config.dim;
        x.expect_dim(d)?;
        let out: Vec<f64> = self
            .weights
            .chunks_exact(d)
            .zip(&self.bias)
            .map(|(row, b)| {
                let dot: f64 = row.iter().zip(x.iter()).map(|(w, x)| w * x).sum();
                (dot + b).tanh()
            })
            .collect();
        let state = StateVector::new(out)?;
        state.expect_dim(d)?;
        Ok(state)
    }

    fn projector(&self) -> &Arc<dyn Projector> {
        &self.projector
    }
}
