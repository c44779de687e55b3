//! Parameter-update interface and a string-keyed optimizer registry.
//!
//! Built-ins, with their hyperparameters (`*` = required):
//!
//! | name                  | hyperparameters                                         |
//! |-----------------------|---------------------------------------------------------|
//! | `sgd`                 | `lr*`                                                   |
//! | `adam_like`           | `lr*`, `beta1`=0.9, `beta2`=0.999, `eps`=1e-8           |
//! | `finite_diff`         | `lr*`, `h`=1e-4                                         |
//! | `spsa`                | `a`=0.1, `c`=0.1, `A`=10, `alpha`=0.602, `gamma`=0.101  |
//! | `trust_region_scalar` | `r0`=0.05, `r_min`=1e-4, `r_max`=0.2, `grow`=1.2, `shrink`=0.9 |
//!
//! Every source of randomness lives in [`OptimizerState`], so a step is a
//! pure function of `(state, params, input)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Hyperparams = BTreeMap<String, f64>;

/// Registry key plus hyperparameters, as stored in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub name: String,
    #[serde(default)]
    pub hyperparams: Hyperparams,
}

impl OptimizerSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            hyperparams: Hyperparams::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: f64) -> Self {
        self.hyperparams.insert(key.into(), value);
        self
    }
}

/// Method-specific accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Number of completed steps.
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    /// Trust radius, for methods that keep one.
    pub radius: Option<f64>,
    rng: ChaCha8Rng,
}

impl OptimizerState {
    pub fn new(seed: u64) -> Self {
        Self {
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            radius: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// What the caller supplies for one update.
pub enum StepInput<'a> {
    Gradient(&'a [f64]),
    Objective(&'a mut dyn FnMut(&[f64]) -> f64),
}

impl StepInput<'_> {
    fn describe(&self) -> &'static str {
        match self {
            StepInput::Gradient(_) => "a gradient",
            StepInput::Objective(_) => "an objective",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub params: Vec<f64>,
    /// Objective evaluations spent on this step.
    pub evaluations: usize,
    /// Gradient estimate used by estimator-based methods.
    pub gradient: Option<Vec<f64>>,
    /// Whether a proposal was accepted, for accept/reject methods.
    pub accepted: Option<bool>,
}

pub trait Optimizer: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn init_state(&self, seed: u64) -> OptimizerState {
        OptimizerState::new(seed)
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput>;
}

fn unsupported(name: &str, input: &StepInput<'_>) -> Error {
    Error::UnsupportedStepInput {
        optimizer: name.to_string(),
        input: input.describe(),
    }
}

fn check_len(params: &[f64], other: &[f64]) -> Result<()> {
    if params.len() != other.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: other.len(),
        });
    }
    Ok(())
}

fn evaluate(objective: &mut dyn FnMut(&[f64]) -> f64, at: &[f64]) -> Result<f64> {
    let v = objective(at);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

fn check_params(params: &[f64]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::Empty("parameter vector"));
    }
    if let Some(index) = params.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Reads declared hyperparameters and rejects undeclared ones.
struct HyperparamReader<'a> {
    optimizer: &'a str,
    values: &'a Hyperparams,
}

impl<'a> HyperparamReader<'a> {
    fn new(optimizer: &'a str, values: &'a Hyperparams, allowed: &[&str]) -> Result<Self> {
        if let Some(key) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::UnknownHyperparam {
                optimizer: optimizer.to_string(),
                name: key.clone(),
            });
        }
        Ok(Self { optimizer, values })
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.values.get(key).copied().ok_or_else(|| Error::MissingHyperparam {
            optimizer: self.optimizer.to_string(),
            name: key.to_string(),
        })
    }

    fn or(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).copied().unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

impl Optimizer for Sgd {
    fn name(&self) -> &str {
        "sgd"
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput> {
        let StepInput::Gradient(g) = input else {
            return Err(unsupported(self.name(), &input));
        };
        check_params(params)?;
        check_len(params, g)?;
        state.step += 1;
        Ok(StepOutput {
            params: params.iter().zip(g).map(|(p, g)| p - self.lr * g).collect(),
            evaluations: 0,
            gradient: None,
            accepted: None,
        })
    }
}

/// Bias-corrected first/second moment method.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamLike {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Optimizer for AdamLike {
    fn name(&self) -> &str {
        "adam_like"
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput> {
        let StepInput::Gradient(g) = input else {
            return Err(unsupported(self.name(), &input));
        };
        check_params(params)?;
        check_len(params, g)?;
        if state.first_moment.is_empty() {
            state.first_moment = vec![0.0; params.len()];
            state.second_moment = vec![0.0; params.len()];
        }
        check_len(params, &state.first_moment)?;
        state.step += 1;
        let t = state.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut out = Vec::with_capacity(params.len());
        for i in 0..params.len() {
            let m = &mut state.first_moment[i];
            let v = &mut state.second_moment[i];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g[i];
            *v = self.beta2 * *v + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            out.push(params[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps));
        }
        Ok(StepOutput {
            params: out,
            evaluations: 0,
            gradient: None,
            accepted: None,
        })
    }
}

/// Central differences per coordinate followed by a plain gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiff {
    pub lr: f64,
    pub h: f64,
}

impl Optimizer for FiniteDiff {
    fn name(&self) -> &str {
        "finite_diff"
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput> {
        let StepInput::Objective(objective) = input else {
            return Err(unsupported(self.name(), &input));
        };
        check_params(params)?;
        let mut probe = params.to_vec();
        let mut gradient = Vec::with_capacity(params.len());
        for i in 0..params.len() {
            probe[i] = params[i] + self.h;
            let plus = evaluate(objective, &probe)?;
            probe[i] = params[i] - self.h;
            let minus = evaluate(objective, &probe)?;
            probe[i] = params[i];
            gradient.push((plus - minus) / (2.0 * self.h));
        }
        state.step += 1;
        Ok(StepOutput {
            params: params.iter().zip(&gradient).map(|(p, g)| p - self.lr * g).collect(),
            evaluations: 2 * params.len(),
            gradient: Some(gradient),
            accepted: None,
        })
    }
}

/// Simultaneous perturbation with Rademacher directions.
///
/// Gains: `a_k = a/(k+1+A)^alpha`, `c_k = c/(k+1)^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spsa {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Spsa {
    fn gains(&self, k: u64) -> (f64, f64) {
        let k = k as f64;
        (
            self.a / (k + 1.0 + self.big_a).powf(self.alpha),
            self.c / (k + 1.0).powf(self.gamma),
        )
    }
}

impl Optimizer for Spsa {
    fn name(&self) -> &str {
        "spsa"
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput> {
        let StepInput::Objective(objective) = input else {
            return Err(unsupported(self.name(), &input));
        };
        check_params(params)?;
        let (a_k, c_k) = self.gains(state.step);
        let delta: Vec<f64> = (0..params.len())
            .map(|_| if state.rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + c_k * d).collect();
        let minus: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p - c_k * d).collect();
        let y_plus = evaluate(objective, &plus)?;
        let y_minus = evaluate(objective, &minus)?;
        let gradient: Vec<f64> = delta.iter().map(|d| (y_plus - y_minus) / (2.0 * c_k * d)).collect();
        state.step += 1;
        Ok(StepOutput {
            params: params.iter().zip(&gradient).map(|(p, g)| p - a_k * g).collect(),
            evaluations: 2,
            gradient: Some(gradient),
            accepted: None,
        })
    }
}

/// Scalar random-proposal trust region with strict-descent acceptance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionScalar {
    pub r0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub grow: f64,
    pub shrink: f64,
}

impl Default for TrustRegionScalar {
    fn default() -> Self {
        Self {
            r0: 0.05,
            r_min: 1e-4,
            r_max: 0.2,
            grow: 1.2,
            shrink: 0.9,
        }
    }
}

impl TrustRegionScalar {
    fn validate(&self) -> Result<()> {
        let ok = self.r_min > 0.0
            && self.r_min <= self.r0
            && self.r0 <= self.r_max
            && self.r_max.is_finite()
            && self.grow >= 1.0
            && self.shrink > 0.0
            && self.shrink <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid trust-region settings {self:?}")))
        }
    }

    /// Proposes `α + u`, `u ~ U[-r, r]`, and keeps it only on strict decrease.
    pub fn step_scalar(
        &self,
        state: &mut OptimizerState,
        alpha: f64,
        objective: &mut dyn FnMut(f64) -> f64,
    ) -> Result<(f64, bool)> {
        let radius = state.radius.unwrap_or(self.r0);
        let current = objective(alpha);
        if !current.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        let candidate = alpha + state.rng.gen_range(-radius..=radius);
        let proposed = objective(candidate);
        if !proposed.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        state.step += 1;
        if proposed < current {
            state.radius = Some((radius * self.grow).min(self.r_max));
            Ok((candidate, true))
        } else {
            state.radius = Some((radius * self.shrink).max(self.r_min));
            Ok((alpha, false))
        }
    }
}

impl Optimizer for TrustRegionScalar {
    fn name(&self) -> &str {
        "trust_region_scalar"
    }

    fn init_state(&self, seed: u64) -> OptimizerState {
        let mut state = OptimizerState::new(seed);
        state.radius = Some(self.r0);
        state
    }

    fn step(&self, state: &mut OptimizerState, params: &[f64], input: StepInput<'_>) -> Result<StepOutput> {
        let StepInput::Objective(objective) = input else {
            return Err(unsupported(self.name(), &input));
        };
        check_params(params)?;
        if params.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: params.len(),
            });
        }
        let mut scalar = |a: f64| objective(&[a]);
        let (alpha, accepted) = self.step_scalar(state, params[0], &mut scalar)?;
        Ok(StepOutput {
            params: vec![alpha],
            evaluations: 2,
            gradient: None,
            accepted: Some(accepted),
        })
    }
}

pub type OptimizerFactory = Arc<dyn Fn(&Hyperparams) -> Result<Box<dyn Optimizer>> + Send + Sync>;

pub const BUILTIN_OPTIMIZERS: [&str; 5] = ["sgd", "adam_like", "finite_diff", "spsa", "trust_region_scalar"];

fn builtin(name: &str, hp: &Hyperparams) -> Result<Box<dyn Optimizer>> {
    Ok(match name {
        "sgd" => {
            let r = HyperparamReader::new(name, hp, &["lr"])?;
            Box::new(Sgd { lr: r.required("lr")? })
        }
        "adam_like" => {
            let r = HyperparamReader::new(name, hp, &["lr", "beta1", "beta2", "eps"])?;
            Box::new(AdamLike {
                lr: r.required("lr")?,
                beta1: r.or("beta1", 0.9),
                beta2: r.or("beta2", 0.999),
                eps: r.or("eps", 1e-8),
            })
        }
        "finite_diff" => {
            let r = HyperparamReader::new(name, hp, &["lr", "h"])?;
            let h = r.or("h", 1e-4);
            if h.is_nan() || h <= 0.0 {
                return Err(Error::InvalidConfig("finite_diff step h must be > 0".into()));
            }
            Box::new(FiniteDiff {
                lr: r.required("lr")?,
                h,
            })
        }
        "spsa" => {
            let r = HyperparamReader::new(name, hp, &["a", "c", "A", "alpha", "gamma"])?;
            let spsa = Spsa {
                a: r.or("a", 0.1),
                c: r.or("c", 0.1),
                big_a: r.or("A", 10.0),
                alpha: r.or("alpha", 0.602),
                gamma: r.or("gamma", 0.101),
            };
            if spsa.c.is_nan() || spsa.c <= 0.0 {
                return Err(Error::InvalidConfig("spsa perturbation c must be > 0".into()));
            }
            Box::new(spsa)
        }
        "trust_region_scalar" => {
            let r = HyperparamReader::new(name, hp, &["r0", "r_min", "r_max", "grow", "shrink"])?;
            let d = TrustRegionScalar::default();
            let tr = TrustRegionScalar {
                r0: r.or("r0", d.r0),
                r_min: r.or("r_min", d.r_min),
                r_max: r.or("r_max", d.r_max),
                grow: r.or("grow", d.grow),
                shrink: r.or("shrink", d.shrink),
            };
            tr.validate()?;
            Box::new(tr)
        }
        other => return Err(Error::UnknownOptimizer(other.to_string())),
    })
}

/// Built-ins first, then user registrations in insertion order.
#[derive(Clone)]
pub struct OptimizerRegistry {
    entries: Vec<(String, OptimizerFactory)>,
}

impl fmt::Debug for OptimizerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Default for OptimizerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl OptimizerRegistry {
    pub fn with_builtins() -> Self {
        let entries = BUILTIN_OPTIMIZERS
            .iter()
            .map(|name| {
                let key = name.to_string();
                let factory: OptimizerFactory = Arc::new(move |hp: &Hyperparams| builtin(name, hp));
                (key, factory)
            })
            .collect();
        Self { entries }
    }

    pub fn register(&mut self, name: impl Into<String>, factory: OptimizerFactory) -> Result<&mut Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::DuplicateName(name));
        }
        self.entries.push((name, factory));
        Ok(self)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn create(&self, spec: &OptimizerSpec, seed: u64) -> Result<(Box<dyn Optimizer>, OptimizerState)> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| *n == spec.name)
            .ok_or_else(|| Error::UnknownOptimizer(spec.name.clone()))?;
        let optimizer = factory(&spec.hyperparams)?;
        let state = optimizer.init_state(seed);
        Ok((optimizer, state))
    }
}
