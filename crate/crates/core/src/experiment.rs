//! Drift experiment: a single node driven by a phase/detuning/readout-bias
//! drifting input, with a scalar input gain `alpha` adapted every epoch.

use std::cell::RefCell;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::evaluation::{loss_coherence, loss_consistency, mse, CoherenceMode, LossWeights};
use crate::hypercausal::{HCNode, Policy};
use crate::optim::{OptimizerRegistry, OptimizerSpec, StepInput};
use crate::projectors::ProjectorSpec;
use crate::registry::{BackendRegistry, REFERENCE, SIM_ANALYTIC, SIM_SAMPLED};
use crate::runtime::{
    run_with_callbacks, write_jsonl, Callback, CallbackContext, DepthSchedule, DepthSchedulerCallback,
    TelemetryCallback, TelemetryRecord,
};
use crate::types::{BackendConfig, FutureSet, StateVector};

pub const EPOCHS_CSV: &str = "epochs.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";

/// Drift amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftParams {
    /// Peak phase drift in radians.
    pub phi_max: f64,
    /// Per-epoch multiplicative detuning slope.
    pub eps: f64,
    /// Peak readout-bias mix, in `[0, 1]`.
    pub b_max: f64,
    /// Phase offset of the readout bias.
    pub phi0: f64,
}

impl Default for DriftParams {
    fn default() -> Self {
        Self {
            phi_max: 0.1,
            eps: 5e-5,
            b_max: 0.05,
            phi0: PI / 4.0,
        }
    }
}

impl DriftParams {
    pub fn zero() -> Self {
        Self {
            phi_max: 0.0,
            eps: 0.0,
            b_max: 0.0,
            phi0: PI / 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.phi_max, self.eps, self.b_max, self.phi0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("drift parameters must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.b_max) {
            return Err(Error::InvalidConfig(format!("b_max must lie in [0, 1], got {}", self.b_max)));
        }
        Ok(())
    }
}

/// Drift values for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSignals {
    pub phi: f64,
    pub a: f64,
    pub b: f64,
}

/// `phi = phi_max sin(2πt/(T-1))`, `a = 1 + eps·t`, `b = b_max(½ + ½ sin(phi + phi0))`.
pub fn drift_signals(t: usize, epochs: usize, params: &DriftParams) -> Result<DriftSignals> {
    if epochs < 2 {
        return Err(Error::InvalidConfig(format!("drift needs at least 2 epochs, got {epochs}")));
    }
    if t >= epochs {
        return Err(Error::IndexOutOfRange { index: t, len: epochs });
    }
    let phi = params.phi_max * (2.0 * PI * t as f64 / (epochs - 1) as f64).sin();
    let a = 1.0 + params.eps * t as f64;
    let b = params.b_max * (0.5 + 0.5 * (phi + params.phi0).sin());
    Ok(DriftSignals { phi, a, b })
}

/// `x̃_i = a·(x_i + phi)`.
pub fn apply_input_drift(x: &StateVector, phi: f64, a: f64) -> Result<StateVector> {
    StateVector::new(x.iter().map(|v| a * (v + phi)).collect())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(1 - b)·S + b·sign(S)` with `sign(0) = 0`.
pub fn apply_readout_bias(state: &StateVector, b: f64) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidConfig(format!("readout bias must lie in [0, 1], got {b}")));
    }
    StateVector::new(state.iter().map(|&s| (1.0 - b) * s + b * sign(s)).collect())
}

/// `L_task + ½(L_cons + L_coh)`.
pub fn aggregate_loss(task: f64, consistency: f64, coherence: f64) -> f64 {
    task + 0.5 * (consistency + coherence)
}

/// Ramp `x0[i] = i/(D-1)` on `[0, 1]`; a single component is `0`.
pub fn base_ramp(dim: usize) -> Result<StateVector> {
    if dim == 1 {
        return StateVector::new(vec![0.0]);
    }
    StateVector::new((0..dim).map(|i| i as f64 / (dim - 1) as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentBackend {
    Analytic,
    #[default]
    Sampled,
    Reference,
}

impl ExperimentBackend {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "sampled" => Ok(Self::Sampled),
            "reference" => Ok(Self::Reference),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    pub fn registry_name(self) -> &'static str {
        match self {
            Self::Analytic => SIM_ANALYTIC,
            Self::Sampled => SIM_SAMPLED,
            Self::Reference => REFERENCE,
        }
    }
}

/// Depth ramp whose horizon defaults to the run length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthRamp {
    pub start: usize,
    pub end: usize,
    pub horizon: Option<usize>,
}

impl Default for DepthRamp {
    fn default() -> Self {
        Self {
            start: 1,
            end: 5,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub branches: usize,
    pub epochs: usize,
    pub shots: u64,
    pub depth: DepthRamp,
    pub alpha0: f64,
    pub drift: DriftParams,
    pub seed: u64,
    pub optimizer: OptimizerSpec,
    pub loss_weights: LossWeights,
    pub backend: ExperimentBackend,
    pub projector: ProjectorSpec,
    pub policy: String,
    pub coherence: CoherenceMode,
    /// Keep `alpha` at `alpha0` instead of adapting it.
    pub freeze_alpha: bool,
    /// Draw a new shot-sampling seed every epoch. By default every execution
    /// reuses `seed`, so epochs see the same sampling stream.
    pub fresh_shot_noise: bool,
    /// Window of the centered moving average of `|Δα|`.
    pub proxy_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 7,
            branches: 20,
            epochs: 300,
            shots: 1024,
            depth: DepthRamp::default(),
            alpha0: 1.0,
            drift: DriftParams::default(),
            seed: 42,
            optimizer: OptimizerSpec::new("trust_region_scalar"),
            loss_weights: LossWeights::default(),
            backend: ExperimentBackend::default(),
            projector: ProjectorSpec::default(),
            policy: "mean".into(),
            coherence: CoherenceMode::default(),
            freeze_alpha: false,
            fresh_shot_noise: false,
            proxy_window: 11,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn depth_schedule(&self) -> Result<DepthSchedule> {
        DepthSchedule::new(self.depth.start, self.depth.end, self.depth.horizon.unwrap_or(self.epochs))
    }

    /// Copy with every defaulted value written out.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.depth.horizon = Some(self.depth.horizon.unwrap_or(self.epochs));
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        if self.epochs < 2 {
            return Err(Error::InvalidConfig("epochs must be >= 2".into()));
        }
        if self.proxy_window == 0 {
            return Err(Error::InvalidConfig("proxy_window must be >= 1".into()));
        }
        if !self.alpha0.is_finite() {
            return Err(Error::InvalidConfig("alpha0 must be finite".into()));
        }
        self.drift.validate()?;
        self.loss_weights.validate()?;
        self.depth_schedule()?;
        self.backend_config(1).validate()?;
        self.projector.build()?;
        Policy::parse(&self.policy)?;
        OptimizerRegistry::with_builtins().create(&self.optimizer, 0)?;
        Ok(())
    }

    fn backend_config(&self, depth: usize) -> BackendConfig {
        let cfg = BackendConfig::new(self.dim, self.branches)
            .with_depth(depth)
            .with_seed(self.seed);
        match self.backend {
            ExperimentBackend::Sampled => cfg.with_shots(self.shots),
            _ => cfg,
        }
    }
}

/// One row of `epochs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub alpha: f64,
    pub delta_alpha: f64,
    pub loss_task: f64,
    pub loss_cons: f64,
    pub loss_coh: f64,
    pub loss_total: f64,
    pub mean_state: f64,
    pub mean_future: f64,
    pub phi: f64,
    pub a: f64,
    pub b: f64,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub logs: Vec<EpochLog>,
    pub telemetry: Vec<TelemetryRecord>,
}

/// Observed quantities of one evaluation at a fixed epoch.
struct EpochEval {
    state: StateVector,
    representative: StateVector,
    futures: FutureSet,
    task: f64,
    consistency: f64,
    coherence: f64,
    total: f64,
}

/// Everything the objective needs to re-run one epoch at another `alpha`.
struct FrozenEpoch<'a> {
    node: &'a HCNode,
    base: &'a StateVector,
    signals: DriftSignals,
    seed: u64,
    previous_state: Option<&'a StateVector>,
    previous_representative: Option<&'a StateVector>,
    weights: LossWeights,
    coherence: CoherenceMode,
}

impl FrozenEpoch<'_> {
    fn evaluate(&self, alpha: f64) -> Result<EpochEval> {
        let scaled = StateVector::new(self.base.iter().map(|v| alpha * v).collect())?;
        let x = apply_input_drift(&scaled, self.signals.phi, self.signals.a)?;
        let out = self.node.forward_seeded(&x, self.previous_state, self.seed)?;
        let state = apply_readout_bias(&out.state, self.signals.b)?;
        let representative = apply_readout_bias(&out.representative, self.signals.b)?;
        let task = match self.previous_representative {
            Some(prev) => mse(prev.as_slice(), state.as_slice())?,
            None => 0.0,
        };
        let previous = self.previous_state.unwrap_or(&state);
        let consistency = loss_consistency(previous, &state, &representative, self.weights)?;
        let coherence = loss_coherence(&out.futures, self.coherence);
        Ok(EpochEval {
            total: aggregate_loss(task, consistency, coherence),
            state,
            representative,
            futures: out.futures,
            task,
            consistency,
            coherence,
        })
    }
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const OPTIMIZER_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

fn build_node(config: &ExperimentConfig, registry: &BackendRegistry, depth: usize) -> Result<HCNode> {
    let backend: Arc<dyn Backend> = registry.create(config.backend.registry_name(), &config.backend_config(depth))?;
    Ok(HCNode::new(backend)
        .with_projector(config.projector.build()?)
        .with_policy(Policy::parse(&config.policy)?))
}

/// Runs the drift experiment with the built-in backends and optimizers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    run_experiment_with(config, &BackendRegistry::with_builtins(), &OptimizerRegistry::with_builtins())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    backends: &BackendRegistry,
    optimizers: &OptimizerRegistry,
) -> Result<ExperimentRun> {
    config.validate()?;
    let schedule = config.depth_schedule()?;
    let base = base_ramp(config.dim)?;
    let (optimizer, mut opt_state) = optimizers.create(&config.optimizer, config.seed ^ OPTIMIZER_STREAM)?;

    let mut nodes: BTreeMap<usize, HCNode> = BTreeMap::new();
    let mut logs: Vec<EpochLog> = Vec::with_capacity(config.epochs);
    let mut alpha = config.alpha0;
    let mut previous: Option<(StateVector, StateVector)> = None;

    let mut depth_cb = DepthSchedulerCallback { schedule };
    let mut telemetry_cb = TelemetryCallback::new();
    let initial = CallbackContext {
        alpha,
        depth: schedule.depth_at(0),
        ..CallbackContext::default()
    };
    {
        let mut callbacks: [&mut dyn Callback; 2] = [&mut depth_cb, &mut telemetry_cb];
        run_with_callbacks(initial, &mut callbacks, config.epochs, |ctx| -> Result<()> {
            let t = ctx.epoch;
            let depth = ctx.depth;
            let node = match nodes.entry(depth) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(build_node(config, backends, depth)?),
            };
            let signals = drift_signals(t, config.epochs, &config.drift)?;
            let frozen = FrozenEpoch {
                node,
                base: &base,
                signals,
                seed: if config.fresh_shot_noise {
                    epoch_seed(config.seed, t)
                } else {
                    config.seed
                },
                previous_state: previous.as_ref().map(|(s, _)| s),
                previous_representative: previous.as_ref().map(|(_, r)| r),
                weights: config.loss_weights,
                coherence: config.coherence,
            };
            let eval = frozen.evaluate(alpha)?;
            if !eval.total.is_finite() {
                return Err(Error::Aborted {
                    epoch: t,
                    message: "non-finite loss".into(),
                });
            }
            let delta_alpha = logs.last().map_or(0.0, |prev| alpha - prev.alpha);
            logs.push(EpochLog {
                epoch: t,
                alpha,
                delta_alpha,
                loss_task: eval.task,
                loss_cons: eval.consistency,
                loss_coh: eval.coherence,
                loss_total: eval.total,
                mean_state: eval.state.mean(),
                mean_future: eval.representative.mean(),
                phi: signals.phi,
                a: signals.a,
                b: signals.b,
                depth,
            });
            ctx.losses.insert("loss_task".into(), eval.task);
            ctx.losses.insert("loss_cons".into(), eval.consistency);
            ctx.losses.insert("loss_coh".into(), eval.coherence);
            ctx.losses.insert("loss_total".into(), eval.total);
            ctx.extra.insert("branch_std".into(), eval.futures.mean_branch_std());

            let next = if config.freeze_alpha {
                alpha
            } else {
                let failure: RefCell<Option<Error>> = RefCell::new(None);
                let mut objective = |p: &[f64]| match frozen.evaluate(p[0]) {
                    Ok(e) => e.total,
                    Err(err) => {
                        failure.borrow_mut().get_or_insert(err);
                        f64::NAN
                    }
                };
                let step = optimizer.step(&mut opt_state, &[alpha], StepInput::Objective(&mut objective));
                if let Some(err) = failure.into_inner() {
                    return Err(err);
                }
                step?.params[0]
            };
            ctx.extra.insert("alpha_used".into(), alpha);
            alpha = next;
            ctx.alpha = alpha;
            previous = Some((eval.state, eval.representative));
            Ok(())
        })?;
    }

    Ok(ExperimentRun {
        config: config.resolved(),
        logs,
        telemetry: telemetry_cb.logger.into_records(),
    })
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub epoch: usize,
    pub mean_state: f64,
    pub mean_future: f64,
    /// Absent at epoch 0.
    pub delta_alpha: Option<f64>,
    /// Centered moving average of `|Δα|` (edges truncated).
    pub drift_proxy: f64,
}

pub fn summarize(logs: &[EpochLog], window: usize) -> Result<Vec<SummaryRow>> {
    if logs.is_empty() {
        return Err(Error::EmptyLogs);
    }
    if window == 0 {
        return Err(Error::InvalidConfig("summary window must be >= 1".into()));
    }
    let deltas: Vec<Option<f64>> = (0..logs.len())
        .map(|t| (t > 0).then(|| logs[t].alpha - logs[t - 1].alpha))
        .collect();
    let left = (window - 1) / 2;
    let right = window / 2;
    let rows = (0..logs.len())
        .map(|t| {
            let lo = t.saturating_sub(left);
            let hi = (t + right).min(logs.len() - 1);
            let defined: Vec<f64> = deltas[lo..=hi].iter().flatten().map(|d| d.abs()).collect();
            let drift_proxy = if defined.is_empty() {
                0.0
            } else {
                defined.iter().sum::<f64>() / defined.len() as f64
            };
            SummaryRow {
                epoch: logs[t].epoch,
                mean_state: logs[t].mean_state,
                mean_future: logs[t].mean_future,
                delta_alpha: deltas[t],
                drift_proxy,
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_epochs_csv(path: &Path) -> Result<Vec<EpochLog>> {
    let mut reader = csv::Reader::from_path(path)?;
    let logs = reader.deserialize().collect::<std::result::Result<Vec<EpochLog>, _>>()?;
    Ok(logs)
}

pub fn telemetry_file_name(run_id: &str) -> String {
    format!("telemetry_{run_id}.jsonl")
}

/// Writes `epochs.csv`, `summary.csv`, `telemetry_<run_id>.jsonl` and
/// `config.resolved.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, run: &ExperimentRun, run_id: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&run.logs, BufWriter::new(File::create(dir.join(EPOCHS_CSV))?))?;
    let summary = summarize(&run.logs, run.config.proxy_window)?;
    write_csv(&summary, BufWriter::new(File::create(dir.join(SUMMARY_CSV))?))?;
    write_jsonl(&run.telemetry, BufWriter::new(File::create(dir.join(telemetry_file_name(run_id)))?))?;
    let mut cfg = run.config.to_json()?;
    cfg.push('\n');
    fs::write(dir.join(RESOLVED_CONFIG), cfg)?;
    Ok(())
}

/// Recomputes `summary.csv` for an existing run directory.
pub fn summarize_run_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let logs = read_epochs_csv(&dir.join(EPOCHS_CSV))?;
    let config_path = dir.join(RESOLVED_CONFIG);
    let window = if config_path.exists() {
        let file = BufReader::new(File::open(config_path)?);
        let cfg: ExperimentConfig = serde_json::from_reader(file).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.proxy_window
    } else {
        ExperimentConfig::default().proxy_window
    };
    let summary = summarize(&logs, window)?;
    write_csv(&summary, BufWriter::new(File::create(dir.join(SUMMARY_CSV))?))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_signal_values() {
        let p = DriftParams::default();
        let s = drift_signals(0, 300, &p).unwrap();
        assert_eq!(s.phi, 0.0);
        assert_eq!(s.a, 1.0);
        assert_eq!(s.b, p.b_max * (0.5 + 0.5 * p.phi0.sin()));

        let s = drift_signals(75, 301, &p).unwrap();
        assert!((s.phi - p.phi_max).abs() < 1e-15);

        let s = drift_signals(300, 301, &p).unwrap();
        assert!((s.a - 1.015).abs() < 1e-15);

        assert!(matches!(drift_signals(300, 300, &p), Err(Error::IndexOutOfRange { .. })));
        assert!(drift_signals(0, 1, &p).is_err());
    }

    #[test]
    fn input_drift() {
        let x = StateVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(apply_input_drift(&x, 0.0, 1.0).unwrap(), x);
        assert_eq!(apply_input_drift(&x, 0.5, 2.0).unwrap().as_slice(), &[3.0, 5.0]);
        let ramp = base_ramp(7).unwrap();
        let d = apply_input_drift(&ramp, 0.1, 1.0).unwrap();
        assert_eq!(d.dim(), 7);
        for (v, r) in d.iter().zip(ramp.iter()) {
            assert_eq!(*v, r + 0.1);
        }
    }

    #[test]
    fn readout_bias() {
        let s = StateVector::new(vec![0.3, -0.2]).unwrap();
        assert_eq!(apply_readout_bias(&s, 0.0).unwrap(), s);
        assert_eq!(apply_readout_bias(&s, 1.0).unwrap().as_slice(), &[1.0, -1.0]);
        let half = StateVector::new(vec![0.5]).unwrap();
        assert_eq!(apply_readout_bias(&half, 0.5).unwrap().as_slice(), &[0.75]);
        let zero = StateVector::new(vec![0.0]).unwrap();
        assert_eq!(apply_readout_bias(&zero, 0.7).unwrap().as_slice(), &[0.0]);
        assert!(apply_readout_bias(&s, 1.5).is_err());
    }

    #[test]
    fn aggregate_loss_values() {
        assert_eq!(aggregate_loss(0.0, 0.0, 0.0), 0.0);
        assert_eq!(aggregate_loss(1.0, 1.0, 1.0), 2.0);
        assert!((aggregate_loss(0.4, 0.2, 0.6) - 0.8).abs() < 1e-15);
    }

    fn log_with_alpha(epoch: usize, alpha: f64) -> EpochLog {
        EpochLog {
            epoch,
            alpha,
            delta_alpha: 0.0,
            loss_task: 0.0,
            loss_cons: 0.0,
            loss_coh: 0.0,
            loss_total: 0.0,
            mean_state: 0.25,
            mean_future: 0.5,
            phi: 0.0,
            a: 1.0,
            b: 0.0,
            depth: 1,
        }
    }

    #[test]
    fn summary_differences_and_proxy() {
        let logs: Vec<_> = [1.0, 1.1, 1.1].iter().enumerate().map(|(t, a)| log_with_alpha(t, *a)).collect();
        let rows = summarize(&logs, 11).unwrap();
        assert_eq!(rows[0].delta_alpha, None);
        assert!((rows[1].delta_alpha.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(rows[2].delta_alpha, Some(0.0));
        assert_eq!(rows[0].mean_state, 0.25);

        let flat: Vec<_> = (0..20).map(|t| log_with_alpha(t, 1.0)).collect();
        assert!(summarize(&flat, 11).unwrap().iter().all(|r| r.drift_proxy == 0.0));
        assert_eq!(summarize(&[], 11).unwrap_err(), Error::EmptyLogs);
    }

    #[test]
    fn proxy_window_is_centered() {
        let alphas = [0.0, 1.0, 1.0, 4.0, 4.0];
        let logs: Vec<_> = alphas.iter().enumerate().map(|(t, a)| log_with_alpha(t, *a)).collect();
        let rows = summarize(&logs, 3).unwrap();
        // |Δα| = [-, 1, 0, 3, 0]
        assert_eq!(rows[0].drift_proxy, 1.0);
        assert_eq!(rows[1].drift_proxy, 0.5);
        assert_eq!(rows[2].drift_proxy, 4.0 / 3.0);
        assert_eq!(rows[4].drift_proxy, 1.5);
    }

    #[test]
    fn config_round_trip_and_defaults() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let partial = ExperimentConfig::from_json(r#"{"epochs": 10, "drift": {"b_max": 0.0}}"#).unwrap();
        assert_eq!(partial.epochs, 10);
        assert_eq!(partial.drift.phi_max, 0.1);
        assert!(ExperimentConfig::from_json(r#"{"epochz": 10}"#).is_err());
        assert_eq!(cfg.resolved().depth.horizon, Some(300));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.drift.b_max = 2.0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            policy: "bogus".into(),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn short_run_logs_every_epoch() {
        let cfg = ExperimentConfig {
            epochs: 12,
            backend: ExperimentBackend::Analytic,
            ..ExperimentConfig::default()
        };
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(run.logs.len(), 12);
        assert_eq!(run.logs[0].loss_task, 0.0);
        assert_eq!(run.logs[0].delta_alpha, 0.0);
        assert_eq!(run.logs.last().unwrap().depth, 5);
        let labels: Vec<_> = run.telemetry.iter().map(|r| r.sigma.as_str()).collect();
        assert_eq!(labels.len(), 24);
        assert!(labels.chunks(2).all(|c| c == ["epoch_start", "epoch_end"]));
    }
}
