//! Callback dispatch around an epoch loop, the linear depth schedule, and
//! JSONL telemetry.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear circuit-depth ramp from `start` to `end` over `horizon` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthSchedule {
    pub start: usize,
    pub end: usize,
    pub horizon: usize,
}

impl DepthSchedule {
    pub fn new(start: usize, end: usize, horizon: usize) -> Result<Self> {
        let s = Self { start, end, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start == 0 || self.end == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig(format!(
                "depth schedule needs start, end, horizon >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `round(start + (end - start) * clip(e / E, 0, 1))`, rounding half away from zero.
    pub fn depth_at(&self, epoch: usize) -> usize {
        let frac = (epoch as f64 / self.horizon as f64).clamp(0.0, 1.0);
        let start = self.start as f64;
        let value = start + (self.end as f64 - start) * frac;
        value.round() as usize
    }
}

/// Context value: a real number or a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiValue {
    Real(f64),
    Text(String),
}

impl From<f64> for XiValue {
    fn from(v: f64) -> Self {
        XiValue::Real(v)
    }
}

impl From<&str> for XiValue {
    fn from(v: &str) -> Self {
        XiValue::Text(v.to_string())
    }
}

impl From<String> for XiValue {
    fn from(v: String) -> Self {
        XiValue::Text(v)
    }
}

pub type Context = BTreeMap<String, XiValue>;

/// One telemetry entry `(tau, sigma, xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    /// Seconds since the Unix epoch.
    pub tau: f64,
    pub sigma: String,
    pub xi: Context,
}

fn now_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Single-writer in-memory telemetry buffer.
///
/// Timestamps never decrease: a clock that steps backwards is clamped to the
/// previous record's `tau`.
#[derive(Debug, Clone, Default)]
pub struct TelemetryLogger {
    records: Vec<TelemetryRecord>,
}

impl TelemetryLogger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log_event(&mut self, sigma: &str, xi: Context) -> Result<&TelemetryRecord> {
        self.log_event_at(now_seconds(), sigma, xi)
    }

    /// Logs with a caller-provided timestamp, still subject to monotone correction.
    pub fn log_event_at(&mut self, tau: f64, sigma: &str, xi: Context) -> Result<&TelemetryRecord> {
        if sigma.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if !tau.is_finite() {
            return Err(Error::NonFiniteContext("tau".into()));
        }
        for (key, value) in &xi {
            if let XiValue::Real(v) = value {
                if !v.is_finite() {
                    return Err(Error::NonFiniteContext(key.clone()));
                }
            }
        }
        let tau = match self.records.last() {
            Some(last) => tau.max(last.tau),
            None => tau,
        };
        self.records.push(TelemetryRecord {
            tau,
            sigma: sigma.to_string(),
            xi,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<TelemetryRecord> {
        self.records
    }

    /// Writes one JSON object per line.
    pub fn flush_jsonl<W: Write>(&self, sink: W) -> Result<()> {
        write_jsonl(&self.records, sink)
    }
}

pub fn write_jsonl<W: Write>(records: &[TelemetryRecord], mut sink: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut sink, record)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads records written by [`write_jsonl`]. Blank lines are skipped.
pub fn load_jsonl<R: BufRead>(source: R) -> Result<Vec<TelemetryRecord>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TelemetryRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.sigma.is_empty() {
            return Err(Error::MalformedLine {
                line: i + 1,
                message: "empty event label".into(),
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// State shared with callbacks for one epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallbackContext {
    pub epoch: usize,
    pub losses: BTreeMap<String, f64>,
    pub alpha: f64,
    pub depth: usize,
    pub extra: BTreeMap<String, f64>,
}

impl CallbackContext {
    fn to_xi(&self) -> Context {
        let mut xi = Context::new();
        xi.insert("epoch".into(), XiValue::Real(self.epoch as f64));
        xi.insert("alpha".into(), XiValue::Real(self.alpha));
        xi.insert("depth".into(), XiValue::Real(self.depth as f64));
        for (k, v) in &self.losses {
            xi.insert(k.clone(), XiValue::Real(*v));
        }
        for (k, v) in &self.extra {
            xi.insert(k.clone(), XiValue::Real(*v));
        }
        xi
    }
}

pub trait Callback {
    fn on_epoch_start(&mut self, _ctx: &mut CallbackContext) {}

    fn on_epoch_end(&mut self, _ctx: &mut CallbackContext) {}

    fn on_error(&mut self, _ctx: &CallbackContext, _error: &str) {}
}

/// Sets `ctx.depth` from a [`DepthSchedule`] at the start of each epoch.
#[derive(Debug, Clone)]
pub struct DepthSchedulerCallback {
    pub schedule: DepthSchedule,
}

impl Callback for DepthSchedulerCallback {
    fn on_epoch_start(&mut self, ctx: &mut CallbackContext) {
        ctx.depth = self.schedule.depth_at(ctx.epoch);
    }
}

/// Logs `epoch_start`, `epoch_end` and `error` events.
#[derive(Debug, Default)]
pub struct TelemetryCallback {
    pub logger: TelemetryLogger,
}

impl TelemetryCallback {
    pub fn new() -> Self {
        Self::default()
    }

    fn log(&mut self, sigma: &str, xi: Context) {
        // Context values are finite by construction of the loop; a rejected
        // record is dropped rather than aborting the run.
        let _ = self.logger.log_event(sigma, xi);
    }
}

impl Callback for TelemetryCallback {
    fn on_epoch_start(&mut self, ctx: &mut CallbackContext) {
        let mut xi = Context::new();
        xi.insert("epoch".into(), XiValue::Real(ctx.epoch as f64));
        xi.insert("depth".into(), XiValue::Real(ctx.depth as f64));
        xi.insert("alpha".into(), XiValue::Real(ctx.alpha));
        self.log("epoch_start", xi);
    }

    fn on_epoch_end(&mut self, ctx: &mut CallbackContext) {
        let xi = ctx.to_xi();
        self.log("epoch_end", xi);
    }

    fn on_error(&mut self, ctx: &CallbackContext, error: &str) {
        let mut xi = Context::new();
        xi.insert("epoch".into(), XiValue::Real(ctx.epoch as f64));
        xi.insert("message".into(), XiValue::Text(error.to_string()));
        self.log("error", xi);
    }
}

/// Runs `body` for `epochs` epochs, dispatching callbacks in list order
/// around each call. A body error is reported to every callback's
/// `on_error` and then returned unchanged.
pub fn run_with_callbacks<E, F>(
    initial: CallbackContext,
    callbacks: &mut [&mut dyn Callback],
    epochs: usize,
    mut body: F,
) -> std::result::Result<CallbackContext, E>
where
    E: fmt::Display,
    F: FnMut(&mut CallbackContext) -> std::result::Result<(), E>,
{
    let mut ctx = initial;
    for epoch in 0..epochs {
        ctx.epoch = epoch;
        for cb in callbacks.iter_mut() {
            cb.on_epoch_start(&mut ctx);
        }
        if let Err(err) = body(&mut ctx) {
            let message = err.to_string();
            for cb in callbacks.iter_mut() {
                cb.on_error(&ctx, &message);
            }
            return Err(err);
        }
        for cb in callbacks.iter_mut() {
            cb.on_epoch_end(&mut ctx);
        }
    }
    Ok(ctx)
}
