//! Losses and diagnostic metrics.
//!
//! Losses: branch coherence (variance or MAD around the branch center),
//! triadic consistency, and the MSE / MAE / cross-entropy task objectives.
//! Metrics: ROC area and lag-aware recall for anomalies, overshoot and
//! settling time for state trajectories, and MAPE / MASE / lag-delta / RMSE
//! for forecasts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FutureSet, StateVector};

/// Floor applied to predictions before cross-entropy normalization.
pub const CE_CLIP: f64 = 1e-12;
/// Guard for the overshoot denominator.
pub const OVERSHOOT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMode {
    #[default]
    Var,
    Mad,
}

/// Column means accumulated as offsets from the first row, so identical
/// branches give that row back exactly and the dispersion is exactly zero.
fn offset_center(futures: &FutureSet) -> Vec<f64> {
    let first = futures.row(0);
    let mut sums = vec![0.0; futures.dim()];
    for row in futures.rows() {
        for ((acc, v), r) in sums.iter_mut().zip(row).zip(first) {
            *acc += v - r;
        }
    }
    let k = futures.branches() as f64;
    sums.into_iter().zip(first).map(|(s, r)| r + s / k).collect()
}

/// Mean squared (or absolute) deviation of every entry from its column mean.
pub fn loss_coherence(futures: &FutureSet, mode: CoherenceMode) -> f64 {
    let center = offset_center(futures);
    let total: f64 = futures
        .rows()
        .flat_map(|row| row.iter().zip(&center).map(|(v, c)| v - c))
        .map(|d| match mode {
            CoherenceMode::Var => d * d,
            CoherenceMode::Mad => d.abs(),
        })
        .sum();
    total / (futures.branches() * futures.dim()) as f64
}

/// Weights of the past (`alpha`) and predicted-future (`beta`) deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be finite and >= 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

fn squared_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    b.expect_dim(a.dim())?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum())
}

/// `alpha·‖S_t − S_prev‖² + beta·‖S_t − Ŝ‖²`.
pub fn loss_consistency(
    previous: &StateVector,
    current: &StateVector,
    predicted: &StateVector,
    weights: LossWeights,
) -> Result<f64> {
    weights.validate()?;
    let past = squared_distance(current, previous)?;
    let future = squared_distance(current, predicted)?;
    Ok(weights.alpha * past + weights.beta * future)
}

/// Equal-length, nonempty predictions and targets (already flattened).
#[derive(Debug, Clone, Copy)]
pub struct SeriesPair<'a> {
    predictions: &'a [f64],
    targets: &'a [f64],
}

impl<'a> SeriesPair<'a> {
    pub fn new(predictions: &'a [f64], targets: &'a [f64]) -> Result<Self> {
        if predictions.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: predictions.len(),
                right: targets.len(),
            });
        }
        if predictions.is_empty() {
            return Err(Error::Empty("series"));
        }
        if let Some(index) = predictions.iter().chain(targets).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: index % predictions.len(),
            });
        }
        Ok(Self {
            predictions,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn predictions(&self) -> &'a [f64] {
        self.predictions
    }

    pub fn targets(&self) -> &'a [f64] {
        self.targets
    }

    fn residuals(&self) -> impl Iterator<Item = f64> + 'a {
        self.predictions.iter().zip(self.targets).map(|(p, t)| p - t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskLoss {
    Mse,
    Mae,
    Ce,
}

pub fn loss_task(pair: &SeriesPair<'_>, kind: TaskLoss) -> Result<f64> {
    let n = pair.len() as f64;
    match kind {
        TaskLoss::Mse => Ok(pair.residuals().map(|r| r * r).sum::<f64>() / n),
        TaskLoss::Mae => Ok(pair.residuals().map(f64::abs).sum::<f64>() / n),
        TaskLoss::Ce => {
            if let Some(i) = pair.targets.iter().position(|t| *t < 0.0) {
                return Err(Error::NegativeTarget(i));
            }
            let clipped: Vec<f64> = pair.predictions.iter().map(|p| p.max(CE_CLIP)).collect();
            let norm: f64 = clipped.iter().sum();
            Ok(-pair
                .targets
                .iter()
                .zip(&clipped)
                .map(|(t, p)| t * (p / norm).ln())
                .sum::<f64>())
        }
    }
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    loss_task(&SeriesPair::new(predictions, targets)?, TaskLoss::Mse)
}

fn check_labels(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((positives, negatives))
}

/// `(FPR, TPR)` at every distinct score (descending) preceded by the `+∞`
/// sentinel, using `score >= threshold` as the positive prediction.
fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    let (p, n) = check_labels(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(points)
}

/// `½(Σ TPR_i / N_thr + Σ FPR_i / N_thr)` over the threshold set.
///
/// This is the averaged-rates expression taken literally; it is not the
/// area under the ROC curve in general. See [`roc_auc_trapezoid`].
pub fn roc_auc_mean_rates(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let points = roc_points(scores, labels)?;
    let n_thr = points.len() as f64;
    let tpr: f64 = points.iter().map(|(_, t)| t).sum();
    let fpr: f64 = points.iter().map(|(f, _)| f).sum();
    Ok(0.5 * (tpr / n_thr + fpr / n_thr))
}

/// Trapezoidal area under the `(FPR, TPR)` curve.
pub fn roc_auc_trapezoid(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let points = roc_points(scores, labels)?;
    Ok(points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum())
}

/// Fraction of anomaly onsets (rising edges of `labels`) followed by a
/// detection within `lag` steps, onset included.
pub fn lag_recall(labels: &[bool], detections: &[bool], lag: usize) -> Result<f64> {
    if labels.len() != detections.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: detections.len(),
        });
    }
    let onsets: Vec<usize> = (0..labels.len())
        .filter(|&t| labels[t] && (t == 0 || !labels[t - 1]))
        .collect();
    if onsets.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    let hits = onsets
        .iter()
        .filter(|&&t| (t..=t.saturating_add(lag)).take_while(|i| *i < detections.len()).any(|i| detections[i]))
        .count();
    Ok(hits as f64 / onsets.len() as f64)
}

/// Threshold applied to scores when no detection sequence is supplied.
pub const DETECTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyMetrics {
    pub roc_auc_mean_rates: f64,
    pub roc_auc_trapezoid: f64,
    pub lag_recall: f64,
}

pub fn metric_anomaly(
    scores: &[f64],
    labels: &[bool],
    lag: usize,
    detections: Option<&[bool]>,
) -> Result<AnomalyMetrics> {
    let thresholded: Vec<bool>;
    let detections = match detections {
        Some(d) => d,
        None => {
            thresholded = scores.iter().map(|s| *s >= DETECTION_THRESHOLD).collect();
            &thresholded
        }
    };
    Ok(AnomalyMetrics {
        roc_auc_mean_rates: roc_auc_mean_rates(scores, labels)?,
        roc_auc_trapezoid: roc_auc_trapezoid(scores, labels)?,
        lag_recall: lag_recall(labels, detections, lag)?,
    })
}

fn check_trajectory(trajectory: &[StateVector], t: usize) -> Result<()> {
    if t >= trajectory.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: trajectory.len(),
        });
    }
    let dim = trajectory[0].dim();
    for s in trajectory {
        s.expect_dim(dim)?;
    }
    Ok(())
}

/// Relative jump of the largest component of `S_t` against `S_{t-1}`,
/// both read at `j* = argmax_j S_{t,j}`.
pub fn overshoot(trajectory: &[StateVector], t: usize) -> Result<f64> {
    check_trajectory(trajectory, t)?;
    if t == 0 {
        // needs S_{t-1}
        return Err(Error::IndexOutOfRange {
            index: 0,
            len: trajectory.len(),
        });
    }
    let current = &trajectory[t];
    let previous = &trajectory[t - 1];
    let mut j_star = 0;
    for j in 1..current.dim() {
        if current[j] > current[j_star] {
            j_star = j;
        }
    }
    let denom = previous[j_star].abs().max(OVERSHOOT_FLOOR);
    Ok((current[j_star] - previous[j_star]) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettlingMode {
    /// Smallest `k` after which every later sample stays inside the ball.
    #[default]
    Persistent,
    /// Smallest `k` whose sample is inside the ball.
    FirstEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Settling {
    Settled(usize),
    /// The trajectory ends before the condition is met.
    HorizonExceeded,
}

/// Offset `k ≥ 1` at which `‖S_{t+k} − S_t‖₂ < epsilon` holds.
pub fn settling_time(
    trajectory: &[StateVector],
    t: usize,
    epsilon: f64,
    mode: SettlingMode,
) -> Result<Settling> {
    check_trajectory(trajectory, t)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let reference = &trajectory[t];
    let inside: Vec<bool> = trajectory[t + 1..]
        .iter()
        .map(|s| squared_distance(reference, s).map(|d| d.sqrt() < epsilon))
        .collect::<Result<_>>()?;
    let horizon = inside.len();
    Ok(match mode {
        SettlingMode::FirstEntry => inside
            .iter()
            .position(|v| *v)
            .map_or(Settling::HorizonExceeded, |i| Settling::Settled(i + 1)),
        SettlingMode::Persistent => match inside.iter().rposition(|v| !*v) {
            _ if horizon == 0 => Settling::HorizonExceeded,
            None => Settling::Settled(1),
            Some(i) if i + 1 == horizon => Settling::HorizonExceeded,
            Some(i) => Settling::Settled(i + 2),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlMetrics {
    pub overshoot: f64,
    pub settling_time: Settling,
}

pub fn metric_control(trajectory: &[StateVector], t: usize, epsilon: f64) -> Result<ControlMetrics> {
    Ok(ControlMetrics {
        overshoot: overshoot(trajectory, t)?,
        settling_time: settling_time(trajectory, t, epsilon, SettlingMode::Persistent)?,
    })
}

/// `100/N · Σ |(p − t)/t|`.
pub fn mape(pair: &SeriesPair<'_>) -> Result<f64> {
    if let Some(i) = pair.targets.iter().position(|t| *t == 0.0) {
        return Err(Error::ZeroTarget(i));
    }
    let sum: f64 = pair
        .predictions
        .iter()
        .zip(pair.targets)
        .map(|(p, t)| ((p - t) / t).abs())
        .sum();
    Ok(100.0 * sum / pair.len() as f64)
}

/// Mean absolute error over `i = 2..N` divided by the naive one-step
/// baseline error over the same range, so the naive forecast scores 1.
pub fn mase(pair: &SeriesPair<'_>) -> Result<f64> {
    let n = pair.len();
    if n < 2 {
        return Err(Error::Empty("MASE needs at least two points"));
    }
    let scale = (n - 1) as f64;
    let numerator: f64 = (1..n)
        .map(|i| (pair.predictions[i] - pair.targets[i]).abs())
        .sum::<f64>()
        / scale;
    let baseline: f64 = (1..n)
        .map(|i| (pair.targets[i] - pair.targets[i - 1]).abs())
        .sum::<f64>()
        / scale;
    if baseline == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    Ok(numerator / baseline)
}

/// `1/(N−ℓ) · Σ_{i<N−ℓ} |p_{i+ℓ} − t_i|`.
pub fn lag_delta(pair: &SeriesPair<'_>, lag: usize) -> Result<f64> {
    let n = pair.len();
    if lag >= n {
        return Err(Error::LagTooLarge { lag, len: n });
    }
    let valid = n - lag;
    let sum: f64 = (0..valid)
        .map(|i| (pair.predictions[i + lag] - pair.targets[i]).abs())
        .sum();
    Ok(sum / valid as f64)
}

pub fn rmse(pair: &SeriesPair<'_>) -> f64 {
    loss_task(pair, TaskLoss::Mse)
        .expect("mse is total on a validated pair")
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastMetrics {
    pub mape: f64,
    pub mase: f64,
    pub lag_delta: f64,
    pub rmse: f64,
}

/// All four forecast metrics; fails if any one is undefined.
pub fn metric_forecast(pair: &SeriesPair<'_>, lag: usize) -> Result<ForecastMetrics> {
    Ok(ForecastMetrics {
        mape: mape(pair)?,
        mase: mase(pair)?,
        lag_delta: lag_delta(pair, lag)?,
        rmse: rmse(pair),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(rows: &[&[f64]]) -> FutureSet {
        FutureSet::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    fn traj(values: &[f64]) -> Vec<StateVector> {
        values.iter().map(|v| sv(&[*v])).collect()
    }

    #[test]
    fn coherence_examples() {
        let f = fs(&[&[0.0], &[2.0]]);
        assert_eq!(loss_coherence(&f, CoherenceMode::Var), 1.0);
        assert_eq!(loss_coherence(&f, CoherenceMode::Mad), 1.0);
        let same = fs(&[&[0.3, 0.1], &[0.3, 0.1], &[0.3, 0.1]]);
        assert_eq!(loss_coherence(&same, CoherenceMode::Var), 0.0);
        assert_eq!(loss_coherence(&same, CoherenceMode::Mad), 0.0);
        assert_eq!(loss_coherence(&fs(&[&[0.0, 0.0], &[0.0, 4.0]]), CoherenceMode::Var), 2.0);
    }

    #[test]
    fn consistency_examples() {
        let w = LossWeights::new(1.0, 1.0).unwrap();
        let s = sv(&[0.4, 0.2]);
        assert_eq!(loss_consistency(&s, &s, &s, w).unwrap(), 0.0);
        assert_eq!(loss_consistency(&sv(&[0.0]), &sv(&[1.0]), &sv(&[1.0]), w).unwrap(), 1.0);
        let w0 = LossWeights::new(0.0, 1.0).unwrap();
        let a = loss_consistency(&sv(&[5.0]), &sv(&[1.0]), &sv(&[0.5]), w0).unwrap();
        let b = loss_consistency(&sv(&[-3.0]), &sv(&[1.0]), &sv(&[0.5]), w0).unwrap();
        assert_eq!(a, b);
        assert!(loss_consistency(&sv(&[0.0, 1.0]), &sv(&[1.0]), &sv(&[1.0]), w).is_err());
        assert!(LossWeights::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn task_loss_examples() {
        let p = [0.3, 0.7];
        let pair = SeriesPair::new(&p, &p).unwrap();
        assert_eq!(loss_task(&pair, TaskLoss::Mse).unwrap(), 0.0);
        assert_eq!(loss_task(&pair, TaskLoss::Mae).unwrap(), 0.0);

        let pair = SeriesPair::new(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(loss_task(&pair, TaskLoss::Mse).unwrap(), 1.0);
        assert_eq!(loss_task(&pair, TaskLoss::Mae).unwrap(), 1.0);

        let pair = SeriesPair::new(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        let ce = loss_task(&pair, TaskLoss::Ce).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn task_loss_errors() {
        assert!(matches!(SeriesPair::new(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        let pair = SeriesPair::new(&[0.5, 0.5], &[1.0, -0.1]).unwrap();
        assert_eq!(loss_task(&pair, TaskLoss::Ce), Err(Error::NegativeTarget(1)));
    }

    #[test]
    fn ce_clips_non_positive_predictions() {
        let pair = SeriesPair::new(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let ce = loss_task(&pair, TaskLoss::Ce).unwrap();
        assert!((0.0..1e-11).contains(&ce));
    }

    #[test]
    fn perfect_ranking() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        assert_eq!(roc_auc_trapezoid(&scores, &labels).unwrap(), 1.0);
        // thresholds {+inf, .9, .8, .2, .1}: TPR {0, .5, 1, 1, 1}, FPR {0, 0, 0, .5, 1}
        let expected = 0.5 * (3.5 / 5.0 + 1.5 / 5.0);
        assert_eq!(roc_auc_mean_rates(&scores, &labels).unwrap(), expected);
    }

    #[test]
    fn roc_requires_both_classes() {
        assert_eq!(roc_auc_trapezoid(&[0.1, 0.2], &[true, true]), Err(Error::DegenerateLabels));
    }

    #[test]
    fn lag_recall_examples() {
        assert_eq!(lag_recall(&[false, true], &[false, true], 0).unwrap(), 1.0);
        let mut labels = vec![false; 8];
        labels[3] = true;
        let mut det = vec![false; 8];
        det[5] = true;
        assert_eq!(lag_recall(&labels, &det, 1).unwrap(), 0.0);
        assert_eq!(lag_recall(&labels, &det, 2).unwrap(), 1.0);
    }

    #[test]
    fn anomaly_thresholds_scores_by_default() {
        let m = metric_anomaly(&[0.1, 0.9, 0.3, 0.2], &[false, true, false, true], 0, None).unwrap();
        assert_eq!(m.lag_recall, 0.5);
        assert_eq!(m.roc_auc_trapezoid, 0.75);
    }

    #[test]
    fn control_constant_trajectory() {
        let t = traj(&[0.5; 5]);
        let m = metric_control(&t, 1, 1e-6).unwrap();
        assert_eq!(m.overshoot, 0.0);
        assert_eq!(m.settling_time, Settling::Settled(1));
    }

    #[test]
    fn overshoot_example() {
        let os = overshoot(&traj(&[1.0, 1.2]), 1).unwrap();
        assert!((os - 0.2).abs() < 1e-12);
        assert!(overshoot(&traj(&[1.0, 1.2]), 0).is_err());
        assert!(overshoot(&traj(&[1.0, 1.2]), 2).is_err());
    }

    #[test]
    fn overshoot_uses_argmax_component() {
        let t = vec![sv(&[2.0, 0.5]), sv(&[1.0, 1.5])];
        assert_eq!(overshoot(&t, 1).unwrap(), 2.0);
        let from_zero = vec![sv(&[0.0]), sv(&[1e-9])];
        assert_eq!(overshoot(&from_zero, 1).unwrap(), 1.0);
    }

    #[test]
    fn settling_uses_final_entry() {
        // distance from S_0: k=1 out, 2 in, 3 out, 4 in, 5 in
        let t = traj(&[0.0, 1.0, 0.05, 1.0, 0.02, 0.01]);
        assert_eq!(settling_time(&t, 0, 0.1, SettlingMode::Persistent).unwrap(), Settling::Settled(4));
        assert_eq!(settling_time(&t, 0, 0.1, SettlingMode::FirstEntry).unwrap(), Settling::Settled(2));
    }

    #[test]
    fn settling_horizon_exceeded() {
        let t = traj(&[0.0, 0.01, 2.0]);
        assert_eq!(settling_time(&t, 0, 0.1, SettlingMode::Persistent).unwrap(), Settling::HorizonExceeded);
        let t = traj(&[0.0]);
        assert_eq!(settling_time(&t, 0, 0.1, SettlingMode::Persistent).unwrap(), Settling::HorizonExceeded);
    }

    #[test]
    fn forecast_identity() {
        let t = [1.0, 2.0, 4.0];
        let pair = SeriesPair::new(&t, &t).unwrap();
        let m = metric_forecast(&pair, 0).unwrap();
        assert_eq!((m.mape, m.mase, m.rmse, m.lag_delta), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn forecast_zero_target() {
        let pair = SeriesPair::new(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(rmse(&pair), 1.0);
        assert_eq!(mape(&pair), Err(Error::ZeroTarget(0)));
        assert!(metric_forecast(&pair, 0).is_err());
    }

    #[test]
    fn naive_forecast_mase_is_one() {
        let t = [1.0, 2.0, 4.0, 8.0];
        let p = [0.0, 1.0, 2.0, 4.0];
        assert_eq!(mase(&SeriesPair::new(&p, &t).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn mase_errors() {
        let pair = SeriesPair::new(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(mase(&pair), Err(Error::DegenerateBaseline));
        assert!(mase(&SeriesPair::new(&[1.0], &[1.0]).unwrap()).is_err());
    }

    #[test]
    fn lag_delta_truncates() {
        let pair = SeriesPair::new(&[9.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 7.0]).unwrap();
        assert_eq!(lag_delta(&pair, 1).unwrap(), 0.0);
        assert_eq!(lag_delta(&pair, 4), Err(Error::LagTooLarge { lag: 4, len: 4 }));
    }
}
