use super::SimTrace;
use crate::error::{Error, Result};

/// Tracking-error band (m or rad) used for the settling time by default.
pub const DEFAULT_SETTLE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RejectionMetrics {
    /// `max |q_ref - q|` over the window.
    pub max_error: f64,
    /// Time from the first disturbance edge inside the window (or the window
    /// start if there is none) until `|q_ref - q|` stays within the threshold.
    /// `None` if it never does before the window ends.
    pub settle_time: Option<f64>,
    /// RMS of `tau_d - tau_dis_hat`.
    pub rms_estimation_error: f64,
    pub diverged: bool,
}

pub fn disturbance_rejection_metrics(
    trace: &SimTrace,
    window: (f64, f64),
    threshold: f64,
) -> Result<RejectionMetrics> {
    let (t0, t1) = window;
    if !(t1 > t0) || !(threshold > 0.0) {
        return Err(Error::Config(format!(
            "invalid metric window [{t0}, {t1}] or threshold {threshold}"
        )));
    }
    let eps = 1e-9 * trace.ts;
    let idx: Vec<usize> = (0..trace.len())
        .filter(|&i| {
            let t = trace.samples[i].t;
            t >= t0 - eps && t <= t1 + eps
        })
        .collect();
    if idx.is_empty() {
        return Err(Error::Config(format!("no samples in window [{t0}, {t1}]")));
    }

    let err = |i: usize| (trace.samples[i].q_ref - trace.samples[i].q).abs();
    let max_error = idx.iter().map(|&i| err(i)).fold(0.0, f64::max);
    let sq: f64 = idx
        .iter()
        .map(|&i| (trace.samples[i].tau_d - trace.samples[i].tau_dis_hat).powi(2))
        .sum();
    let rms_estimation_error = (sq / idx.len() as f64).sqrt();

    let edge = idx
        .iter()
        .copied()
        .find(|&i| i > 0 && trace.samples[i].tau_d != trace.samples[i - 1].tau_d)
        .unwrap_or(idx[0]);
    let t_edge = trace.samples[edge].t;
    let after: Vec<usize> = idx.iter().copied().filter(|&i| i >= edge).collect();
    let settle_time = match after.iter().rposition(|&i| err(i) > threshold) {
        None => Some(0.0),
        Some(last) if last + 1 < after.len() && !trace.diverged => {
            Some(trace.samples[after[last + 1]].t - t_edge)
        }
        Some(_) => None,
    };

    Ok(RejectionMetrics {
        max_error,
        settle_time,
        rms_estimation_error,
        diverged: trace.diverged,
    })
}
