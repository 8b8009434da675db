//! Time-domain simulation of the DOb-based robust position control system.
//!
//! [`simulate`] advances the rigid-body plant by exact zero-order-hold
//! discretization and runs the observer, pseudo-velocity filter and PD
//! controller as difference equations. [`simulate_linear_oracle`] produces
//! the same noise-free trace by filtering the exogenous inputs through the
//! closed-form loop transfer functions.

mod metrics;
mod oracle;

pub use metrics::{disturbance_rejection_metrics, RejectionMetrics, DEFAULT_SETTLE_THRESHOLD};
pub use oracle::simulate_linear_oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::loops::{DobConfig, MeasurementKind, OuterGains};

/// `|q|` beyond this (m or rad) ends the trace with the divergence flag set.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    Step { amplitude: f64 },
    /// `amplitude * sin(freq * t)`, `freq` in rad/s.
    Sinusoid { amplitude: f64, freq: f64 },
    HoldZero,
}

impl Reference {
    /// Position, velocity and acceleration reference at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            Reference::Step { amplitude } => (amplitude, 0.0, 0.0),
            Reference::Sinusoid { amplitude, freq } => {
                let (s, c) = (freq * t).sin_cos();
                (amplitude * s, amplitude * freq * c, -amplitude * freq * freq * s)
            }
            Reference::HoldZero => (0.0, 0.0, 0.0),
        }
    }
}

/// A constant external disturbance acting on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceWindow {
    pub start: f64,
    pub end: f64,
    pub force: f64,
}

/// Zero-mean Gaussian sensor noise standard deviations and RNG seed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseSpec {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.position == 0.0 && self.velocity == 0.0 && self.acceleration == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// s
    pub duration: f64,
    pub cfg: DobConfig,
    /// `None` leaves the outer loop open: the acceleration reference is fed
    /// straight to the inner loop.
    pub gains: Option<OuterGains>,
    pub reference: Reference,
    pub disturbance: Vec<DisturbanceWindow>,
    pub noise: NoiseSpec,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!("duration must be positive, got {}", self.duration)));
        }
        let mut windows = self.disturbance.clone();
        windows.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in &windows {
            if !(w.start >= 0.0 && w.end > w.start && w.end <= self.duration && w.force.is_finite()) {
                return Err(Error::Config(format!(
                    "disturbance window [{}, {}) must lie within [0, {}]",
                    w.start, w.end, self.duration
                )));
            }
        }
        if windows.windows(2).any(|p| p[1].start < p[0].end) {
            return Err(Error::Config("disturbance windows overlap".into()));
        }
        for (name, v) in [
            ("position", self.noise.position),
            ("velocity", self.noise.velocity),
            ("acceleration", self.noise.acceleration),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} noise std must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of samples `floor(duration / Ts) + 1`.
    pub fn steps(&self) -> usize {
        (self.duration / self.cfg.ts + 1e-9).floor() as usize + 1
    }

    /// Disturbance at `t`, sampled and held.
    pub fn disturbance_at(&self, t: f64) -> f64 {
        let eps = 1e-6 * self.cfg.ts;
        self.disturbance
            .iter()
            .filter(|w| t >= w.start - eps && t < w.end - eps)
            .map(|w| w.force)
            .sum()
    }

    /// Acceleration command fed forward into the loop: `q̈_ref + K_P q_ref +
    /// K_D q̇_ref` with the outer loop closed, `q̈_ref` alone otherwise.
    pub(crate) fn feedforward(&self, t: f64) -> f64 {
        let (q, qd, qdd) = self.reference.at(t);
        match self.gains {
            Some(g) => qdd + g.kp * q + g.kd * qd,
            None => qdd,
        }
    }
}

/// One controller period starting at `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimSample {
    pub t: f64,
    pub q_ref: f64,
    pub q: f64,
    pub qdot: f64,
    /// Acceleration held over `[t, t + Ts)`.
    pub qddot: f64,
    pub q_meas: f64,
    pub qdot_meas: f64,
    pub qddot_meas: f64,
    pub i_des: f64,
    pub current: f64,
    pub tau_d: f64,
    pub tau_dis_hat: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub ts: f64,
    pub samples: Vec<SimSample>,
    /// Set when `|q|` exceeded [`DIVERGENCE_LIMIT`] (or became non-finite);
    /// the last sample is the first offending one.
    pub diverged: bool,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub(crate) fn push(&mut self, s: SimSample) -> bool {
        let bad = !s.q.is_finite() || s.q.abs() > DIVERGENCE_LIMIT;
        self.samples.push(s);
        if bad {
            self.diverged = true;
        }
        bad
    }
}

/// Per-sensor Gaussian noise source. All three channels are drawn every step
/// so that a given seed produces the same realisation regardless of kind.
struct NoiseSource {
    rng: ChaCha8Rng,
    spec: NoiseSpec,
}

impl NoiseSource {
    fn new(spec: NoiseSpec) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(spec.seed), spec }
    }

    fn draw(&mut self) -> (f64, f64, f64) {
        let mut n = || -> f64 { StandardNormal.sample(&mut self.rng) };
        let (a, b, c) = (n(), n(), n());
        (self.spec.position * a, self.spec.velocity * b, self.spec.acceleration * c)
    }
}

/// Run the scenario. Instability is a legitimate outcome: the trace is cut
/// short and flagged rather than reported as an error.
pub fn simulate(sc: &Scenario) -> Result<SimTrace> {
    sc.validate()?;
    let cfg = &sc.cfg;
    let p = &cfg.plant;
    let ts = cfg.ts;
    let gt = cfg.g_dob * ts;
    // Q filter: y[k] = (y[k-1] + g Ts x[k]) / (1 + g Ts); direct feedthrough `a`.
    let q_decay = 1.0 / (1.0 + gt);
    let q_feed = gt / (1.0 + gt);
    let gvt = cfg.g_v.unwrap_or(0.0) * ts;

    let mut noise = NoiseSource::new(sc.noise);
    let mut trace = SimTrace { ts, samples: Vec::with_capacity(sc.steps()), diverged: false };

    let (mut q, mut qdot) = (0.0_f64, 0.0_f64);
    let mut q_filter_state = 0.0; // y[k-1]
    let mut vel_est = 0.0; // pseudo-velocity v̂[k-1]
    let mut q_meas_prev = 0.0;

    for k in 0..sc.steps() {
        let t = k as f64 * ts;
        let (q_ref, qdot_ref, _) = sc.reference.at(t);
        let tau_d = sc.disturbance_at(t);
        let (eta_p, eta_v, eta_a) = noise.draw();
        let q_meas = q + eta_p;
        let qdot_meas = qdot + eta_v;

        let qddot_des = match sc.gains {
            Some(g) => {
                let (_, _, qddot_ref) = sc.reference.at(t);
                let backward_diff = (q_meas - q_meas_prev) / ts;
                qddot_ref + g.kp * (q_ref - q_meas) + g.kd * (qdot_ref - backward_diff)
            }
            None => sc.feedforward(t),
        };
        let i_des = p.j_mn / p.k_tau_n * qddot_des;

        // I = I_des + τ̂/K_tn with τ̂ affine in I through the Q filter's
        // feedthrough; solve I (1 - coeff) = rhs exactly.
        let carried = q_decay * q_filter_state;
        let (current, velocity_signal) = match cfg.kind {
            MeasurementKind::Acceleration => {
                // x = K_tn I - J_mn q̈_n,  q̈_n = (K_t I - τ_d)/J_m + η_A
                let x_coeff = p.k_tau_n - p.j_mn * p.k_tau / p.j_m;
                let x_const = p.j_mn * tau_d / p.j_m - p.j_mn * eta_a;
                let lhs = 1.0 - q_feed * x_coeff / p.k_tau_n;
                let rhs = i_des + (carried + q_feed * x_const) / p.k_tau_n;
                (rhs / lhs, 0.0)
            }
            MeasurementKind::Velocity | MeasurementKind::Position => {
                let v = if cfg.kind == MeasurementKind::Velocity {
                    qdot_meas
                } else {
                    (vel_est + cfg.g_v.unwrap_or(0.0) * (q_meas - q_meas_prev)) / (1.0 + gvt)
                };
                // x = K_tn I + J_mn g v,  τ̂ = y - J_mn g v
                let jg = p.j_mn * cfg.g_dob * v;
                let lhs = 1.0 - q_feed;
                let rhs = i_des + (carried + q_feed * jg - jg) / p.k_tau_n;
                (rhs / lhs, v)
            }
        };

        let accel = (p.k_tau * current - tau_d) / p.j_m;
        let qddot_meas = accel + eta_a;
        let x = match cfg.kind {
            MeasurementKind::Acceleration => p.k_tau_n * current - p.j_mn * qddot_meas,
            _ => p.k_tau_n * current + p.j_mn * cfg.g_dob * velocity_signal,
        };
        let y = carried + q_feed * x;
        let tau_dis_hat = match cfg.kind {
            MeasurementKind::Acceleration => y,
            _ => y - p.j_mn * cfg.g_dob * velocity_signal,
        };

        let stop = trace.push(SimSample {
            t,
            q_ref,
            q,
            qdot,
            qddot: accel,
            q_meas,
            qdot_meas,
            qddot_meas,
            i_des,
            current,
            tau_d,
            tau_dis_hat,
        });
        if stop {
            break;
        }

        q_filter_state = y;
        vel_est = velocity_signal;
        q_meas_prev = q_meas;
        q += ts * qdot + 0.5 * ts * ts * accel;
        qdot += ts * accel;
    }
    Ok(trace)
}
