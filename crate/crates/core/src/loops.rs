//! Inner (DOb) and outer (PD) loop transfer functions.
//!
//! Inner loops are built directly in the closed forms for each measurement
//! kind; the building blocks ([`q_filter`], [`velocity_estimator`],
//! [`velocity_plant`], [`position_plant`]) are exposed separately so the closed
//! forms can be cross-checked by block-diagram reduction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::zalg::{Domain, Polynomial, RationalTf};

/// Which motion state the disturbance observer is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    Acceleration,
    Velocity,
    /// Pseudo-velocity obtained by filtered differentiation of position.
    Position,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 3] = [
        MeasurementKind::Acceleration,
        MeasurementKind::Velocity,
        MeasurementKind::Position,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementKind::Acceleration => "acceleration",
            MeasurementKind::Velocity => "velocity",
            MeasurementKind::Position => "position",
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acceleration" | "a" => Ok(MeasurementKind::Acceleration),
            "velocity" | "v" => Ok(MeasurementKind::Velocity),
            "position" | "p" => Ok(MeasurementKind::Position),
            other => Err(Error::Config(format!(
                "unknown measurement kind '{other}' (expected acceleration, velocity or position)"
            ))),
        }
    }
}

/// True and nominal servo parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantParams {
    /// True inertia, kg·m².
    pub j_m: f64,
    /// True thrust coefficient, N·m/A.
    pub k_tau: f64,
    /// Nominal inertia used by the observer.
    pub j_mn: f64,
    /// Nominal thrust coefficient used by the observer.
    pub k_tau_n: f64,
}

impl PlantParams {
    pub fn new(j_m: f64, k_tau: f64, j_mn: f64, k_tau_n: f64) -> Result<Self> {
        let p = Self { j_m, k_tau, j_mn, k_tau_n };
        p.validate()?;
        Ok(p)
    }

    /// Exact model: nominal parameters equal the true ones (alpha = 1).
    pub fn exact(j_m: f64, k_tau: f64) -> Result<Self> {
        Self::new(j_m, k_tau, j_m, k_tau)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("J_m", self.j_m),
            ("K_t", self.k_tau),
            ("J_mn", self.j_mn),
            ("K_tn", self.k_tau_n),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Nominal-to-true loop gain ratio `(J_mn K_t) / (J_m K_tn)`.
    ///
    /// This is the gain the observer loop actually sees when the nominal
    /// current-to-acceleration map `K_tn / J_mn` replaces the true `K_t / J_m`:
    /// a heavier nominal inertia or a weaker nominal thrust coefficient both
    /// raise it.
    pub fn alpha(&self) -> f64 {
        (self.j_mn * self.k_tau) / (self.j_m * self.k_tau_n)
    }

    /// Same plant with the nominal inertia rescaled so that `alpha()` equals
    /// `alpha`. The nominal thrust coefficient is left untouched.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let j_mn = alpha * self.j_m * self.k_tau_n / self.k_tau;
        Self::new(self.j_m, self.k_tau, j_mn, self.k_tau_n)
    }
}

/// Observer configuration for one inner loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DobConfig {
    pub kind: MeasurementKind,
    pub plant: PlantParams,
    /// Observer (Q filter) bandwidth, rad/s.
    pub g_dob: f64,
    /// Pseudo-velocity filter bandwidth, rad/s. Required for the position kind.
    pub g_v: Option<f64>,
    /// Sampling period, s.
    pub ts: f64,
}

impl DobConfig {
    pub fn new(
        kind: MeasurementKind,
        plant: PlantParams,
        g_dob: f64,
        g_v: Option<f64>,
        ts: f64,
    ) -> Result<Self> {
        let cfg = Self { kind, plant, g_dob, g_v, ts };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        if !(self.g_dob > 0.0 && self.g_dob.is_finite()) {
            return Err(Error::Config(format!("g_DOB must be positive, got {}", self.g_dob)));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::Config(format!("Ts must be positive, got {}", self.ts)));
        }
        match (self.kind, self.g_v) {
            (MeasurementKind::Position, None) => Err(Error::Config(
                "position measurement kind requires g_v".into(),
            )),
            (_, Some(gv)) if !(gv > 0.0 && gv.is_finite()) => {
                Err(Error::Config(format!("g_v must be positive, got {gv}")))
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.plant.alpha()
    }

    /// `alpha * g_DOB`, the product every stability bound is stated in.
    pub fn alpha_g(&self) -> f64 {
        self.alpha() * self.g_dob
    }

    /// `beta = alpha Ts^2 / 2`, defined for the position kind only.
    pub fn beta(&self) -> Option<f64> {
        (self.kind == MeasurementKind::Position).then(|| 0.5 * self.alpha() * self.ts * self.ts)
    }

    pub fn domain(&self) -> Domain {
        Domain::Discrete { ts: self.ts }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Ok(Self { plant: self.plant.with_alpha(alpha)?, ..*self })
    }

    pub fn with_g_dob(&self, g_dob: f64) -> Result<Self> {
        let cfg = Self { g_dob, ..*self };
        cfg.validate()?;
        Ok(cfg)
    }

    fn g_v_required(&self) -> Result<f64> {
        self.g_v
            .ok_or_else(|| Error::Config("position measurement kind requires g_v".into()))
    }
}

/// Outer-loop PD gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterGains {
    /// Proportional gain, 1/s².
    pub kp: f64,
    /// Derivative gain, 1/s.
    pub kd: f64,
}

impl OuterGains {
    pub fn new(kp: f64, kd: f64) -> Result<Self> {
        if !(kp > 0.0 && kp.is_finite()) {
            return Err(Error::Config(format!("K_P must be positive, got {kp}")));
        }
        if !(kd >= 0.0 && kd.is_finite()) {
            return Err(Error::Config(format!("K_D must be non-negative, got {kd}")));
        }
        Ok(Self { kp, kd })
    }
}

/// Open loop, sensitivity, complementary sensitivity, compensator and plant
/// model of one loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSet {
    pub l: RationalTf,
    pub s: RationalTf,
    pub t: RationalTf,
    /// Phase lead/lag compensator induced by the observer (identity for outer loops).
    pub c: RationalTf,
    /// Discrete plant model seen by this loop.
    pub g: RationalTf,
}

impl LoopSet {
    pub fn domain(&self) -> Domain {
        self.l.domain()
    }

    pub fn is_discrete(&self) -> bool {
        self.l.is_discrete()
    }
}

/// `Q(z) = g Ts z / ((1 + g Ts) z - 1)`, backward-Euler first-order low-pass.
pub fn q_filter(g_dob: f64, ts: f64) -> Result<RationalTf> {
    RationalTf::discrete(&[0.0, g_dob * ts], &[-1.0, 1.0 + g_dob * ts], ts)
}

/// `g_v (z - 1) / ((1 + g_v Ts) z - 1)`, filtered backward difference.
pub fn velocity_estimator(g_v: f64, ts: f64) -> Result<RationalTf> {
    RationalTf::discrete(&[-g_v, g_v], &[-1.0, 1.0 + g_v * ts], ts)
}

/// `G_v(z) = Ts / (z - 1)`: acceleration to velocity.
pub fn velocity_plant(ts: f64) -> Result<RationalTf> {
    RationalTf::discrete(&[ts], &[-1.0, 1.0], ts)
}

/// `G_P(z) = Ts^2 (z + 1) / (2 (z - 1)^2)`: ZOH acceleration to position.
pub fn position_plant(ts: f64) -> Result<RationalTf> {
    let h = 0.5 * ts * ts;
    RationalTf::discrete(&[h, h], &[1.0, -2.0, 1.0], ts)
}

/// Closed-form discrete inner loop for the configured measurement kind.
pub fn make_inner_loop(cfg: &DobConfig) -> Result<LoopSet> {
    cfg.validate()?;
    let ts = cfg.ts;
    let alpha = cfg.alpha();
    let a = cfg.alpha_g() * ts;
    let gt = cfg.g_dob * ts;
    let dom = cfg.domain();
    let p = |c: &[f64]| Polynomial::new(c);
    let tf = |n: Polynomial, d: Polynomial| RationalTf::new(n, d, dom);

    // (1 + g Ts) z - 1, the Q-filter denominator shared by every compensator.
    let q_den = p(&[-1.0, 1.0 + gt]);

    match cfg.kind {
        MeasurementKind::Acceleration => {
            let cl = p(&[-1.0, 1.0 + a]);
            Ok(LoopSet {
                l: tf(p(&[0.0, a]), p(&[-1.0, 1.0]))?,
                s: tf(p(&[-1.0, 1.0]), cl.clone())?,
                t: tf(p(&[0.0, a]), cl.clone())?,
                c: tf(q_den.scale(alpha), cl)?,
                g: RationalTf::identity(dom),
            })
        }
        MeasurementKind::Velocity => {
            let cl = p(&[-(1.0 - a), 1.0]);
            Ok(LoopSet {
                l: tf(p(&[a]), p(&[-1.0, 1.0]))?,
                s: tf(p(&[-1.0, 1.0]), cl.clone())?,
                t: tf(p(&[a]), cl.clone())?,
                c: tf(q_den.scale(alpha), cl)?,
                g: velocity_plant(ts)?,
            })
        }
        MeasurementKind::Position => {
            let gvt = cfg.g_v_required()? * ts;
            let k = cfg.beta().expect("position kind") * cfg.g_v_required()? * cfg.g_dob;
            let est_den = p(&[-1.0, 1.0 + gvt]);
            let open_den = &p(&[-1.0, 1.0]) * &est_den;
            let open_num = p(&[k, k]);
            // (1 + g_v Ts) z^2 - (2 + g_v Ts - k) z + 1 + k
            let cl = p(&[1.0 + k, -(2.0 + gvt - k), 1.0 + gvt]);
            Ok(LoopSet {
                l: tf(open_num.clone(), open_den.clone())?,
                s: tf(open_den, cl.clone())?,
                t: tf(open_num, cl.clone())?,
                c: tf((&q_den * &est_den).scale(alpha), cl)?,
                g: position_plant(ts)?,
            })
        }
    }
}

/// Continuous-time inner loop with `L(s) = alpha g_DOB / s`.
pub fn make_continuous_inner(plant: &PlantParams, g_dob: f64) -> Result<LoopSet> {
    plant.validate()?;
    if !(g_dob >= 0.0 && g_dob.is_finite()) {
        return Err(Error::Config(format!("g_DOB must be non-negative, got {g_dob}")));
    }
    let alpha = plant.alpha();
    let a = alpha * g_dob;
    let cl = [a, 1.0];
    Ok(LoopSet {
        l: RationalTf::continuous(&[a], &[0.0, 1.0])?,
        s: RationalTf::continuous(&[0.0, 1.0], &cl)?,
        t: RationalTf::continuous(&[a], &cl)?,
        c: RationalTf::continuous(&[alpha * g_dob, alpha], &cl)?,
        g: RationalTf::continuous(&[1.0], &[0.0, 0.0, 1.0])?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompensatorPhase {
    Lead,
    Lag,
    /// `C ≡ 1` to round-off (acceleration kind at `alpha = 1`).
    Neutral,
}

impl CompensatorPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            CompensatorPhase::Lead => "lead",
            CompensatorPhase::Lag => "lag",
            CompensatorPhase::Neutral => "neutral",
        }
    }
}

/// Lead or lag from the sign of the low-frequency phase slope
/// `d arg C(e^{jθ}) / dθ |_{θ=0} = C'(1) / C(1)`.
pub fn compensator_phase(c: &RationalTf) -> Result<CompensatorPhase> {
    if !c.is_discrete() {
        return Err(Error::Domain("phase classification needs a discrete compensator".into()));
    }
    let (n, d) = (c.num(), c.den());
    let a = n.derivative().eval(1.0) * d.eval(1.0);
    let b = n.eval(1.0) * d.derivative().eval(1.0);
    let slope = (a - b) * n.eval(1.0).signum() * d.eval(1.0).signum();
    Ok(if (a - b).abs() <= 1e-12 * (a.abs() + b.abs()) {
        CompensatorPhase::Neutral
    } else if slope > 0.0 {
        CompensatorPhase::Lead
    } else {
        CompensatorPhase::Lag
    })
}

/// Backward-Euler PD: `C(z) = K_P + K_D (z - 1) / (Ts z)`.
pub fn make_pd(gains: &OuterGains, ts: f64) -> Result<RationalTf> {
    let d = gains.kd / ts;
    RationalTf::discrete(&[-d, gains.kp + d], &[0.0, 1.0], ts)
}

/// Outer position loop `L = C(z) C^i(z) G_P(z)` closed with unity feedback.
pub fn make_outer_loop(inner: &LoopSet, pd: &RationalTf, ts: f64) -> Result<LoopSet> {
    if !inner.is_discrete() {
        return Err(Error::Domain("outer loop needs a discrete inner loop".into()));
    }
    let g = position_plant(ts)?;
    let l = pd.series(&inner.c)?.series(&g)?;
    Ok(LoopSet {
        s: l.sensitivity()?,
        t: l.feedback_unity()?,
        c: RationalTf::identity(l.domain()),
        g,
        l,
    })
}

/// Convenience: inner loop, PD and outer loop in one call.
pub fn make_position_system(cfg: &DobConfig, gains: &OuterGains) -> Result<(LoopSet, LoopSet)> {
    let inner = make_inner_loop(cfg)?;
    let pd = make_pd(gains, cfg.ts)?;
    let outer = make_outer_loop(&inner, &pd, cfg.ts)?;
    Ok((inner, outer))
}
