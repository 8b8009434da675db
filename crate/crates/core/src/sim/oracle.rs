//! Noise-free reference trajectory obtained purely from the closed-form loop
//! transfer functions.
//!
//! The outer characteristic polynomial has several roots crowding `z = 1`;
//! expanded in `f64` its roots move by ~1e-12, which a long trace amplifies
//! well past the 1e-9 agreement the simulator is held to. Polynomial assembly
//! and filtering therefore run in double-double arithmetic.

use twofloat::TwoFloat;

use super::{Scenario, SimSample, SimTrace};
use crate::error::{Error, Result};
use crate::loops::{DobConfig, MeasurementKind, OuterGains};
#[cfg(test)]
use crate::zalg::Polynomial;

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// `a / b` to full double-double precision. `TwoFloat / TwoFloat` is only
/// f64-accurate in twofloat 0.8, so one Newton correction is applied.
fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q = a / b;
    q + (a - q * b) / b.hi()
}

/// Ascending-power polynomial with double-double coefficients.
#[derive(Clone, Debug, PartialEq)]
struct DdPoly(Vec<TwoFloat>);

impl DdPoly {
    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self(Vec::new());
        }
        let mut out = vec![dd(0.0); self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out)
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let at = |p: &Self, k: usize| p.0.get(k).copied().unwrap_or(dd(0.0));
        Self((0..n).map(|k| at(self, k) + at(other, k)).collect())
    }

    fn scale(&self, k: f64) -> Self {
        Self(self.0.iter().map(|&c| c * k).collect())
    }

    fn scale_dd(&self, k: TwoFloat) -> Self {
        Self(self.0.iter().map(|&c| c * k).collect())
    }

    /// Quotient and remainder of division by `z - 1`.
    fn deflate_unit(&self) -> (Self, TwoFloat) {
        let n = self.0.len();
        if n < 2 {
            return (Self(Vec::new()), self.0.first().copied().unwrap_or(dd(0.0)));
        }
        let mut q = vec![dd(0.0); n - 1];
        let mut carry = self.0[n - 1];
        for k in (0..n - 1).rev() {
            q[k] = carry;
            carry = self.0[k] + carry;
        }
        (Self(q), carry)
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.hi().abs()).fold(0.0, f64::max)
    }
}

/// Divide out common `(z - 1)` factors so that the plant integrators cancel
/// against the structural DC zeros instead of being realised as marginal poles.
fn cancel_dc(mut num: DdPoly, mut den: DdPoly) -> (DdPoly, DdPoly) {
    while num.degree() > 0 && den.degree() > 0 {
        let (qn, rn) = num.deflate_unit();
        let (qd, rd) = den.deflate_unit();
        let tiny = |r: TwoFloat, p: &DdPoly| r.hi().abs() <= 1e-24 * p.max_abs();
        if !(tiny(rn, &num) && tiny(rd, &den)) {
            break;
        }
        num = qn;
        den = qd;
    }
    (num, den)
}

/// Direct form II transposed filter in double-double arithmetic.
#[derive(Clone, Debug)]
struct DdFilter {
    b: Vec<TwoFloat>,
    a: Vec<TwoFloat>,
    state: Vec<TwoFloat>,
}

impl DdFilter {
    fn new(num: &DdPoly, den: &DdPoly) -> Result<Self> {
        let n = den.degree();
        if num.degree() > n && !num.0.is_empty() {
            return Err(Error::Domain("improper TF is not causal".into()));
        }
        let a0 = den.0[n];
        let coeff = |p: &DdPoly, k: usize| div(p.0.get(n - k).copied().unwrap_or(dd(0.0)), a0);
        Ok(Self {
            b: (0..=n).map(|k| coeff(num, k)).collect(),
            a: (0..=n).map(|k| coeff(den, k)).collect(),
            state: vec![dd(0.0); n],
        })
    }

    fn step(&mut self, x: TwoFloat) -> TwoFloat {
        let y = self.b[0] * x + self.state.first().copied().unwrap_or(dd(0.0));
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { dd(0.0) };
            self.state[i] = next + self.b[i + 1] * x - self.a[i + 1] * y;
        }
        y
    }
}

/// Position, velocity and acceleration responses to one exogenous input.
struct InputPaths {
    q: DdFilter,
    qdot: DdFilter,
    u: DdFilter,
}

impl InputPaths {
    fn new(num: &DdPoly, den: &DdPoly, ts: f64) -> Result<Self> {
        let [(gp_num, gp_den), (gv_num, gv_den)] = plant_polys(ts);
        let through = |n: &DdPoly, d: &DdPoly| {
            let (n, d) = cancel_dc(num.mul(n), den.mul(d));
            DdFilter::new(&n, &d)
        };
        Ok(Self {
            q: through(&gp_num, &gp_den)?,
            qdot: through(&gv_num, &gv_den)?,
            u: DdFilter::new(num, den)?,
        })
    }

    fn step(&mut self, x: f64) -> (TwoFloat, TwoFloat, TwoFloat) {
        let x = dd(x);
        (self.q.step(x), self.qdot.step(x), self.u.step(x))
    }
}

/// Inner-loop compensator numerator and denominator and the sensitivity
/// numerator, rebuilt from the primitive parameters in double-double.
fn inner_polys(cfg: &DobConfig) -> (DdPoly, DdPoly, DdPoly) {
    let p = &cfg.plant;
    let ts = dd(cfg.ts);
    let alpha = div(dd(p.j_mn) * p.k_tau, dd(p.j_m) * p.k_tau_n);
    let g = dd(cfg.g_dob);
    let a = alpha * g * ts;
    let one = dd(1.0);
    let q_den = DdPoly(vec![-one, one + g * ts]);
    let dc = DdPoly(vec![-one, one]);
    match cfg.kind {
        MeasurementKind::Acceleration => {
            (q_den.scale_dd(alpha), DdPoly(vec![-one, one + a]), dc)
        }
        MeasurementKind::Velocity => (q_den.scale_dd(alpha), DdPoly(vec![a - one, one]), dc),
        MeasurementKind::Position => {
            let g_v = dd(cfg.g_v.unwrap_or(0.0));
            let gvt = g_v * ts;
            let k = alpha * ts * ts * g_v * g * 0.5;
            let est_den = DdPoly(vec![-one, one + gvt]);
            let cl = DdPoly(vec![one + k, k - gvt - 2.0, one + gvt]);
            (q_den.mul(&est_den).scale_dd(alpha), cl, dc.mul(&est_den))
        }
    }
}

/// `((K_P + K_D/Ts) z - K_D/Ts) / z`
fn pd_polys(gains: &OuterGains, ts: f64) -> (DdPoly, DdPoly) {
    let d = dd(gains.kd) / ts;
    (DdPoly(vec![-d, d + gains.kp]), DdPoly(vec![dd(0.0), dd(1.0)]))
}

/// `G_P = Ts^2 (z + 1) / (2 (z - 1)^2)` and `G_v = Ts / (z - 1)`.
fn plant_polys(ts: f64) -> [(DdPoly, DdPoly); 2] {
    let h = dd(ts) * ts * 0.5;
    let one = dd(1.0);
    [
        (DdPoly(vec![h, h]), DdPoly(vec![one, dd(-2.0), one])),
        (DdPoly(vec![dd(ts)]), DdPoly(vec![-one, one])),
    ]
}

/// Same outputs as [`super::simulate`] for a noise-free scenario, computed by
/// filtering the exogenous signals through the loop transfer functions:
/// `u = C^i S^o r_ff - S^i S^o tau_d / J_m`, `q = G_P u`, `qdot = G_v u`.
pub fn simulate_linear_oracle(sc: &Scenario) -> Result<SimTrace> {
    sc.validate()?;
    if !sc.noise.is_zero() {
        return Err(Error::UnsupportedScenario(
            "the linear oracle is defined for noise-free scenarios only".into(),
        ));
    }
    let cfg = &sc.cfg;
    let p = &cfg.plant;
    let ts = cfg.ts;
    let (c_num, c_den, s_num) = inner_polys(cfg);
    // S and C of the inner loop share their denominator.
    let s_num = s_num.scale(-1.0 / p.j_m);

    let (mut from_r, mut from_d, mut pd_filter) = match sc.gains {
        None => (
            InputPaths::new(&c_num, &c_den, ts)?,
            InputPaths::new(&s_num, &c_den, ts)?,
            None,
        ),
        Some(gains) => {
            let (pd_num, pd_den) = pd_polys(&gains, ts);
            let [(gp_num, gp_den), _] = plant_polys(ts);
            let d = pd_den.mul(&gp_den);
            let char_o = d.mul(&c_den).add(&pd_num.mul(&gp_num).mul(&c_num));
            (
                InputPaths::new(&c_num.mul(&d), &char_o, ts)?,
                InputPaths::new(&s_num.mul(&d), &char_o, ts)?,
                Some(DdFilter::new(&pd_num, &pd_den)?),
            )
        }
    };

    let mut trace = SimTrace { ts, samples: Vec::with_capacity(sc.steps()), diverged: false };
    for k in 0..sc.steps() {
        let t = k as f64 * ts;
        let (q_ref, _, _) = sc.reference.at(t);
        let r_ff = sc.feedforward(t);
        let tau_d = sc.disturbance_at(t);
        let (q_r, v_r, u_r) = from_r.step(r_ff);
        let (q_d, v_d, u_d) = from_d.step(tau_d);
        let (q, qdot, u) = (q_r + q_d, v_r + v_d, u_r + u_d);
        let qddot_des = match pd_filter.as_mut() {
            Some(f) => dd(r_ff) - f.step(q),
            None => dd(r_ff),
        };
        let current = (u * p.j_m + tau_d) / p.k_tau;
        let tau_dis_hat = current * p.k_tau_n - qddot_des * p.j_mn;
        let (q, qdot, u) = (f64::from(q), f64::from(qdot), f64::from(u));
        let stop = trace.push(SimSample {
            t,
            q_ref,
            q,
            qdot,
            qddot: u,
            q_meas: q,
            qdot_meas: qdot,
            qddot_meas: u,
            i_des: p.j_mn / p.k_tau_n * f64::from(qddot_des),
            current: f64::from(current),
            tau_d,
            tau_dis_hat: f64::from(tau_dis_hat),
        });
        if stop {
            break;
        }
    }
    Ok(trace)
}
