//! Closed-form stability constraints, pole classification and root-locus
//! sweeps.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loops::{make_position_system, DobConfig, MeasurementKind, OuterGains};
use crate::zalg::RationalTf;

/// Poles with `|p| >= 1 - UNIT_TOL` are not "inside" the unit circle.
pub const UNIT_TOL: f64 = 1e-9;
/// Imaginary parts up to this are treated as real by the classifier.
pub const REAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindingConstraint {
    None,
    /// `alpha g_DOB < 2 / Ts`
    TwoOverTs,
    /// Velocity kind: `alpha g_DOB < 1 / Ts`
    VelocityNonOscillation,
    /// Position kind: the pseudo-velocity non-oscillation bound, see
    /// [`position_non_oscillation_bound`].
    PositionNonOscillation,
}

impl BindingConstraint {
    pub fn as_str(&self) -> &'static str {
        match self {
            BindingConstraint::None => "none",
            BindingConstraint::TwoOverTs => "two_over_Ts",
            BindingConstraint::VelocityNonOscillation => "velocity_non_oscillation",
            BindingConstraint::PositionNonOscillation => "position_non_oscillation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub non_oscillatory: bool,
    pub binding_constraint: BindingConstraint,
    /// `bound - alpha g_DOB` for the binding constraint, rad/s. Zero means
    /// marginal; infinite when nothing binds.
    pub margin: f64,
}

/// Largest `alpha g_DOB` keeping both inner poles of the position-kind loop
/// real and inside `(0, 1)`:
///
/// `6/Ts + (8 - sqrt(32 (2 + g_v Ts)(1 + g_v Ts))) / (g_v Ts^2)`
pub fn position_non_oscillation_bound(g_v: f64, ts: f64) -> f64 {
    let c = g_v * ts;
    6.0 / ts + (8.0 - (32.0 * (2.0 + c) * (1.0 + c)).sqrt()) / (g_v * ts * ts)
}

/// Closed-form inner-loop verdict.
pub fn constraint_check(cfg: &DobConfig) -> StabilityVerdict {
    let ag = cfg.alpha_g();
    let stability_bound = 2.0 / cfg.ts;
    let (osc_bound, osc_kind) = match cfg.kind {
        MeasurementKind::Acceleration => {
            return StabilityVerdict {
                stable: true,
                non_oscillatory: true,
                binding_constraint: BindingConstraint::None,
                margin: f64::INFINITY,
            }
        }
        MeasurementKind::Velocity => (1.0 / cfg.ts, BindingConstraint::VelocityNonOscillation),
        MeasurementKind::Position => (
            position_non_oscillation_bound(cfg.g_v.unwrap_or(f64::NAN), cfg.ts),
            BindingConstraint::PositionNonOscillation,
        ),
    };
    let stable = ag < stability_bound;
    let non_oscillatory = stable && ag < osc_bound;
    let (binding_constraint, margin) = if stable {
        (osc_kind, osc_bound - ag)
    } else {
        (BindingConstraint::TwoOverTs, stability_bound - ag)
    };
    StabilityVerdict { stable, non_oscillatory, binding_constraint, margin }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleClass {
    pub max_mag: f64,
    pub all_in_unit: bool,
    pub all_real_in_0_1: bool,
}

pub fn classify_roots(roots: &[Complex64]) -> PoleClass {
    let max_mag = roots.iter().fold(0.0_f64, |m, r| m.max(r.norm()));
    let all_in_unit = roots.iter().all(|r| r.norm() < 1.0 - UNIT_TOL);
    let all_real_in_0_1 = all_in_unit
        && roots
            .iter()
            .all(|r| r.im.abs() <= REAL_TOL && r.re > 0.0 && r.re < 1.0 - UNIT_TOL);
    PoleClass { max_mag, all_in_unit, all_real_in_0_1 }
}

/// Classify the denominator roots of a discrete TF.
pub fn classify_poles(tf: &RationalTf) -> Result<PoleClass> {
    if !tf.is_discrete() {
        return Err(Error::Domain("pole classification needs a discrete TF".into()));
    }
    if tf.den().degree().unwrap_or(0) == 0 {
        return Ok(classify_roots(&[]));
    }
    Ok(classify_roots(&tf.poles()?.roots))
}

/// Closed-loop poles of the outer position loop: roots of `num(L) + den(L)`.
pub fn closed_loop_poles(cfg: &DobConfig, gains: &OuterGains) -> Result<Vec<Complex64>> {
    let (_, outer) = make_position_system(cfg, gains)?;
    Ok(outer.l.characteristic().roots()?.roots)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    GDob,
}

impl SweepParam {
    pub fn apply(&self, base: &DobConfig, value: f64) -> Result<DobConfig> {
        match self {
            SweepParam::Alpha => base.with_alpha(value),
            SweepParam::GDob => base.with_g_dob(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocusBranch {
    pub param: SweepParam,
    pub param_values: Vec<f64>,
    /// Closed-loop poles per parameter value, ordered so that index `k`
    /// follows the same branch along the sweep.
    pub poles: Vec<Vec<Complex64>>,
    pub max_magnitudes: Vec<f64>,
    /// First parameter value at which the poles leave the unit disc after
    /// having been inside it.
    pub exit_value: Option<f64>,
}

/// Reorder `current` to follow `previous` by globally greedy nearest-pair
/// matching.
pub fn match_poles(previous: &[Complex64], current: &[Complex64]) -> Vec<Complex64> {
    let n = previous.len();
    if n != current.len() {
        return current.to_vec();
    }
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ((previous[i] - current[j]).norm(), i, j))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = vec![None; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if out[i].is_none() && !taken[j] {
            out[i] = Some(current[j]);
            taken[j] = true;
        }
    }
    out.into_iter().map(|p| p.expect("complete matching")).collect()
}

/// Bisection for the point where `inside` flips from true (at `lo`) to false
/// (at `hi`), to relative precision `rel_tol` on the parameter.
pub fn bisect_boundary<F>(mut lo: f64, mut hi: f64, rel_tol: f64, inside: F) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    for _ in 0..200 {
        if (hi - lo).abs() <= rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Relative precision of [`LocusBranch::exit_value`].
pub const EXIT_REL_TOL: f64 = 1e-6;

pub fn root_locus(
    base: &DobConfig,
    gains: &OuterGains,
    param: SweepParam,
    values: &[f64],
) -> Result<LocusBranch> {
    if values.len() < 2 {
        return Err(Error::Config("root locus needs at least 2 sweep values".into()));
    }
    if !values.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Config("sweep values must be strictly increasing".into()));
    }
    let raw = values
        .par_iter()
        .map(|&v| closed_loop_poles(&param.apply(base, v)?, gains))
        .collect::<Result<Vec<_>>>()?;

    let mut poles: Vec<Vec<Complex64>> = Vec::with_capacity(raw.len());
    for set in raw {
        let ordered = match poles.last() {
            Some(prev) => match_poles(prev, &set),
            None => set,
        };
        poles.push(ordered);
    }
    let max_magnitudes: Vec<f64> = poles.iter().map(|p| classify_roots(p).max_mag).collect();
    let inside: Vec<bool> = poles.iter().map(|p| classify_roots(p).all_in_unit).collect();

    let exit_value = match inside.windows(2).position(|w| w[0] && !w[1]) {
        Some(i) => Some(bisect_boundary(values[i], values[i + 1], EXIT_REL_TOL, |v| {
            Ok(classify_roots(&closed_loop_poles(&param.apply(base, v)?, gains)?).all_in_unit)
        })?),
        None => None,
    };

    Ok(LocusBranch {
        param,
        param_values: values.to_vec(),
        poles,
        max_magnitudes,
        exit_value,
    })
}

/// `n` values from `from` to `to`, geometric when `log` is set.
pub fn sweep_values(from: f64, to: f64, n: usize, log: bool) -> Vec<f64> {
    if n < 2 {
        return vec![from];
    }
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if log {
                from * (to / from).powf(f)
            } else {
                from + (to - from) * f
            }
        })
        .collect()
}
