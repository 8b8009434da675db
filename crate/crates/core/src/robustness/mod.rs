//! Bode sensitivity integrals, frequency sweeps and waterbed reports.

mod quad;

pub use quad::{adaptive_simpson, integrate_log_panels, log_panels, QuadOutcome, QuadSettings};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loops::{make_inner_loop, DobConfig, LoopSet};
use crate::zalg::{Polynomial, RationalTf};

/// Distance from the unit circle (or imaginary axis) below which a pole or
/// zero is considered to lie on it.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Default log-sweep span below the Nyquist frequency, in decades.
pub const LOG_SWEEP_DECADES: f64 = 4.0;

/// Default `peak_S` threshold of [`waterbed_report`] (about 6 dB).
pub const DEFAULT_PEAK_THRESHOLD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridStats {
    /// Accepted Simpson intervals over the regular part of the range.
    pub panels: usize,
    /// Width of the analytically integrated neighbourhood of the zero of `S`.
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodeIntegralReport {
    pub numeric_value: f64,
    pub analytic_value: f64,
    pub abs_error: f64,
    pub grid: GridStats,
}

impl BodeIntegralReport {
    fn new(numeric_value: f64, analytic_value: f64, grid: GridStats) -> Self {
        Self {
            numeric_value,
            analytic_value,
            abs_error: (numeric_value - analytic_value).abs(),
            grid,
        }
    }
}

fn ln_abs(tf: &RationalTf, x: Complex64) -> f64 {
    tf.num().eval_complex(x).norm().ln() - tf.den().eval_complex(x).norm().ln()
}

/// `sum ln|r|` over roots with `|r| > 1 + BOUNDARY_TOL`.
fn log_exterior(p: &Polynomial) -> Result<f64> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok(0.0);
    }
    Ok(p.roots()?
        .roots
        .iter()
        .map(|r| r.norm())
        .filter(|&m| m > 1.0 + BOUNDARY_TOL)
        .map(f64::ln)
        .sum())
}

fn check_off_circle(p: &Polynomial, what: &str) -> Result<()> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok(());
    }
    for r in p.roots()?.roots {
        if (r.norm() - 1.0).abs() <= BOUNDARY_TOL {
            return Err(Error::IllPosedIntegral(format!("{what} on the unit circle at z = {r}")));
        }
    }
    Ok(())
}

/// Local model `|S(x)| ≈ c · dist(x, x0)^m` around the structural zero `x0`.
struct LocalOrder {
    order: i64,
    c: f64,
}

fn local_order(s: &RationalTf, x0: f64) -> (LocalOrder, Polynomial, Polynomial) {
    let (mn, num_cof) = s.num().zero_multiplicity(x0, 1e-11);
    let (md, den_cof) = s.den().zero_multiplicity(x0, 1e-11);
    let c = (num_cof.eval(x0) / den_cof.eval(x0)).abs();
    (LocalOrder { order: mn as i64 - md as i64, c }, num_cof, den_cof)
}

/// `∫_0^δ ln(c θ^m) dθ`.
fn head_integral(lo: &LocalOrder, delta: f64) -> f64 {
    delta * lo.c.ln() + lo.order as f64 * (delta * delta.ln() - delta)
}

/// `∫_{-π}^{π} ln|S(e^{jθ})| dθ` against its closed form, default quadrature.
pub fn bode_integral_discrete(lp: &LoopSet) -> Result<BodeIntegralReport> {
    bode_integral_discrete_with(lp, &QuadSettings::default())
}

/// Discrete Bode sensitivity integral.
///
/// The numeric side integrates over `[0, π]` and doubles (conjugate
/// symmetry). The logarithmic singularity of `ln|S|` at `θ = 0` is integrated
/// analytically on `[0, δ]` from the local order of the zero of `S` at `z = 1`.
///
/// The analytic side is Jensen's formula applied to numerator and
/// denominator of `S = den(L) / (den(L) + num(L))`:
///
/// `2π ( Σ ln|p_u(L)| − ln|1 + L(∞)| − Σ ln|p_u(S)| )`
///
/// which reduces to the usual discrete Bode theorem when the closed loop is
/// stable (last sum empty).
pub fn bode_integral_discrete_with(
    lp: &LoopSet,
    settings: &QuadSettings,
) -> Result<BodeIntegralReport> {
    if !lp.is_discrete() {
        return Err(Error::Domain("discrete Bode integral needs a discrete loop".into()));
    }
    let s = &lp.s;
    check_off_circle(s.den(), "pole of S")?;
    let (lo, num_cof, den_cof) = local_order(s, 1.0);
    check_off_circle(&num_cof, "zero of S")?;
    check_off_circle(&den_cof, "pole of S")?;

    // The local model only holds well inside the distance to the nearest
    // other pole or zero, which can be tiny when S nearly cancels at DC.
    let nearest = [&num_cof, &den_cof]
        .into_iter()
        .filter(|p| p.degree().unwrap_or(0) > 0)
        .map(|p| p.roots().map(|r| r.roots.iter().map(|z| (z - 1.0).norm()).fold(f64::INFINITY, f64::min)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let delta = settings.delta.min(1e-3 * nearest);
    let head = head_integral(&lo, delta);
    // The structural factor (z - 1)^m is evaluated as (2 sin(θ/2))^m; the
    // expanded polynomials lose everything to cancellation near θ = 0.
    let body = integrate_log_panels(
        &|theta: f64| {
            let z = Complex64::from_polar(1.0, theta);
            lo.order as f64 * (2.0 * (0.5 * theta).sin()).ln() + num_cof.eval_complex(z).norm().ln()
                - den_cof.eval_complex(z).norm().ln()
        },
        delta,
        PI,
        settings,
    )?;
    let numeric = 2.0 * (head + body.value);

    let analytic = 2.0
        * PI
        * ((s.num().leading() / s.den().leading()).abs().ln() + log_exterior(&num_cof)?
            - log_exterior(&den_cof)?);

    Ok(BodeIntegralReport::new(
        numeric,
        analytic,
        GridStats { panels: body.intervals, delta },
    ))
}

/// Default truncation frequency `10^6 · lim_{s→∞} s L(s)`.
pub fn default_truncation(lp: &LoopSet) -> Result<f64> {
    Ok(1e6 * high_frequency_gain(&lp.l)?)
}

/// `lim_{s→∞} s L(s)` for a relative-degree-one loop.
fn high_frequency_gain(l: &RationalTf) -> Result<f64> {
    match l.relative_degree() {
        None => Ok(0.0),
        Some(1) => Ok(l.num().leading() / l.den().leading()),
        Some(r) => Err(Error::Domain(format!(
            "continuous Bode integral needs an open loop of relative degree 1, got {r}"
        ))),
    }
}

/// Continuous Bode sensitivity integral `∫_0^∞ ln|S(jω)| dω`.
///
/// Integrated numerically up to `truncation` (rad/s) with the first-order
/// tail `−κ²/(2Ω)` added, where `κ = lim s L(s)`. The analytic side is
/// `π Σ Re(p_u) − (π/2) κ`.
pub fn bode_integral_continuous(lp: &LoopSet, truncation: f64) -> Result<BodeIntegralReport> {
    bode_integral_continuous_with(lp, truncation, &QuadSettings::default())
}

pub fn bode_integral_continuous_with(
    lp: &LoopSet,
    truncation: f64,
    settings: &QuadSettings,
) -> Result<BodeIntegralReport> {
    if lp.is_discrete() {
        return Err(Error::Domain("continuous Bode integral needs a continuous loop".into()));
    }
    let kappa = high_frequency_gain(&lp.l)?;
    let s = &lp.s;
    let (lo, _, _) = local_order(s, 0.0);
    let delta = settings.delta;

    let (body, tail) = if kappa == 0.0 && lo.order == 0 && lo.c == 1.0 {
        // S ≡ 1
        (QuadOutcome::default(), 0.0)
    } else {
        if !(truncation > delta) {
            return Err(Error::Domain(format!(
                "truncation frequency {truncation} must exceed δ = {delta}"
            )));
        }
        let body = integrate_log_panels(
            &|w: f64| ln_abs(s, Complex64::new(0.0, w)),
            delta,
            truncation,
            settings,
        )?;
        (body, -kappa * kappa / (2.0 * truncation))
    };
    let numeric = head_integral(&lo, delta) + body.value + tail;

    let rhp: f64 = if lp.l.den().degree().unwrap_or(0) == 0 {
        0.0
    } else {
        lp.l.poles()?
            .roots
            .iter()
            .filter(|p| p.re > BOUNDARY_TOL)
            .map(|p| p.re)
            .sum()
    };
    let analytic = PI * rhp - 0.5 * PI * kappa;
    Ok(BodeIntegralReport::new(
        numeric,
        analytic,
        GridStats { panels: body.intervals, delta },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub value: f64,
    /// rad/s
    pub freq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreqSweep {
    /// rad/s, strictly increasing, within `(0, π/Ts]`.
    pub freqs: Vec<f64>,
    pub mag_s: Vec<f64>,
    pub mag_t: Vec<f64>,
    pub peak_s: Peak,
    pub peak_t: Peak,
}

/// Frequency grid ending exactly at the Nyquist frequency `π/Ts`.
pub fn freq_grid(ts: f64, n_points: usize, spacing: Spacing) -> Vec<f64> {
    let nyquist = PI / ts;
    let n = n_points.max(2);
    let mut grid: Vec<f64> = match spacing {
        Spacing::Log => (0..n)
            .map(|i| {
                let frac = i as f64 / (n - 1) as f64;
                nyquist * 10f64.powf(-LOG_SWEEP_DECADES * (1.0 - frac))
            })
            .collect(),
        Spacing::Linear => (1..=n).map(|i| nyquist * i as f64 / n as f64).collect(),
    };
    *grid.last_mut().expect("non-empty grid") = nyquist;
    grid
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximisation of `f` on `[a, b]`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a) <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid argmax refined by golden section inside the bracketing cells; the
/// grid points themselves (including the Nyquist end) stay candidates.
fn refine_peak(freqs: &[f64], mags: &[f64], mag: &dyn Fn(f64) -> f64) -> Peak {
    let (imax, &vmax) = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty sweep");
    let mut best = Peak { value: vmax, freq: freqs[imax] };
    let lo = freqs[imax.saturating_sub(1)];
    let hi = freqs[(imax + 1).min(freqs.len() - 1)];
    for (a, b) in [(lo, freqs[imax]), (freqs[imax], hi)] {
        if b > a {
            let (x, v) = golden_max(mag, a, b);
            if v > best.value * (1.0 + 1e-12) {
                best = Peak { value: v, freq: x };
            }
        }
    }
    best
}

pub fn freq_sweep(lp: &LoopSet, n_points: usize, spacing: Spacing) -> Result<FreqSweep> {
    let ts = lp
        .domain()
        .ts()
        .ok_or_else(|| Error::Domain("frequency sweep needs a discrete loop".into()))?;
    if n_points < 16 {
        return Err(Error::Config(format!("frequency sweep needs >= 16 points, got {n_points}")));
    }
    let freqs = freq_grid(ts, n_points, spacing);
    let mag_s = freqs
        .iter()
        .map(|&w| lp.s.freq_response(w).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let mag_t = freqs
        .iter()
        .map(|&w| lp.t.freq_response(w).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let s_at = |w: f64| lp.s.freq_response(w).map(|v| v.norm()).unwrap_or(f64::NAN);
    let t_at = |w: f64| lp.t.freq_response(w).map(|v| v.norm()).unwrap_or(f64::NAN);
    let peak_s = refine_peak(&freqs, &mag_s, &s_at);
    let peak_t = refine_peak(&freqs, &mag_t, &t_at);
    Ok(FreqSweep { freqs, mag_s, mag_t, peak_s, peak_t })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaterbedRow {
    pub alpha_g: f64,
    pub peak_s: f64,
    pub peak_t: f64,
    /// `peak_s` above the report threshold.
    pub flagged: bool,
}

/// Grid points used by [`waterbed_report`] for each configuration.
pub const WATERBED_SWEEP_POINTS: usize = 256;

/// Sensitivity and complementary-sensitivity peaks of the inner loop for a
/// family of configurations sharing kind and sampling time, sorted by
/// `alpha * g_DOB`.
pub fn waterbed_report(configs: &[DobConfig], threshold: f64) -> Result<Vec<WaterbedRow>> {
    if let Some(first) = configs.first() {
        if let Some(bad) = configs
            .iter()
            .find(|c| c.kind != first.kind || c.ts != first.ts)
        {
            return Err(Error::Config(format!(
                "waterbed report needs a common kind and Ts ({} @ {} vs {} @ {})",
                first.kind, first.ts, bad.kind, bad.ts
            )));
        }
    }
    let mut rows = configs
        .par_iter()
        .map(|cfg| {
            let lp = make_inner_loop(cfg)?;
            let sweep = freq_sweep(&lp, WATERBED_SWEEP_POINTS, Spacing::Log)?;
            Ok(WaterbedRow {
                alpha_g: cfg.alpha_g(),
                peak_s: sweep.peak_s.value,
                peak_t: sweep.peak_t.value,
                flagged: sweep.peak_s.value > threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.alpha_g.total_cmp(&b.alpha_g));
    Ok(rows)
}
