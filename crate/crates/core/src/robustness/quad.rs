//! Adaptive Simpson quadrature on logarithmically spaced panels.
//!
//! The integrands handled here (`ln|S|` on the unit circle or the imaginary
//! axis) vary on a logarithmic scale near the structural zero of `S`, so the
//! interval is first cut into geometric panels and each panel is refined
//! independently.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings {
    /// Width of the analytically integrated neighbourhood of the singular point.
    pub delta: f64,
    /// Relative tolerance of each panel, against the panel's L1 mass.
    pub rel_tol: f64,
    pub panels_per_decade: usize,
    pub max_depth: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            rel_tol: 1e-8,
            panels_per_decade: 4,
            max_depth: 48,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    /// Accepted Simpson intervals.
    pub intervals: usize,
    pub evaluations: usize,
}

struct Simpson<'a, F> {
    f: &'a F,
    max_depth: u32,
    intervals: usize,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Quadrature(format!("non-finite integrand at x = {x}")))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        fa: f64,
        m: f64,
        fm: f64,
        b: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * eps {
            self.intervals += 2;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.max_depth {
            return Err(Error::Quadrature(format!(
                "maximum subdivision depth reached on [{a}, {b}]"
            )));
        }
        let l = self.refine(a, fa, lm, flm, m, fm, left, 0.5 * eps, depth + 1)?;
        let r = self.refine(m, fm, rm, frm, b, fb, right, 0.5 * eps, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson on `[a, b]`. The tolerance is `rel_tol` times the
/// first-pass estimate of `∫|f|`, so integrals that cancel to zero are still
/// resolved to a meaningful absolute accuracy.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<QuadOutcome> {
    let mut s = Simpson { f, max_depth, intervals: 0, evaluations: 0 };
    if a == b {
        return Ok(QuadOutcome::default());
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (s.eval(a)?, s.eval(m)?, s.eval(b)?);
    // Mass estimate from a 5-point rule, used only to scale the tolerance.
    let q1 = s.eval(0.5 * (a + m))?.abs();
    let q3 = s.eval(0.5 * (m + b))?.abs();
    let mass = (b - a) / 12.0 * (fa.abs() + 4.0 * q1 + 2.0 * fm.abs() + 4.0 * q3 + fb.abs());
    let eps = (rel_tol * mass).max(1e-15 * (b - a).abs());
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = s.refine(a, fa, m, fm, b, fb, whole, eps, 0)?;
    Ok(QuadOutcome { value, intervals: s.intervals, evaluations: s.evaluations })
}

/// Geometric panel boundaries from `a > 0` to `b`.
pub fn log_panels(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10().max(0.0);
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut edges: Vec<f64> = (0..n).map(|i| a * ratio.powi(i as i32)).collect();
    edges.push(b);
    edges
}

/// Sum of [`adaptive_simpson`] over [`log_panels`].
pub fn integrate_log_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<QuadOutcome> {
    let edges = log_panels(a, b, settings.panels_per_decade);
    let mut total = QuadOutcome::default();
    for w in edges.windows(2) {
        let part = adaptive_simpson(f, w[0], w[1], settings.rel_tol, settings.max_depth)?;
        total.value += part.value;
        total.intervals += part.intervals;
        total.evaluations += part.evaluations;
    }
    Ok(total)
}
