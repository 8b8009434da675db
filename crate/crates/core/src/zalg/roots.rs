//! Simultaneous root finding (Aberth–Ehrlich) with Newton polishing.
//!
//! The transfer functions handled here have degree <= ~8, so an O(n^2)
//! per-sweep iteration is more than fast enough and converges from a fixed
//! starting circle without the failure modes of a real Schur reduction.

use num_complex::Complex64;

use super::poly::Polynomial;

/// Imaginary parts below this (relative to `max(1, |z|)`) are snapped to zero.
const REAL_SNAP: f64 = 1e-10;
const MAX_SWEEPS: usize = 500;
const POLISH_STEPS: usize = 4;

/// Roots of a real polynomial, counted with multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// `max |p(root)|` over all roots.
    pub residual: f64,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.roots.iter().fold(0.0, |m, r| m.max(r.norm()))
    }
}

pub(crate) fn find_roots(p: &Polynomial) -> RootSet {
    // Exact zero roots first: they make the constant-term based bounds useless.
    let zeros_at_origin = p.coeffs().iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(p.coeffs()[zeros_at_origin..].to_vec());

    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    roots.extend(match reduced.degree() {
        Some(0) | None => Vec::new(),
        Some(1) => vec![Complex64::new(-reduced.coeff(0) / reduced.coeff(1), 0.0)],
        Some(_) => aberth(&reduced),
    });

    let mut roots = pair_conjugates(roots);
    sort_roots(&mut roots);
    let residual = roots
        .iter()
        .map(|&r| p.eval_complex(r).norm())
        .fold(0.0, f64::max);
    RootSet { roots, residual }
}

fn aberth(p: &Polynomial) -> Vec<Complex64> {
    let n = p.degree().expect("degree checked by caller");
    let monic = p.monic();
    let dp = monic.derivative();

    // Fujiwara bound for the outer radius; start slightly inside it, on a
    // circle around the root centroid, with an angle offset that breaks the
    // real-axis symmetry.
    let centre = -monic.coeff(n - 1) / n as f64;
    let bound = (0..n)
        .map(|k| {
            let c = monic.coeff(k).abs();
            let c = if k == 0 { c / 2.0 } else { c };
            c.powf(1.0 / (n - k) as f64)
        })
        .fold(0.0, f64::max)
        * 2.0;
    let radius = bound.max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::new(centre, 0.0) + Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut converged = vec![false; n];
    for _ in 0..MAX_SWEEPS {
        let mut all_done = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let zi = z[i];
            let pv = monic.eval_complex(zi);
            if pv.norm() == 0.0 {
                converged[i] = true;
                continue;
            }
            let ratio = pv / dp.eval_complex(zi);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = zi - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom.norm() == 0.0 || !denom.is_finite() {
                ratio
            } else {
                ratio / denom
            };
            if !step.is_finite() {
                converged[i] = true;
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z[i].norm()) {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    z.into_iter().map(|r| polish(&monic, &dp, r)).collect()
}

/// A few Newton steps on the full polynomial, kept only while they reduce
/// the residual.
fn polish(p: &Polynomial, dp: &Polynomial, mut r: Complex64) -> Complex64 {
    let mut best = p.eval_complex(r).norm();
    for _ in 0..POLISH_STEPS {
        let d = dp.eval_complex(r);
        if d.norm() == 0.0 {
            break;
        }
        let candidate = r - p.eval_complex(r) / d;
        let res = p.eval_complex(candidate).norm();
        if !(res < best) {
            break;
        }
        best = res;
        r = candidate;
    }
    r
}

/// Enforce exact conjugate symmetry: each non-real root is paired with the
/// nearest conjugate of another root and both are replaced by the averaged
/// pair; near-real roots are snapped to the real axis.
fn pair_conjugates(roots: Vec<Complex64>) -> Vec<Complex64> {
    let n = roots.len();
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let r = roots[i];
        if r.im.abs() <= REAL_SNAP * r.norm().max(1.0) {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        let partner = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = (roots[a] - r.conj()).norm();
                let db = (roots[b] - r.conj()).norm();
                da.total_cmp(&db)
            });
        match partner {
            Some(j) => {
                used[j] = true;
                let m = (r + roots[j].conj()) * 0.5;
                out.push(m);
                out.push(m.conj());
            }
            None => out.push(Complex64::new(r.re, 0.0)),
        }
    }
    out
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
