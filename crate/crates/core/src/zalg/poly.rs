use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::roots::{self, RootSet};

/// Real-coefficient polynomial, coefficients in ascending powers.
///
/// Exact trailing zeros are trimmed on construction, so the zero polynomial is
/// represented by an empty coefficient list and `degree()` is `None` for it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `z - root`
    pub fn linear_factor(root: f64) -> Self {
        Self::new(vec![-root, 1.0])
    }

    /// The monic polynomial with the given roots.
    ///
    /// Complex roots must come in conjugate pairs; the imaginary parts of the
    /// expanded coefficients are discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of the highest power (0 for the zero polynomial).
    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `z^k` (0 beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    /// Divide by the leading coefficient. The zero polynomial is returned as is.
    pub fn monic(&self) -> Self {
        match self.leading() {
            0.0 => self.clone(),
            lead => self.scale(1.0 / lead),
        }
    }

    /// Synthetic division by `(z - root)`, returning quotient and remainder.
    pub fn deflate(&self, root: f64) -> (Self, f64) {
        let n = self.coeffs.len();
        if n == 0 {
            return (Self::zero(), 0.0);
        }
        let mut quotient = vec![0.0; n - 1];
        let mut carry = 0.0;
        for k in (0..n).rev() {
            let value = self.coeffs[k] + carry * root;
            if k == 0 {
                return (Self::new(quotient), value);
            }
            quotient[k - 1] = value;
            carry = value;
        }
        unreachable!()
    }

    /// Multiplicity of `root` as a zero, judged by the remainder of repeated
    /// deflation relative to the coefficient scale. Returns the multiplicity
    /// and the cofactor `p / (z - root)^m`.
    pub fn zero_multiplicity(&self, root: f64, rel_tol: f64) -> (usize, Self) {
        let mut current = self.clone();
        let mut m = 0;
        while current.degree().is_some_and(|d| d >= 1) {
            let scale: f64 = current
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * root.abs().powi(k as i32))
                .sum();
            let (q, rem) = current.deflate(root);
            if rem.abs() > rel_tol * scale {
                break;
            }
            current = q;
            m += 1;
        }
        (m, current)
    }

    /// All complex roots. See [`RootSet`].
    pub fn roots(&self) -> Result<RootSet> {
        match self.degree() {
            None | Some(0) => Err(Error::Domain(format!(
                "root finding needs degree >= 1, got {self}"
            ))),
            Some(_) => Ok(roots::find_roots(self)),
        }
    }

    /// Equality up to a relative tolerance on coefficients after monic
    /// normalization of both sides.
    pub fn approx_eq(&self, other: &Self, rel_tol: f64) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        let a = self.monic();
        let b = other.monic();
        coeffs_close(a.coeffs(), b.coeffs(), rel_tol)
    }
}

/// Coefficient-wise comparison relative to the largest magnitude present.
/// Differences in length are compared against implicit zeros.
pub(crate) fn coeffs_close(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0_f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let n = a.len().max(b.len());
    (0..n).all(|k| {
        let x = a.get(k).copied().unwrap_or(0.0);
        let y = b.get(k).copied().unwrap_or(0.0);
        (x - y).abs() <= rel_tol * scale
    })
}

impl From<f64> for Polynomial {
    fn from(c: f64) -> Self {
        Self::constant(c)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect::<Vec<_>>())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect::<Vec<_>>())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                1 if mag == 1.0 => write!(f, "z")?,
                1 => write!(f, "{mag}z")?,
                _ if mag == 1.0 => write!(f, "z^{k}")?,
                _ => write!(f, "{mag}z^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Polynomial {
        Polynomial::new(vec![0.0, 1.0])
    }

    #[test]
    fn difference_of_squares() {
        let a = Polynomial::linear_factor(1.0);
        let b = Polynomial::linear_factor(-1.0);
        assert_eq!(&a * &b, Polynomial::new(vec![-1.0, 0.0, 1.0]));
    }

    #[test]
    fn multiplicative_identity() {
        let p = Polynomial::new(vec![0.3, -2.0, 5.0]);
        assert_eq!(&p * &Polynomial::one(), p);
    }

    #[test]
    fn sum_trims_to_monomial() {
        let p = &Polynomial::linear_factor(1.0) + &Polynomial::one();
        assert_eq!(p, z());
        assert_eq!(p.degree(), Some(1));
    }

    #[test]
    fn cancellation_gives_canonical_zero() {
        let p = Polynomial::new(vec![1.0, 2.0]);
        let d = &p - &p;
        assert!(d.is_zero());
        assert_eq!(d.degree(), None);
        assert_eq!(Polynomial::new(vec![0.0, 0.0]), Polynomial::zero());
    }

    #[test]
    fn deflate_and_multiplicity() {
        // (z-1)^2 (z+3)
        let p = &(&Polynomial::linear_factor(1.0) * &Polynomial::linear_factor(1.0))
            * &Polynomial::linear_factor(-3.0);
        let (q, rem) = p.deflate(1.0);
        assert_eq!(rem, 0.0);
        assert_eq!(q.degree(), Some(2));
        let (m, cof) = p.zero_multiplicity(1.0, 1e-12);
        assert_eq!(m, 2);
        assert!(cof.approx_eq(&Polynomial::linear_factor(-3.0), 1e-12));
    }

    #[test]
    fn roots_reject_constants() {
        assert!(matches!(Polynomial::constant(2.0).roots(), Err(Error::Domain(_))));
        assert!(matches!(Polynomial::zero().roots(), Err(Error::Domain(_))));
    }

    #[test]
    fn approx_eq_is_scale_invariant() {
        let p = Polynomial::new(vec![1.0, -3.0, 2.0]);
        assert!(p.approx_eq(&p.scale(-7.5), 1e-12));
        assert!(!p.approx_eq(&Polynomial::new(vec![1.0, -3.0, 2.1]), 1e-10));
    }

    #[test]
    fn display() {
        let p = Polynomial::new(vec![-0.5, 0.0, 2.0]);
        assert_eq!(p.to_string(), "2z^2 - 0.5");
    }
}
