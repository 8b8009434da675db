use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::poly::{coeffs_close, Polynomial};
use super::roots::RootSet;

/// Evaluation points with `|den| <= POLE_EPS` are treated as poles.
const POLE_EPS: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// `z`-domain with sampling period in seconds.
    Discrete { ts: f64 },
    /// `s`-domain.
    Continuous,
}

impl Domain {
    pub fn ts(&self) -> Option<f64> {
        match *self {
            Domain::Discrete { ts } => Some(ts),
            Domain::Continuous => None,
        }
    }

    fn compatible(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Continuous, Domain::Continuous) => true,
            (Domain::Discrete { ts: a }, Domain::Discrete { ts: b }) => {
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
            }
            _ => false,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Discrete { ts } => write!(f, "discrete(Ts={ts})"),
            Domain::Continuous => write!(f, "continuous"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connection {
    Series,
    Parallel,
    /// Unity negative feedback around the series product `a * b`.
    FeedbackUnity,
}

/// Ratio of two real polynomials in `z` (or `s`), stored unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
    domain: Domain,
}

impl RationalTf {
    pub fn new(num: Polynomial, den: Polynomial, domain: Domain) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("denominator is the zero polynomial".into()));
        }
        if let Domain::Discrete { ts } = domain {
            if !(ts > 0.0 && ts.is_finite()) {
                return Err(Error::Domain(format!("sampling time must be positive, got {ts}")));
            }
        }
        Ok(Self { num, den, domain })
    }

    /// Discrete TF from ascending coefficient slices.
    pub fn discrete(num: &[f64], den: &[f64], ts: f64) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den), Domain::Discrete { ts })
    }

    pub fn continuous(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den), Domain::Continuous)
    }

    pub fn gain(k: f64, domain: Domain) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
            domain,
        }
    }

    pub fn identity(domain: Domain) -> Self {
        Self::gain(1.0, domain)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.domain, Domain::Discrete { .. })
    }

    /// `deg(den) - deg(num)`; `None` for the zero TF.
    pub fn relative_degree(&self) -> Option<isize> {
        let n = self.num.degree()? as isize;
        Some(self.den.degree().unwrap_or(0) as isize - n)
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 0)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 1)
    }

    /// `lim_{z -> inf} tf(z)` for a proper TF.
    pub fn value_at_infinity(&self) -> Result<f64> {
        match self.relative_degree() {
            None => Ok(0.0),
            Some(r) if r > 0 => Ok(0.0),
            Some(0) => Ok(self.num.leading() / self.den.leading()),
            Some(_) => Err(Error::Domain("improper transfer function has no finite limit".into())),
        }
    }

    pub fn eval(&self, x: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(x);
        if d.norm() <= POLE_EPS {
            return Err(Error::PoleEvaluation(x));
        }
        Ok(self.num.eval_complex(x) / d)
    }

    /// Frequency response at `omega` rad/s: `z = e^{j omega Ts}` for discrete
    /// TFs, `s = j omega` for continuous ones.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        self.eval(self.freq_point(omega))
    }

    pub fn freq_point(&self, omega: f64) -> Complex64 {
        match self.domain {
            Domain::Discrete { ts } => Complex64::from_polar(1.0, omega * ts),
            Domain::Continuous => Complex64::new(0.0, omega),
        }
    }

    pub fn poles(&self) -> Result<RootSet> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<RootSet> {
        self.num.roots()
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain.compatible(&other.domain) {
            Ok(())
        } else {
            Err(Error::MixedDomain(self.domain.to_string(), other.domain.to_string()))
        }
    }

    pub fn series(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        Self::new(&self.num * &other.num, &self.den * &other.den, self.domain)
    }

    pub fn parallel(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den, self.domain)
    }

    /// `self / (1 + self)`.
    pub fn feedback_unity(&self) -> Result<Self> {
        let char_poly = &self.den + &self.num;
        if char_poly.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        Self::new(self.num.clone(), char_poly, self.domain)
    }

    /// `1 / (1 + self)`, the sensitivity of the unity loop with open loop `self`.
    pub fn sensitivity(&self) -> Result<Self> {
        let char_poly = &self.den + &self.num;
        if char_poly.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        Self::new(self.den.clone(), char_poly, self.domain)
    }

    /// Closed-loop characteristic polynomial `num + den` of the unity loop.
    pub fn characteristic(&self) -> Polynomial {
        &self.den + &self.num
    }

    pub fn connect(&self, other: &Self, mode: Connection) -> Result<Self> {
        match mode {
            Connection::Series => self.series(other),
            Connection::Parallel => self.parallel(other),
            Connection::FeedbackUnity => self.series(other)?.feedback_unity(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
            domain: self.domain,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn recip(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone(), self.domain)
    }

    /// `1 - self`
    pub fn one_minus(&self) -> Self {
        Self {
            num: &self.den - &self.num,
            den: self.den.clone(),
            domain: self.domain,
        }
    }

    /// Rational equality: `a.num * b.den == b.num * a.den` up to a relative
    /// coefficient tolerance, with the cross products scaled so that
    /// `a.den * b.den` is monic. Common factors need not be cancelled.
    pub fn approx_eq(&self, other: &Self, rel_tol: f64) -> bool {
        if !self.domain.compatible(&other.domain) {
            return false;
        }
        let lead = self.den.leading() * other.den.leading();
        let lhs = (&self.num * &other.den).scale(1.0 / lead);
        let rhs = (&other.num * &self.den).scale(1.0 / lead);
        coeffs_close(lhs.coeffs(), rhs.coeffs(), rel_tol)
    }

    /// Coefficients in descending powers of `z` after multiplying through by
    /// `z^{-deg(den)}`, i.e. a causal difference equation
    /// `sum a_k y[n-k] = sum b_k x[n-k]` with `a_0 = 1`.
    pub fn difference_coeffs(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.is_discrete() {
            return Err(Error::Domain("difference equations need a discrete TF".into()));
        }
        if !self.is_proper() {
            return Err(Error::Domain("improper TF is not causal".into()));
        }
        let n = self.den.degree().unwrap_or(0);
        let a0 = self.den.leading();
        let b: Vec<f64> = (0..=n).map(|k| self.num.coeff(n - k) / a0).collect();
        let a: Vec<f64> = (0..=n).map(|k| self.den.coeff(n - k) / a0).collect();
        Ok((b, a))
    }
}

impl fmt::Display for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({}) [{}]", self.num, self.den, self.domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TS: f64 = 1e-3;

    fn velocity_s(a: f64) -> RationalTf {
        RationalTf::discrete(&[-1.0, 1.0], &[-(1.0 - a), 1.0], TS).unwrap()
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RationalTf::discrete(&[1.0], &[], TS).is_err());
        assert!(RationalTf::discrete(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn sensitivity_vanishes_at_dc() {
        let s = velocity_s(0.5);
        assert_eq!(s.freq_response(0.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn velocity_sensitivity_at_nyquist() {
        let s = velocity_s(0.5);
        let v = s.eval(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((v.norm() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn acceleration_sensitivity_at_nyquist() {
        let a = 0.5;
        let s = RationalTf::discrete(&[-1.0, 1.0], &[-1.0, 1.0 + a], TS).unwrap();
        let v = s.eval(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((v.norm() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pole_evaluation_reports_location() {
        let s = velocity_s(0.5);
        let at = Complex64::new(0.5, 0.0);
        assert_eq!(s.eval(at), Err(Error::PoleEvaluation(at)));
    }

    #[test]
    fn feedback_of_acceleration_open_loop() {
        let a = 0.5;
        let l = RationalTf::discrete(&[0.0, a], &[-1.0, 1.0], TS).unwrap();
        let t = l.feedback_unity().unwrap();
        let expected = RationalTf::discrete(&[0.0, a], &[-1.0, 1.0 + a], TS).unwrap();
        assert!(t.approx_eq(&expected, 1e-12));
        let s = l.sensitivity().unwrap();
        let sum = s.parallel(&t).unwrap();
        assert!(sum.approx_eq(&RationalTf::identity(Domain::Discrete { ts: TS }), 1e-12));
    }

    #[test]
    fn series_with_unity() {
        let tf = velocity_s(0.3);
        let one = RationalTf::identity(tf.domain());
        assert_eq!(tf.connect(&one, Connection::Series).unwrap(), tf);
    }

    #[test]
    fn pd_as_parallel_connection() {
        let (kp, kd) = (5000.0, 25.0);
        let p = RationalTf::gain(kp, Domain::Discrete { ts: TS });
        let d = RationalTf::discrete(&[-kd, kd], &[0.0, TS], TS).unwrap();
        let c = p.connect(&d, Connection::Parallel).unwrap();
        let expected = RationalTf::discrete(&[-25000.0, 30000.0], &[0.0, 1.0], TS).unwrap();
        assert!(c.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn mixed_domains_rejected() {
        let d = velocity_s(0.5);
        let c = RationalTf::continuous(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(d.series(&c), Err(Error::MixedDomain(..))));
        let other_ts = RationalTf::discrete(&[1.0], &[1.0], 2e-3).unwrap();
        assert!(matches!(d.parallel(&other_ts), Err(Error::MixedDomain(..))));
    }

    #[test]
    fn degenerate_feedback() {
        let minus_one = RationalTf::gain(-1.0, Domain::Continuous);
        assert_eq!(minus_one.feedback_unity(), Err(Error::DegenerateLoop));
    }

    #[test]
    fn difference_coefficients() {
        // 0.5 z / (z - 0.25)  ->  y[n] - 0.25 y[n-1] = 0.5 x[n]
        let tf = RationalTf::discrete(&[0.0, 0.5], &[-0.25, 1.0], TS).unwrap();
        let (b, a) = tf.difference_coeffs().unwrap();
        assert_eq!(b, vec![0.5, 0.0]);
        assert_eq!(a, vec![1.0, -0.25]);
    }

    #[test]
    fn value_at_infinity() {
        let a = 0.75;
        let l = RationalTf::discrete(&[0.0, a], &[-1.0, 1.0], TS).unwrap();
        assert_eq!(l.value_at_infinity().unwrap(), a);
        assert_eq!(velocity_s(0.2).recip().unwrap().value_at_infinity().unwrap(), 1.0);
        let improper = RationalTf::discrete(&[0.0, 0.0, 1.0], &[1.0, 1.0], TS).unwrap();
        assert!(improper.value_at_infinity().is_err());
    }
}
