//! Relative-motion profiles and the Pauli exchange scatterings `lambda_n`
//! they induce.
//!
//! For a coboson whose relative-motion state puts probability `p_k` on the
//! fermion-pair mode `k`, the closed chain of exchanges between `n` cobosons
//! in that state is the power sum `lambda_n = sum_k p_k^n`.

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::{Rational, Scalar};

/// Normalization slack accepted for floating-point profiles.
pub const FLOAT_NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeProfile<S> {
    label: String,
    probabilities: Vec<S>,
}

impl<S: Scalar> ModeProfile<S> {
    /// Builds a profile from probabilities that must already be normalized.
    pub fn new(label: impl Into<String>, probabilities: Vec<S>) -> Result<Self> {
        validate_weights(&probabilities)?;
        let sum = S::sum_all(probabilities.iter().cloned());
        let normalized = if S::is_exact() {
            sum.is_one()
        } else {
            (sum.to_f64() - 1.0).abs() <= FLOAT_NORMALIZATION_TOLERANCE
        };
        if !normalized {
            return Err(Error::NotNormalized { sum: sum.render() });
        }
        Ok(Self { label: label.into(), probabilities })
    }

    /// Builds a profile from raw weights. With `normalize` set the weights are
    /// rescaled to sum to one; otherwise they must already do so.
    pub fn from_weights(label: impl Into<String>, weights: Vec<S>, normalize: bool) -> Result<Self> {
        if !normalize {
            return Self::new(label, weights);
        }
        validate_weights(&weights)?;
        let sum = S::sum_all(weights.iter().cloned());
        if sum.is_zero() {
            return Err(Error::NotNormalized { sum: sum.render() });
        }
        let probabilities = weights.into_iter().map(|w| w / sum.clone()).collect();
        Ok(Self { label: label.into(), probabilities })
    }

    pub fn uniform(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::EmptyProfile);
        }
        let p = S::ratio(1, modes as i64);
        Ok(Self { label: format!("uniform:{modes}"), probabilities: vec![p; modes] })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn probabilities(&self) -> &[S] {
        &self.probabilities
    }

    pub fn mode_count(&self) -> usize {
        self.probabilities.len()
    }

    /// Power sum `sum_k p_k^n`.
    pub fn lambda(&self, n: u32) -> Result<S> {
        if n == 0 {
            return Err(Error::InvalidOrder);
        }
        Ok(S::sum_all(self.probabilities.iter().map(|p| p.powu(n))))
    }

    /// `lambda_1..=lambda_n_max`.
    pub fn exchange_table(&self, n_max: usize) -> ExchangeTable<S> {
        // Powers are advanced incrementally: O(M * n_max).
        let mut powers = self.probabilities.clone();
        let mut lambdas = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            if n > 1 {
                for (pow, p) in powers.iter_mut().zip(&self.probabilities) {
                    *pow = pow.clone() * p.clone();
                }
            }
            lambdas.push(S::sum_all(powers.iter().cloned()));
        }
        ExchangeTable {
            lambdas,
            source: ExchangeSource::Profile { label: self.label.clone(), modes: self.mode_count() },
        }
    }
}

impl ModeProfile<Rational> {
    pub fn to_float(&self) -> ModeProfile<f64> {
        ModeProfile {
            label: self.label.clone(),
            probabilities: self.probabilities.iter().map(Scalar::to_f64).collect(),
        }
    }
}

fn validate_weights<S: Scalar>(weights: &[S]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::EmptyProfile);
    }
    for (index, w) in weights.iter().enumerate() {
        if !w.to_f64().is_finite() {
            return Err(Error::InvalidWeight { index, reason: "not finite".into() });
        }
        if w.is_negative() {
            return Err(Error::InvalidWeight { index, reason: format!("negative ({})", w.render()) });
        }
    }
    Ok(())
}

pub fn uniform_profile<S: Scalar>(modes: usize) -> Result<ModeProfile<S>> {
    ModeProfile::uniform(modes)
}

pub fn lambda_from_profile<S: Scalar>(profile: &ModeProfile<S>, n: u32) -> Result<S> {
    profile.lambda(n)
}

/// Exact double factorial with `0!! = 1`.
pub fn double_factorial(m: u64) -> BigUint {
    let mut acc = BigUint::one();
    let mut k = m;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// Exact `16 (8n-5)!! / (8n-2)!!`, the density-independent part of the
/// hydrogenic `lambda_n`.
pub fn hydrogenic_prefactor(n: u32) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidOrder);
    }
    let n = n as u64;
    let num = double_factorial(8 * n - 5) * 16u32;
    let den = double_factorial(8 * n - 2);
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

// q_{n+1} / q_n
fn prefactor_step(n: u64) -> (u128, u128) {
    let m = 8 * n as u128;
    ((m - 3) * (m - 1) * (m + 1) * (m + 3), m * (m + 2) * (m + 4) * (m + 6))
}

// Above this order the exact big-integer ratio is replaced by the running
// product of four-factor steps.
const EXACT_PREFACTOR_LIMIT: u32 = 128;

fn prefactor_f64(n: u32) -> f64 {
    if n <= EXACT_PREFACTOR_LIMIT {
        return hydrogenic_prefactor(n).expect("n >= 1").to_f64();
    }
    let mut q = hydrogenic_prefactor(EXACT_PREFACTOR_LIMIT).expect("n >= 1").to_f64();
    for k in EXACT_PREFACTOR_LIMIT as u64..n as u64 {
        let (num, den) = prefactor_step(k);
        q *= num as f64 / den as f64;
    }
    q
}

/// Closed-form `lambda_n` for 3D hydrogenic cobosons:
/// `16 (8n-5)!!/(8n-2)!! * (64 pi (a_B/L)^3)^(n-1)`.
pub fn hydrogenic_lambda(n: u32, a_over_l: f64) -> Result<f64> {
    let profile = HydrogenicProfile::new(a_over_l)?;
    profile.lambda(n)
}

pub fn hydrogenic_lambda_quadrature(n: u32, a_over_l: f64, quad: &QuadratureSpec) -> Result<f64> {
    HydrogenicProfile::new(a_over_l)?.lambda_quadrature(n, quad)
}

/// Radial quadrature settings in the dimensionless momentum `x = k a_B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub cutoff: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, cutoff: 1e3, max_intervals: 2000 }
    }
}

/// 3D hydrogenic 1s relative motion in a box of side `L`, parametrized by
/// `a_B / L`.
///
/// The momentum occupation is `64 pi (a_B/L)^3 / (1 + k^2 a_B^2)^4`. The
/// fourth power is what normalizes the profile and reproduces the closed-form
/// `lambda_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HydrogenicProfile {
    a_over_l: f64,
}

impl HydrogenicProfile {
    pub const DIMENSION: u32 = 3;

    pub fn new(a_over_l: f64) -> Result<Self> {
        if !(a_over_l.is_finite() && a_over_l > 0.0) {
            return Err(Error::InvalidExtent(a_over_l));
        }
        Ok(Self { a_over_l })
    }

    pub fn a_over_l(&self) -> f64 {
        self.a_over_l
    }

    /// Dimensionless density `eta = N (a_B/L)^3`.
    pub fn eta(&self, particles: usize) -> f64 {
        particles as f64 * self.a_over_l.powi(3)
    }

    /// `64 pi (a_B/L)^3`, the occupation of the `k = 0` mode.
    pub fn peak_occupation(&self) -> f64 {
        64.0 * PI * self.a_over_l.powi(3)
    }

    /// Occupation `|<k|nu_0>|^2` at dimensionless momentum `x = k a_B`.
    pub fn occupation(&self, x: f64) -> f64 {
        self.peak_occupation() / (1.0 + x * x).powi(4)
    }

    pub fn lambda(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidOrder);
        }
        Ok(prefactor_f64(n) * self.peak_occupation().powi(n as i32 - 1))
    }

    /// `lambda_n` from `(L/2 pi)^3 int d^3k |<k|nu_0>|^(2n)`, reduced to a
    /// radial integral in `x = k a_B`.
    pub fn lambda_quadrature(&self, n: u32, quad: &QuadratureSpec) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidOrder);
        }
        let power = 4 * n as i32;
        let est = quadrature::integrate(
            |x| x * x / (1.0 + x * x).powi(power),
            0.0,
            quad.cutoff,
            quad.rel_tol,
            quad.max_intervals,
        );
        // The integrand decays as x^(2-8n); the tail past the cutoff is bounded by
        // cutoff^(3-8n) / (8n-3).
        let tail = quad.cutoff.powi(3 - 2 * power) / (2 * power - 3) as f64;
        let estimate = (est.abs_error + tail) / est.value.abs();
        // Negated so that a NaN estimate also fails.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(estimate <= quad.rel_tol) {
            return Err(Error::QuadratureNotConverged { n, estimate, tolerance: quad.rel_tol });
        }
        // 4 pi (64 pi)^n a^(3(n-1)) / (8 pi^3), written to avoid overflowing (64 pi)^n.
        let scale = 64.0 * PI / (2.0 * PI * PI) * self.peak_occupation().powi(n as i32 - 1);
        Ok(scale * est.value)
    }

    /// `lambda_1..=lambda_n_max` in floating point.
    pub fn exchange_table(&self, n_max: usize) -> ExchangeTable<f64> {
        let u = self.peak_occupation();
        let mut lambdas = Vec::with_capacity(n_max);
        let mut current = 0.0;
        for n in 1..=n_max {
            if n <= EXACT_PREFACTOR_LIMIT as usize {
                current = self.lambda(n as u32).expect("n >= 1");
            } else {
                let (num, den) = prefactor_step(n as u64 - 1);
                current *= u * (num as f64 / den as f64);
            }
            lambdas.push(current);
        }
        ExchangeTable { lambdas, source: ExchangeSource::Hydrogenic { a_over_l: self.a_over_l } }
    }

    /// Exact `lambda_n = q_n u^(n-1)` where `u` is the binary value of
    /// `64 pi (a_B/L)^3`. All lambdas share one rounding of `u`, so the
    /// resulting norms are exact for a density within one ulp of the request.
    pub fn dyadic_exchange_table(&self, n_max: usize) -> ExchangeTable<Rational> {
        let u = BigRational::from_float(self.peak_occupation()).expect("finite");
        let mut lambdas = Vec::with_capacity(n_max);
        let mut q = BigRational::one();
        let mut u_pow = BigRational::one();
        for n in 1..=n_max as u64 {
            if n > 1 {
                let (num, den) = prefactor_step(n - 1);
                q *= BigRational::new(BigInt::from(num), BigInt::from(den));
                u_pow *= &u;
            }
            lambdas.push(&q * &u_pow);
        }
        ExchangeTable { lambdas, source: ExchangeSource::Hydrogenic { a_over_l: self.a_over_l } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExchangeSource {
    Profile { label: String, modes: usize },
    Hydrogenic { a_over_l: f64 },
    Custom { label: String },
}

/// Pauli exchange scatterings `lambda_1..lambda_nmax` for cobosons in state 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeTable<S> {
    lambdas: Vec<S>,
    source: ExchangeSource,
}

impl<S: Scalar> ExchangeTable<S> {
    /// A hand-supplied list. Only `lambda_1 = 1` is enforced; monotonicity and
    /// log-convexity are reported by [`ExchangeTable::invariant_violations`].
    pub fn custom(label: impl Into<String>, lambdas: Vec<S>) -> Result<Self> {
        let first = lambdas.first().ok_or(Error::MissingLambdas { required: 1, available: 0 })?;
        let unity = if S::is_exact() {
            first.is_one()
        } else {
            (first.to_f64() - 1.0).abs() <= FLOAT_NORMALIZATION_TOLERANCE
        };
        if !unity {
            return Err(Error::LambdaOneNotUnity(first.render()));
        }
        Ok(Self { lambdas, source: ExchangeSource::Custom { label: label.into() } })
    }

    /// Elementary bosons: no exchange beyond the trivial `lambda_1 = 1`.
    pub fn elementary(n_max: usize) -> Self {
        let mut lambdas = vec![S::zero(); n_max.max(1)];
        lambdas[0] = S::one();
        Self { lambdas, source: ExchangeSource::Custom { label: "elementary".into() } }
    }

    pub fn lambdas(&self) -> &[S] {
        &self.lambdas
    }

    /// `lambda_n` for `n >= 1`.
    pub fn lambda(&self, n: usize) -> Option<&S> {
        n.checked_sub(1).and_then(|i| self.lambdas.get(i))
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn source(&self) -> &ExchangeSource {
        &self.source
    }

    /// Mode count when the table comes from a discrete profile.
    pub fn mode_count(&self) -> Option<usize> {
        match self.source {
            ExchangeSource::Profile { modes, .. } => Some(modes),
            _ => None,
        }
    }

    pub fn is_profile_derived(&self) -> bool {
        !matches!(self.source, ExchangeSource::Custom { .. })
    }

    /// Copy with every `lambda_n`, `n > cap`, set to zero.
    pub fn truncated(&self, cap: usize) -> Self {
        let mut lambdas = self.lambdas.clone();
        for l in lambdas.iter_mut().skip(cap.max(1)) {
            *l = S::zero();
        }
        Self { lambdas, source: self.source.clone() }
    }

    /// Monotonicity and log-convexity violations, as readable messages.
    pub fn invariant_violations(&self) -> Vec<String> {
        let slack = |scale: f64| 64.0 * S::unit_roundoff() * scale.abs();
        let mut out = Vec::new();
        for n in 1..self.lambdas.len() {
            let (prev, next) = (&self.lambdas[n - 1], &self.lambdas[n]);
            if (next.clone() - prev.clone()).to_f64() > slack(prev.to_f64()) {
                out.push(format!("lambda_{} > lambda_{}", n + 1, n));
            }
        }
        for n in 2..self.lambdas.len() {
            let lhs = self.lambdas[n].clone() * self.lambdas[n - 2].clone();
            let rhs = self.lambdas[n - 1].clone() * self.lambdas[n - 1].clone();
            if (rhs.clone() - lhs).to_f64() > slack(rhs.to_f64()) {
                out.push(format!("lambda_{} lambda_{} < lambda_{}^2", n + 1, n - 1, n));
            }
        }
        out
    }
}
