//! Numeric tower shared by every computation in the crate.
//!
//! Two realizations exist: exact rationals over big integers, and `f64`
//! with compensated summation. A table is built in one mode and stays there.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Rational,
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Rational => f.write_str("rational"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

/// Scalar field used by profiles, norm tables, statistics and the oracle.
pub trait Scalar: Signed + Clone + PartialOrd + fmt::Debug + Send + Sync + 'static {
    const MODE: NumericMode;

    fn from_u64(v: u64) -> Self;

    fn from_i64(v: i64) -> Self;

    /// `num / den`; `den` must be non-zero.
    fn ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Nearest value to `v` (exact for rationals, since every finite double is
    /// a dyadic rational). Non-finite input maps to zero in exact mode.
    fn from_f64_lossy(v: f64) -> Self;

    /// Relative rounding unit of one arithmetic operation (zero when exact).
    fn unit_roundoff() -> f64;

    /// Square root when it is representable in this field.
    fn sqrt_exact(&self) -> Option<Self>;

    /// Locale-independent text form: `p/q` for rationals, 17 significant
    /// digits for floats.
    fn render(&self) -> String;

    fn powu(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }

    /// Sum of a sequence; compensated in floating point.
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }

    /// Weights `(N-1)!/(N-n)! * lambda_n` for `n = 1..=N`, where
    /// `lambdas[n-1]` holds `lambda_n`.
    fn exchange_weights(big_n: usize, lambdas: &[Self]) -> Vec<Self> {
        let mut out = Vec::with_capacity(big_n);
        let mut falling = Self::one();
        for n in 1..=big_n {
            if n > 1 {
                falling = falling * Self::from_u64((big_n - n + 1) as u64);
            }
            out.push(falling.clone() * lambdas[n - 1].clone());
        }
        out
    }

    fn is_exact() -> bool {
        Self::MODE == NumericMode::Rational
    }
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Rational;

    fn from_u64(v: u64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }

    fn unit_roundoff() -> f64 {
        0.0
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let num = self.numer().sqrt();
        let den = self.denom().sqrt();
        if &(&num * &num) == self.numer() && &(&den * &den) == self.denom() {
            Some(Rational::new(num, den))
        } else {
            None
        }
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn exchange_weights(big_n: usize, lambdas: &[Self]) -> Vec<Self> {
        // Everything past the last non-zero lambda contributes nothing; this
        // keeps the elementary-boson limit linear in N.
        let last = lambdas[..big_n].iter().rposition(|l| !l.is_zero());
        let mut out = vec![Rational::zero(); big_n];
        let Some(last) = last else { return out };
        let mut falling = BigInt::from(1u32);
        for n in 1..=last + 1 {
            if n > 1 {
                falling *= BigInt::from(big_n - n + 1);
            }
            if !lambdas[n - 1].is_zero() {
                out[n - 1] = &lambdas[n - 1] * Rational::from_integer(falling.clone());
            }
        }
        out
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }

    fn sqrt_exact(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }

    fn render(&self) -> String {
        format!("{:.16e}", self)
    }

    fn powu(&self, exp: u32) -> Self {
        self.powi(exp as i32)
    }

    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in items {
            acc.add(x);
        }
        acc.value()
    }

    fn exchange_weights(big_n: usize, lambdas: &[Self]) -> Vec<Self> {
        // The falling factorial overflows long before lambda_n underflows, so
        // the product is advanced through lambda ratios instead.
        let mut out = Vec::with_capacity(big_n);
        let mut prev = 0.0f64;
        for n in 1..=big_n {
            let lambda = lambdas[n - 1];
            let w = if n == 1 {
                lambda
            } else if lambda == 0.0 {
                0.0
            } else if lambdas[n - 2] != 0.0 && prev != 0.0 {
                prev * (big_n - n + 1) as f64 * (lambda / lambdas[n - 2])
            } else {
                let falling: f64 = ((big_n - n + 1)..big_n).map(|k| k as f64).product();
                falling * lambda
            };
            out.push(w);
            prev = w;
        }
        out
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    magnitude: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sum of absolute values of every added term.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

/// Parses `"p/q"`, an integer, or a plain decimal (`"0.125"`, `"1e-3"`) into
/// an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" { return None } else { digits };
    let num: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}
