//! Number statistics of `|psi_N> = B_0^{dag N}|v>` in closed form.
//!
//! Every moment is a rational function of `F_N, F_(N+1), F_(N+2)` and
//! `lambda_2`, written through `Delta_N^(n) = (F_(N+n) - F_(N+n-1)) / F_N`.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::NormTable;
use crate::par;
use crate::profiles::ExchangeSource;
use crate::scalar::Scalar;

fn n_scalar<S: Scalar>(n: usize) -> S {
    S::from_u64(n as u64)
}

fn require_at_least(quantity: &'static str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::ParticleCount { quantity, min, n });
    }
    Ok(())
}

struct Deltas<S> {
    d1: S,
    d2: S,
}

fn deltas<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<Deltas<S>> {
    table.require_moments(n)?;
    Ok(Deltas { d1: table.delta_unchecked(n, 1), d2: table.delta_unchecked(n, 2) })
}

/// `<n>_N = 1 + (N-1) F_(N+1)/F_N`.
pub fn mean_n<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("mean_n", n, 1)?;
    table.require_moments(n)?;
    let ratio = table.values()[n + 1].clone() / table.values()[n].clone();
    Ok(S::one() + n_scalar::<S>(n - 1) * ratio)
}

/// `<n>_N = N + (N-1) Delta_N^(1)`.
pub fn mean_n_via_delta<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("mean_n", n, 1)?;
    let d = deltas(table, n)?;
    Ok(n_scalar::<S>(n) + n_scalar::<S>(n - 1) * d.d1)
}

/// `<n^2>_N = N^2 + (N^2-1) Delta^(1) + N(N-1)^2/(N+1) Delta^(2)`.
pub fn mean_n2<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("mean_n2", n, 1)?;
    let d = deltas(table, n)?;
    let nn = n_scalar::<S>(n);
    let coeff2 = n_scalar::<S>(n * (n - 1) * (n - 1)) / n_scalar::<S>(n + 1);
    Ok(nn.clone() * nn + n_scalar::<S>(n * n - 1) * d.d1 + coeff2 * d.d2)
}

/// `(N-1)^2 [ -Delta^(1) (1 + Delta^(1)) + N/(N+1) Delta^(2) ]`.
pub fn variance<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("variance", n, 1)?;
    let d = deltas(table, n)?;
    Ok(variance_from(n, &d))
}

fn variance_from<S: Scalar>(n: usize, d: &Deltas<S>) -> S {
    let m1 = n_scalar::<S>((n - 1) * (n - 1));
    let ratio = n_scalar::<S>(n) / n_scalar::<S>(n + 1);
    m1 * (-(d.d1.clone() * (S::one() + d.d1.clone())) + ratio * d.d2.clone())
}

/// Mandel parameter `variance / mean - 1`.
pub fn mandel_q<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    let mean = mean_n(table, n)?;
    let var = variance(table, n)?;
    if mean.is_zero() {
        return Err(Error::VanishingDenominator("mandel_q"));
    }
    Ok(var / mean - S::one())
}

/// `R = Delta^(2) / (N (N+1)) - (lambda_2 + Delta^(1)) / (N (N-1))`.
pub fn r_term<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("r_term", n, 2)?;
    let d = deltas(table, n)?;
    Ok(r_from(table, n, &d))
}

fn r_from<S: Scalar>(table: &NormTable<S>, n: usize, d: &Deltas<S>) -> S {
    let l2 = table.lambda(2);
    d.d2.clone() / n_scalar::<S>(n * (n + 1)) - (l2 + d.d1.clone()) / n_scalar::<S>(n * (n - 1))
}

/// `<B^dag D_00 B>_N = -2 [lambda_2 + Delta^(1) + (N-1)^2/(N+1) Delta^(2)]`.
pub fn d00_moment<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("d00_moment", n, 1)?;
    let d = deltas(table, n)?;
    Ok(d00_from(table, n, &d))
}

fn d00_from<S: Scalar>(table: &NormTable<S>, n: usize, d: &Deltas<S>) -> S {
    let coeff = n_scalar::<S>((n - 1) * (n - 1)) / n_scalar::<S>(n + 1);
    S::from_i64(-2) * (table.lambda(2) + d.d1.clone() + coeff * d.d2.clone())
}

/// `<B^dag D_00 B>_N = -2 N (N-1) (Delta^(2)/(N+1) - R)`.
pub fn d00_moment_via_r<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("d00_moment", n, 2)?;
    let d = deltas(table, n)?;
    let r = r_from(table, n, &d);
    let inner = d.d2 / n_scalar::<S>(n + 1) - r;
    Ok(S::from_i64(-2) * n_scalar::<S>(n * (n - 1)) * inner)
}

/// `<B^dag2 B^2>_N = N(N-1) [1 + Delta^(1) + (N-3)/(N+1) Delta^(2) + 2R]`;
/// zero for a single coboson.
pub fn coincidence_moment<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    require_at_least("coincidence_moment", n, 1)?;
    let d = deltas(table, n)?;
    if n == 1 {
        return Ok(S::zero());
    }
    Ok(coincidence_from(table, n, &d))
}

fn coincidence_from<S: Scalar>(table: &NormTable<S>, n: usize, d: &Deltas<S>) -> S {
    let r = r_from(table, n, d);
    let coeff = S::from_i64(n as i64 - 3) / n_scalar::<S>(n + 1);
    let bracket = S::one() + d.d1.clone() + coeff * d.d2.clone() + S::from_i64(2) * r;
    n_scalar::<S>(n * (n - 1)) * bracket
}

/// `g2_N = <B^dag2 B^2>_N / <n>_N^2`.
pub fn g2<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<S> {
    let mean = mean_n(table, n)?;
    let coincidence = coincidence_moment(table, n)?;
    if mean.is_zero() {
        return Err(Error::VanishingDenominator("g2"));
    }
    Ok(coincidence / (mean.clone() * mean))
}

/// Exact two-coboson ratio `(1/2) (1-lambda_2)^3 / (1 - 2 lambda_2 + lambda_3)^2`.
pub fn g2_two<S: Scalar>(lambda2: &S, lambda3: &S) -> Result<S> {
    let den = S::one() - S::from_i64(2) * lambda2.clone() + lambda3.clone();
    if den.is_zero() {
        return Err(Error::VanishingDenominator("g2_two"));
    }
    let num = (S::one() - lambda2.clone()).powu(3);
    Ok(num / (S::from_i64(2) * den.clone() * den))
}

/// Small-density Mandel parameter `-1 + (N-1)^2 (lambda_3 - lambda_2^2)`.
pub fn approx_q<S: Scalar>(lambda2: &S, lambda3: &S, n: usize) -> S {
    let spread = lambda3.clone() - lambda2.clone() * lambda2.clone();
    -S::one() + n_scalar::<S>((n.max(1) - 1) * (n.max(1) - 1)) * spread
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximation {
    /// `(1 - 1/N)(1 + (N-1) lambda_2)`.
    A,
    /// `1 + (-1 + (N-1) lambda_2)/N`.
    B,
    /// `(1 - 1/N)(1 + lambda_2)`.
    LargeSample,
}

impl FromStr for Approximation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "large_sample" | "large-sample" => Ok(Self::LargeSample),
            other => Err(Error::UnknownVariant(other.to_string())),
        }
    }
}

pub fn approx_g2<S: Scalar>(lambda2: &S, n: usize, variant: Approximation) -> S {
    let nn = n_scalar::<S>(n);
    let nm1 = S::from_i64(n as i64 - 1);
    let base = S::one() - S::one() / nn.clone();
    match variant {
        Approximation::A => base * (S::one() + nm1 * lambda2.clone()),
        Approximation::B => S::one() + (-S::one() + nm1 * lambda2.clone()) / nn,
        Approximation::LargeSample => base * (S::one() + lambda2.clone()),
    }
}

/// Elementary-boson number state: `(g2, Q) = (1 - 1/N, -1)`.
pub fn baselines<S: Scalar>(n: usize) -> (S, S) {
    (S::one() - S::one() / n_scalar::<S>(n), -S::one())
}

/// Closed-form statistics at one particle count, with the small-density
/// approximations and elementary-boson baselines alongside.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport<S> {
    pub n: usize,
    pub eta: Option<f64>,
    pub mean_n: S,
    pub mean_n2: S,
    pub variance: S,
    /// Absolute error estimate of `variance` (zero in exact mode).
    pub variance_error: f64,
    pub mandel_q: S,
    pub q_error: f64,
    pub coincidence: S,
    pub g2: S,
    /// Undefined for a single coboson.
    pub r_term: Option<S>,
    pub d00_moment: S,
    pub approx_q: S,
    pub approx_g2_a: S,
    pub approx_g2_b: S,
    pub approx_g2_large: S,
    pub baseline_g2: S,
    pub baseline_q: S,
}

impl<S: Scalar> MomentReport<S> {
    /// `variance -/+ variance_error`; straddles zero when the variance is not
    /// resolved.
    pub fn variance_interval(&self) -> (f64, f64) {
        let v = self.variance.to_f64();
        (v - self.variance_error, v + self.variance_error)
    }

    pub fn variance_resolved(&self) -> bool {
        let (lo, hi) = self.variance_interval();
        S::is_exact() || !(lo <= 0.0 && hi >= 0.0) || self.variance.is_zero() && self.variance_error == 0.0
    }

    /// Violated physical bounds, allowing for the attached error estimates.
    pub fn bound_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n as f64;
        let slack = |x: f64| if S::is_exact() { 0.0 } else { 1e-12 * x.abs().max(1.0) };
        if self.mandel_q.to_f64() < -1.0 - self.q_error - slack(1.0) {
            out.push(format!("Q = {} < -1", self.mandel_q.render()));
        }
        if self.variance.to_f64() < -self.variance_error - slack(0.0) {
            out.push(format!("variance = {} < 0", self.variance.render()));
        }
        if self.mean_n.to_f64() > n + slack(n) {
            out.push(format!("<n> = {} > N", self.mean_n.render()));
        }
        if self.mean_n2.to_f64() > n * n + slack(n * n) {
            out.push(format!("<n^2> = {} > N^2", self.mean_n2.render()));
        }
        if self.coincidence.to_f64() < -slack(n * n) {
            out.push(format!("coincidence = {} < 0", self.coincidence.render()));
        }
        if self.g2.to_f64() < -slack(1.0) {
            out.push(format!("g2 = {} < 0", self.g2.render()));
        }
        out
    }
}

pub fn report<S: Scalar>(table: &NormTable<S>, n: usize) -> Result<MomentReport<S>> {
    require_at_least("report", n, 1)?;
    let d = deltas(table, n)?;
    let l2 = table.lambda(2);
    let l3 = table.lambda(3);

    let mean_n = mean_n(table, n)?;
    let mean_n2 = mean_n2(table, n)?;
    let variance = variance_from(n, &d);
    if mean_n.is_zero() {
        return Err(Error::VanishingDenominator("mandel_q"));
    }
    let mandel_q = variance.clone() / mean_n.clone() - S::one();
    let (coincidence, r_term) = if n == 1 {
        (S::zero(), None)
    } else {
        (coincidence_from(table, n, &d), Some(r_from(table, n, &d)))
    };
    let g2 = coincidence.clone() / (mean_n.clone() * mean_n.clone());
    let d00_moment = d00_from(table, n, &d);

    let (variance_error, q_error) = error_estimates(table, n, &d, &variance, &mean_n);
    let eta = match table.lambdas().source() {
        ExchangeSource::Hydrogenic { a_over_l } => Some(n as f64 * a_over_l.powi(3)),
        _ => None,
    };
    let (baseline_g2, baseline_q) = baselines(n);
    Ok(MomentReport {
        n,
        eta,
        approx_q: approx_q(&l2, &l3, n),
        approx_g2_a: approx_g2(&l2, n, Approximation::A),
        approx_g2_b: approx_g2(&l2, n, Approximation::B),
        approx_g2_large: approx_g2(&l2, n, Approximation::LargeSample),
        mean_n,
        mean_n2,
        variance,
        variance_error,
        mandel_q,
        q_error,
        coincidence,
        g2,
        r_term,
        d00_moment,
        baseline_g2,
        baseline_q,
    })
}

// First-order propagation of the norm-table error estimates.
fn error_estimates<S: Scalar>(
    table: &NormTable<S>,
    n: usize,
    d: &Deltas<S>,
    variance: &S,
    mean: &S,
) -> (f64, f64) {
    if S::is_exact() {
        return (0.0, 0.0);
    }
    let u = S::unit_roundoff();
    let (d1, d2) = (d.d1.to_f64(), d.d2.to_f64());
    let (e1, e2) = (table.delta_error(n, 1), table.delta_error(n, 2));
    let m1 = ((n - 1) * (n - 1)) as f64;
    let ratio = n as f64 / (n + 1) as f64;
    let var_err = m1 * ((1.0 + 2.0 * d1).abs() * e1 + ratio * e2)
        + 8.0 * u * m1 * (d1.abs() * (1.0 + d1.abs()) + ratio * d2.abs());
    let mean = mean.to_f64();
    let mean_err = (n - 1) as f64 * e1 + 4.0 * u * n as f64;
    let var = variance.to_f64();
    let q_err = var_err / mean + var.abs() * mean_err / (mean * mean) + 4.0 * u;
    (var_err, q_err)
}

/// Reports for every requested `N`, evaluated in parallel when the
/// `parallel` feature is on.
pub fn sweep<S: Scalar>(table: &NormTable<S>, ns: &[usize]) -> Vec<Result<MomentReport<S>>> {
    par::map(ns, |&n| report(table, n))
}

pub fn sweep_sequential<S: Scalar>(table: &NormTable<S>, ns: &[usize]) -> Vec<Result<MomentReport<S>>> {
    ns.iter().map(|&n| report(table, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::build_norm_table;
    use crate::profiles::{ExchangeTable, ModeProfile};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn table(p: &[Rational], n_max: usize) -> NormTable<Rational> {
        let profile = ModeProfile::new("t", p.to_vec()).unwrap();
        build_norm_table(&profile.exchange_table(n_max + 2), n_max).unwrap()
    }

    fn uniform4() -> NormTable<Rational> {
        table(&vec![q(1, 4); 4], 4)
    }

    fn skewed() -> NormTable<Rational> {
        table(&[q(1, 2), q(1, 4), q(1, 4)], 3)
    }

    #[test]
    fn uniform_four_modes_two_cobosons() {
        let t = uniform4();
        assert_eq!(mean_n(&t, 2).unwrap(), q(3, 2));
        assert_eq!(mean_n2(&t, 2).unwrap(), q(9, 4));
        assert_eq!(variance(&t, 2).unwrap(), q(0, 1));
        assert_eq!(mandel_q(&t, 2).unwrap(), q(-1, 1));
        assert_eq!(r_term(&t, 2).unwrap(), q(1, 16));
        assert_eq!(d00_moment(&t, 2).unwrap(), q(3, 4));
        assert_eq!(d00_moment_via_r(&t, 2).unwrap(), q(3, 4));
        assert_eq!(coincidence_moment(&t, 2).unwrap(), q(3, 2));
        assert_eq!(g2(&t, 2).unwrap(), q(2, 3));
        assert_eq!(g2_two(&q(1, 4), &q(1, 16)).unwrap(), q(2, 3));
    }

    #[test]
    fn skewed_profile_two_cobosons() {
        let t = skewed();
        assert_eq!(mean_n(&t, 2).unwrap(), q(13, 10));
        assert_eq!(variance(&t, 2).unwrap(), q(1, 100));
        assert_eq!(mandel_q(&t, 2).unwrap(), q(-129, 130));
        assert_eq!(r_term(&t, 2).unwrap(), q(9, 80));
        assert_eq!(coincidence_moment(&t, 2).unwrap(), q(5, 4));
        assert_eq!(g2(&t, 2).unwrap(), q(125, 169));
        assert_eq!(g2_two(&q(3, 8), &q(5, 32)).unwrap(), q(125, 169));
    }

    #[test]
    fn two_coboson_moments_match_unnormalized_matrix_elements() {
        // <psi_2|n|psi_2> = 4(1 - 2 l2 + l3), <psi_2|n^2|psi_2> = 4(2 - 6 l2 + l2^2 + 5 l3 - 2 l4),
        // <psi_2|psi_2> = 2(1 - l2), for arbitrary lambda lists.
        for lambdas in [
            vec![q(1, 1), q(1, 5), q(1, 30), q(1, 200)],
            vec![q(1, 1), q(3, 8), q(5, 32), q(9, 128)],
            vec![q(1, 1), q(1, 2), q(1, 3), q(1, 4)],
        ] {
            let (l2, l3, l4) = (lambdas[1].clone(), lambdas[2].clone(), lambdas[3].clone());
            let t = build_norm_table(&ExchangeTable::custom("c", lambdas).unwrap(), 2).unwrap();
            let norm = q(2, 1) * (q(1, 1) - &l2);
            let n1 = q(4, 1) * (q(1, 1) - q(2, 1) * &l2 + &l3);
            let n2 = q(4, 1)
                * (q(2, 1) - q(6, 1) * &l2 + &l2 * &l2 + q(5, 1) * &l3 - q(2, 1) * &l4);
            assert_eq!(mean_n(&t, 2).unwrap(), &n1 / &norm);
            assert_eq!(mean_n2(&t, 2).unwrap(), &n2 / &norm);
            assert_eq!(coincidence_moment(&t, 2).unwrap(), q(2, 1) * (q(1, 1) - &l2));
            assert_eq!(g2(&t, 2).unwrap(), g2_two(&l2, &l3).unwrap());
        }
    }

    #[test]
    fn elementary_limit() {
        let t = build_norm_table(&ExchangeTable::<Rational>::elementary(40), 38).unwrap();
        for n in 1..=38usize {
            let r = report(&t, n).unwrap();
            let nn = n as i64;
            assert_eq!(r.mean_n, q(nn, 1));
            assert_eq!(r.mean_n2, q(nn * nn, 1));
            assert_eq!(r.variance, q(0, 1));
            assert_eq!(r.mandel_q, q(-1, 1));
            assert_eq!(r.g2, q(nn - 1, nn));
            assert_eq!(r.d00_moment, q(0, 1));
            assert_eq!(r.coincidence, q(nn * (nn - 1), 1));
            if n >= 2 {
                assert_eq!(r.r_term, Some(q(0, 1)));
            }
        }
    }

    #[test]
    fn both_printed_forms_agree() {
        let t = table(&[q(2, 5), q(1, 5), q(1, 5), q(1, 10), q(1, 10)], 5);
        for n in 2..=5 {
            assert_eq!(mean_n(&t, n).unwrap(), mean_n_via_delta(&t, n).unwrap());
            assert_eq!(d00_moment(&t, n).unwrap(), d00_moment_via_r(&t, n).unwrap());
            let m = mean_n(&t, n).unwrap();
            assert_eq!(variance(&t, n).unwrap(), mean_n2(&t, n).unwrap() - &m * &m);
            assert_eq!(
                coincidence_moment(&t, n).unwrap(),
                mean_n2(&t, n).unwrap() - m + d00_moment(&t, n).unwrap()
            );
        }
    }

    #[test]
    fn error_paths() {
        let t = table(&vec![q(1, 3); 3], 5);
        assert_eq!(report(&t, 4), Err(Error::Blocked(4)));
        assert!(matches!(r_term(&t, 1), Err(Error::ParticleCount { min: 2, .. })));
        assert!(matches!(mean_n(&t, 0), Err(Error::ParticleCount { .. })));
        assert_eq!(g2_two(&q(1, 2), &q(0, 1)), Err(Error::VanishingDenominator("g2_two")));
        assert_eq!("c".parse::<Approximation>(), Err(Error::UnknownVariant("c".into())));
    }

    #[test]
    fn approximations() {
        let z = q(0, 1);
        for n in 1..6usize {
            let base = q(n as i64 - 1, n as i64);
            for v in [Approximation::A, Approximation::B, Approximation::LargeSample] {
                assert_eq!(approx_g2(&z, n, v), base);
            }
        }
        let l2 = q(1, 100);
        let a = approx_g2(&l2, 2, Approximation::A);
        let b = approx_g2(&l2, 2, Approximation::B);
        assert_eq!(a, q(101, 200));
        assert_eq!(b, q(101, 200));
        assert_eq!(approx_q(&q(1, 4), &q(1, 16), 7), q(-1, 1));
        assert_eq!(baselines::<Rational>(1), (q(0, 1), q(-1, 1)));
        assert_eq!(baselines::<Rational>(2), (q(1, 2), q(-1, 1)));
    }

    #[test]
    fn single_coboson() {
        let r = report(&skewed(), 1).unwrap();
        assert_eq!(r.mean_n, q(1, 1));
        assert_eq!(r.variance, q(0, 1));
        assert_eq!(r.g2, q(0, 1));
        assert_eq!(r.d00_moment, q(0, 1));
        assert_eq!(r.r_term, None);
    }

    #[test]
    fn sweep_matches_sequential() {
        let t = uniform4();
        let ns: Vec<usize> = (1..=4).collect();
        assert_eq!(sweep(&t, &ns), sweep_sequential(&t, &ns));
    }
}
