//! Norms of `B_0^{dag N}|v>`: `<v|B_0^N B_0^{dag N}|v> = N! F_N`.
//!
//! `F_N` follows from the exchange scatterings through
//! `F_N = sum_{n>=1} (-1)^(n-1) (N-1)!/(N-n)! lambda_n F_(N-n)`, which is
//! Newton's identity linking power sums and elementary symmetric polynomials.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profiles::ExchangeTable;
use crate::scalar::{CompensatedSum, Scalar};

/// `F_0..=F_(n_max+2)` with per-entry error estimates.
#[derive(Clone, Debug)]
pub struct NormTable<S> {
    f: Vec<S>,
    error: Vec<f64>,
    first_unreliable: Option<usize>,
    clamped: Vec<usize>,
    monotonicity_violations: Vec<usize>,
    lambdas: Arc<ExchangeTable<S>>,
    n_max: usize,
}

/// Builds `F_0..=F_(n_max+2)` by the full alternating recursion.
///
/// In floating point every entry carries a running error estimate: the
/// largest relative error inherited from earlier entries plus the rounding of
/// the current alternating sum, weighted by the magnitude of its terms. Once
/// that estimate exceeds `|F_N|` the table is unreliable from `N` on.
pub fn build_norm_table<S: Scalar>(lambdas: &ExchangeTable<S>, n_max: usize) -> Result<NormTable<S>> {
    NormTable::build(Arc::new(lambdas.clone()), n_max)
}

impl<S: Scalar> NormTable<S> {
    pub fn build(lambdas: Arc<ExchangeTable<S>>, n_max: usize) -> Result<Self> {
        let top = n_max + 2;
        if lambdas.len() < top {
            return Err(Error::MissingLambdas { required: top, available: lambdas.len() });
        }
        let unit = S::unit_roundoff();
        let modes = lambdas.mode_count();
        let mut f = Vec::with_capacity(top + 1);
        let mut error = Vec::with_capacity(top + 1);
        f.push(S::one());
        error.push(0.0);
        let mut first_unreliable = None;
        let mut clamped = Vec::new();
        let mut monotonicity_violations = Vec::new();
        let mut inherited = 0.0f64;

        for big_n in 1..=top {
            if modes.is_some_and(|m| big_n > m) {
                // Pauli blocking: more cobosons than pair modes.
                f.push(S::zero());
                error.push(0.0);
                continue;
            }
            let weights = S::exchange_weights(big_n, lambdas.lambdas());
            let mut value = if S::is_exact() {
                S::sum_all(weights.iter().enumerate().map(|(i, w)| {
                    let term = w.clone() * f[big_n - 1 - i].clone();
                    if i % 2 == 0 { term } else { -term }
                }))
            } else {
                S::zero()
            };
            let mut bound = 0.0;
            if !S::is_exact() {
                let mut acc = CompensatedSum::default();
                let mut weighted = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    let term = w.to_f64() * f[big_n - 1 - i].to_f64();
                    let term = if i % 2 == 0 { term } else { -term };
                    acc.add(term);
                    weighted += term.abs() * (i + 3) as f64;
                }
                let sum = acc.value();
                bound = inherited * sum.abs() + unit * weighted;
                value = S::from_f64_lossy(sum);
                let magnitude = sum.abs();
                if !sum.is_finite() || bound >= magnitude {
                    first_unreliable.get_or_insert(big_n);
                }
                if sum < 0.0 {
                    if -sum <= bound {
                        value = S::zero();
                        clamped.push(big_n);
                    } else if first_unreliable.is_none() {
                        return Err(Error::NegativeNorm { n: big_n, value: sum, bound });
                    }
                    // Past the reliable range the sign carries no information.
                }
                if magnitude > 0.0 && first_unreliable.is_none() {
                    inherited = inherited.max(bound / magnitude);
                }
            }

            let prev = &f[big_n - 1];
            let slack = bound + error[big_n - 1];
            if (value.clone() - prev.clone()).to_f64() > slack && first_unreliable.is_none() {
                if lambdas.is_profile_derived() {
                    return Err(Error::NonMonotoneNorm { n: big_n - 1 });
                }
                monotonicity_violations.push(big_n - 1);
            }
            f.push(value);
            error.push(bound);
        }

        Ok(Self { f, error, first_unreliable, clamped, monotonicity_violations, lambdas, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `F_N`, for `N <= n_max + 2`.
    pub fn f(&self, n: usize) -> Option<&S> {
        self.f.get(n)
    }

    pub fn values(&self) -> &[S] {
        &self.f
    }

    /// Estimated absolute error of `F_N` (zero in exact mode).
    pub fn error(&self, n: usize) -> Option<f64> {
        self.error.get(n).copied()
    }

    pub fn lambdas(&self) -> &ExchangeTable<S> {
        &self.lambdas
    }

    pub fn shared_lambdas(&self) -> Arc<ExchangeTable<S>> {
        Arc::clone(&self.lambdas)
    }

    pub fn lambda(&self, n: usize) -> S {
        self.lambdas.lambda(n).cloned().unwrap_or_else(S::zero)
    }

    /// First index whose float estimate is not trustworthy.
    pub fn first_unreliable(&self) -> Option<usize> {
        self.first_unreliable
    }

    /// Entries that came out slightly negative and were set to zero.
    pub fn clamped(&self) -> &[usize] {
        &self.clamped
    }

    /// `N` with `F_(N+1) > F_N`, only ever populated for hand-made lambda lists.
    pub fn monotonicity_violations(&self) -> &[usize] {
        &self.monotonicity_violations
    }

    /// Largest particle count whose moments rest on reliable entries.
    pub fn last_reliable_n(&self) -> Option<usize> {
        match self.first_unreliable {
            None => Some(self.n_max),
            Some(k) => k.checked_sub(3).map(|n| n.min(self.n_max)),
        }
    }

    /// Checks that moments at `N` can be evaluated: `F_N .. F_(N+2)` exist,
    /// are reliable, and `F_N > 0`.
    pub fn require_moments(&self, n: usize) -> Result<()> {
        let needed = n + 2;
        let reliable = |k: usize| self.first_unreliable.is_none_or(|u| k < u);
        if n < self.f.len() && reliable(n) && self.f[n].is_zero() {
            return Err(Error::Blocked(n));
        }
        if needed >= self.f.len() {
            return Err(Error::OutOfTable { requested: n, needed, available: self.f.len() - 1 });
        }
        if self.first_unreliable.is_some_and(|k| needed >= k) {
            return Err(Error::PrecisionDomain { requested: n, last_reliable: self.last_reliable_n() });
        }
        Ok(())
    }

    /// `Delta_N^(n) = (F_(N+n) - F_(N+n-1)) / F_N` for `n` in `{1, 2}`.
    pub fn delta(&self, big_n: usize, n: usize) -> Result<S> {
        assert!(n == 1 || n == 2, "Delta is only defined for n = 1, 2");
        self.require_moments(big_n)?;
        Ok(self.delta_unchecked(big_n, n))
    }

    pub(crate) fn delta_unchecked(&self, big_n: usize, n: usize) -> S {
        (self.f[big_n + n].clone() - self.f[big_n + n - 1].clone()) / self.f[big_n].clone()
    }

    /// Absolute error estimate of `Delta_N^(n)`.
    pub(crate) fn delta_error(&self, big_n: usize, n: usize) -> f64 {
        if S::is_exact() {
            return 0.0;
        }
        let fnn = self.f[big_n].to_f64();
        let delta = self.delta_unchecked(big_n, n).to_f64();
        (self.error[big_n + n] + self.error[big_n + n - 1]) / fnn
            + delta.abs() * self.error[big_n] / fnn
            + 4.0 * S::unit_roundoff() * (delta.abs() + 1.0)
    }
}

pub fn delta<S: Scalar>(table: &NormTable<S>, big_n: usize, n: usize) -> Result<S> {
    table.delta(big_n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{HydrogenicProfile, ModeProfile};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn elementary_limit_is_flat() {
        let table = build_norm_table(&ExchangeTable::<Rational>::elementary(12), 10).unwrap();
        assert!(table.values().iter().all(|f| *f == q(1, 1)));
        for n in 1..=10 {
            assert_eq!(table.delta(n, 1).unwrap(), q(0, 1));
            assert_eq!(table.delta(n, 2).unwrap(), q(0, 1));
        }
    }

    #[test]
    fn low_order_norms_match_closed_forms() {
        let (l2, l3, l4) = (q(1, 7), q(1, 50), q(1, 400));
        let lambdas = vec![q(1, 1), l2.clone(), l3.clone(), l4.clone()];
        let table = build_norm_table(&ExchangeTable::custom("t", lambdas).unwrap(), 2).unwrap();
        let one = q(1, 1);
        assert_eq!(table.f(2).unwrap(), &(&one - &l2));
        assert_eq!(table.f(3).unwrap(), &(&one - q(3, 1) * &l2 + q(2, 1) * &l3));
        let f4 = &one - q(6, 1) * &l2 + q(8, 1) * &l3 + q(3, 1) * &l2 * &l2 - q(6, 1) * &l4;
        assert_eq!(table.f(4).unwrap(), &f4);
    }

    #[test]
    fn uniform_four_modes() {
        let p = ModeProfile::<Rational>::uniform(4).unwrap();
        let table = build_norm_table(&p.exchange_table(6), 4).unwrap();
        let expected = [q(1, 1), q(1, 1), q(3, 4), q(3, 8), q(3, 32), q(0, 1), q(0, 1)];
        assert_eq!(table.values(), &expected);
        assert_eq!(table.delta(2, 1).unwrap(), q(-1, 2));
        assert_eq!(table.delta(2, 2).unwrap(), q(-3, 8));
        assert_eq!(table.delta(5, 1), Err(Error::Blocked(5)));
    }

    #[test]
    fn pauli_blocking_without_shortcut() {
        // A custom table with the same lambdas has no mode count, so the zeros
        // must come out of the recursion itself.
        let p = ModeProfile::<Rational>::uniform(3).unwrap();
        let lambdas = p.exchange_table(8).lambdas().to_vec();
        let table = build_norm_table(&ExchangeTable::custom("u3", lambdas).unwrap(), 6).unwrap();
        for n in 4..=8 {
            assert_eq!(table.f(n).unwrap(), &q(0, 1), "F_{n}");
        }
    }

    #[test]
    fn missing_lambdas() {
        let p = ModeProfile::<Rational>::uniform(3).unwrap();
        let err = build_norm_table(&p.exchange_table(4), 3).unwrap_err();
        assert_eq!(err, Error::MissingLambdas { required: 5, available: 4 });
    }

    #[test]
    fn out_of_table_and_precision_errors() {
        let p = ModeProfile::<Rational>::uniform(4).unwrap();
        let table = build_norm_table(&p.exchange_table(5), 3).unwrap();
        assert!(matches!(table.delta(4, 1), Err(Error::OutOfTable { .. })));

        let h = HydrogenicProfile::new((0.02f64 / 100.0).cbrt()).unwrap();
        let table = build_norm_table(&h.exchange_table(300), 298).unwrap();
        let k = table.first_unreliable().expect("dense hydrogenic runs lose all digits");
        assert!(k > 20 && k < 298);
        let last = table.last_reliable_n().unwrap();
        assert!(table.delta(last, 2).is_ok());
        assert_eq!(
            table.delta(last + 1, 1),
            Err(Error::PrecisionDomain { requested: last + 1, last_reliable: Some(last) })
        );
    }

    #[test]
    fn float_estimate_covers_actual_error() {
        for (eta, n) in [(1e-3, 100usize), (1e-2, 30), (3e-3, 150)] {
            let h = HydrogenicProfile::new((eta / n as f64).cbrt()).unwrap();
            let float = build_norm_table(&h.exchange_table(n + 2), n).unwrap();
            let exact = build_norm_table(&h.dyadic_exchange_table(n + 2), n).unwrap();
            for k in 0..=n + 2 {
                let actual = (float.f(k).unwrap() - exact.f(k).unwrap().to_f64()).abs();
                assert!(actual <= float.error(k).unwrap() + 1e-300, "eta {eta} N {k}");
            }
            assert!(float.first_unreliable().is_none());
        }
    }

    #[test]
    fn custom_non_monotone_tables_are_reported() {
        let lambdas = vec![q(1, 1), q(-1, 2), q(0, 1), q(0, 1), q(0, 1)];
        let table = build_norm_table(&ExchangeTable::custom("up", lambdas).unwrap(), 3).unwrap();
        assert_eq!(table.f(2).unwrap(), &q(3, 2));
        assert_eq!(table.monotonicity_violations()[0], 1);
    }

    #[test]
    fn float_matches_rational() {
        let p = ModeProfile::new("w", vec![q(1, 2), q(1, 5), q(1, 10), q(1, 10), q(1, 10)]).unwrap();
        let exact = build_norm_table(&p.exchange_table(8), 6).unwrap();
        let float = build_norm_table(&p.to_float().exchange_table(8), 6).unwrap();
        for n in 0..=8 {
            let (a, b) = (exact.f(n).unwrap().to_f64(), *float.f(n).unwrap());
            assert!((a - b).abs() <= float.error(n).unwrap().max(1e-300), "F_{n}");
        }
    }
}
