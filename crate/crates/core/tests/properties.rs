use std::sync::Arc;

use coboson::oracle::{coboson_ladder, elementary_symmetric, oracle_f, FockState};
use coboson::statistics::{self, report, sweep, sweep_sequential};
use coboson::{build_norm_table, ExchangeTable, ModeProfile, NormTable, Rational, Scalar};
use num_traits::Zero;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn weights(max_modes: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=30, 1..=max_modes)
}

fn profile(w: &[u64]) -> ModeProfile<Rational> {
    ModeProfile::from_weights("w", w.iter().map(|&x| Rational::from_u64(x)).collect(), true).unwrap()
}

/// Arbitrary rational lambda lists with `lambda_1 = 1`; nothing else is
/// required of them.
fn lambda_list(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-30i64..=30, 1i64..=40), len - 1).prop_map(|pairs| {
        std::iter::once(q(1, 1)).chain(pairs.into_iter().map(|(n, d)| q(n, d))).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_is_second_moment_minus_mean_squared(lambdas in lambda_list(8), n in 1usize..=6) {
        let table = build_norm_table(&ExchangeTable::custom("x", lambdas).unwrap(), 6).unwrap();
        prop_assume!(!table.f(n).unwrap().is_zero());
        let mean = statistics::mean_n(&table, n).unwrap();
        let mean2 = statistics::mean_n2(&table, n).unwrap();
        prop_assert_eq!(statistics::variance(&table, n).unwrap(), mean2 - mean.clone() * mean);
    }

    #[test]
    fn mean_forms_agree(lambdas in lambda_list(8), n in 1usize..=6) {
        let table = build_norm_table(&ExchangeTable::custom("x", lambdas).unwrap(), 6).unwrap();
        prop_assume!(!table.f(n).unwrap().is_zero());
        prop_assert_eq!(statistics::mean_n(&table, n).unwrap(), statistics::mean_n_via_delta(&table, n).unwrap());
    }

    #[test]
    fn coincidence_decomposes(lambdas in lambda_list(8), n in 2usize..=6) {
        let table = build_norm_table(&ExchangeTable::custom("x", lambdas).unwrap(), 6).unwrap();
        prop_assume!(!table.f(n).unwrap().is_zero());
        let r = report(&table, n).unwrap();
        prop_assert_eq!(r.coincidence.clone(), r.mean_n2.clone() - r.mean_n.clone() + r.d00_moment.clone());
        prop_assert_eq!(r.d00_moment, statistics::d00_moment_via_r(&table, n).unwrap());
    }

    #[test]
    fn recursion_is_newton_identity(w in weights(7)) {
        let p = profile(&w);
        let m = p.mode_count();
        let table = build_norm_table(&p.exchange_table(m + 4), m + 2).unwrap();
        let e = elementary_symmetric(p.probabilities());
        let mut factorial = q(1, 1);
        for n in 0..=m + 4 {
            if n > 0 {
                factorial *= Rational::from_u64(n as u64);
            }
            let expected = e.get(n).cloned().unwrap_or_default() * factorial.clone();
            prop_assert_eq!(table.f(n).unwrap(), &expected, "F_{}", n);
        }
    }

    #[test]
    fn norms_decrease_and_lambdas_are_log_convex(w in weights(8)) {
        let p = profile(&w);
        let lambdas = p.exchange_table(12);
        prop_assert!(lambdas.invariant_violations().is_empty());
        let table = build_norm_table(&lambdas, 10).unwrap();
        for n in 0..12 {
            prop_assert!(table.f(n + 1).unwrap() <= table.f(n).unwrap());
        }
    }

    #[test]
    fn float_table_within_its_estimate(w in weights(8)) {
        let p = profile(&w);
        let exact = build_norm_table(&p.exchange_table(10), 8).unwrap();
        let float = build_norm_table(&p.to_float().exchange_table(10), 8).unwrap();
        for n in 0..=10 {
            let diff = (exact.f(n).unwrap().to_f64() - float.f(n).unwrap()).abs();
            // The lambdas themselves are rounded once on conversion.
            let slack = 8.0 * f64::EPSILON * exact.f(n).unwrap().to_f64().abs();
            prop_assert!(diff <= float.error(n).unwrap() + slack + 1e-300, "F_{}: {} vs {}", n, diff, float.error(n).unwrap());
        }
    }

    #[test]
    fn oracle_norm_matches_recursion(w in weights(6)) {
        let p = profile(&w);
        let m = p.mode_count();
        let table = build_norm_table(&p.exchange_table(m + 2), m).unwrap();
        for n in 0..=m + 1 {
            prop_assert_eq!(&oracle_f(&p, n).unwrap(), table.f(n).unwrap());
        }
    }

    #[test]
    fn ladder_dimension_is_binomial(w in weights(8)) {
        let p = Arc::new(profile(&w));
        let m = p.mode_count();
        let states = coboson_ladder(&p, m + 1).unwrap();
        let mut binom = 1usize;
        for (n, s) in states.iter().enumerate() {
            prop_assert_eq!(s.configurations(), binom);
            binom = binom * (m - n.min(m)) / (n + 1);
        }
    }

    #[test]
    fn annihilation_is_adjoint_of_creation(w in weights(5), coeffs in prop::collection::vec(-5i64..=5, 12)) {
        let p = Arc::new(profile(&w));
        let m = p.mode_count();
        let ladder = coboson_ladder(&p, m).unwrap();
        // Random members of the vacuum's parity class.
        let pieces: Vec<FockState<Rational>> = ladder
            .iter()
            .flat_map(|s| [s.clone(), s.apply_l2_dagger_direct(), s.apply_d00(), s.apply_b0()])
            .collect();
        let mix = |offset: usize| {
            let terms: Vec<(Rational, &FockState<Rational>)> = pieces
                .iter()
                .enumerate()
                .map(|(i, s)| (Rational::from_i64(coeffs[(i + offset) % coeffs.len()]), s))
                .collect();
            FockState::linear_combination(&terms).unwrap()
        };
        let (phi, psi) = (mix(0), mix(5));
        prop_assert_eq!(phi.inner(&psi.apply_b0()).unwrap(), phi.apply_b0_dagger().inner(&psi).unwrap());
        prop_assert_eq!(phi.inner(&psi.apply_l2()).unwrap(), phi.apply_l2_dagger().inner(&psi).unwrap());
        prop_assert_eq!(phi.inner(&psi.apply_d00()).unwrap(), phi.apply_d00().inner(&psi).unwrap());
    }

    #[test]
    fn sweep_is_order_preserving(w in weights(6)) {
        let p = profile(&w).to_float();
        let m = p.mode_count();
        let table = NormTable::build(Arc::new(p.exchange_table(m + 2)), m).unwrap();
        let ns: Vec<usize> = (1..=m).rev().collect();
        prop_assert_eq!(sweep(&table, &ns), sweep_sequential(&table, &ns));
    }
}

#[test]
fn commutator_on_every_basis_state() {
    // c_k = 1/2 keeps every amplitude rational, across parity classes too.
    let p = Arc::new(ModeProfile::<Rational>::uniform(4).unwrap());
    for mask in 0u32..16 {
        let modes: Vec<usize> = (0..4).filter(|k| mask & (1 << k) != 0).collect();
        let s = FockState::basis_state(Arc::clone(&p), &modes).unwrap();
        let commutator = s.apply_b0_dagger().apply_b0().minus(&s.apply_b0().apply_b0_dagger()).unwrap();
        assert_eq!(commutator.plus(&s.apply_d00()).unwrap(), s, "mask {mask:#b}");
        assert_eq!(s.apply_d00(), s.apply_d00_diagonal());
    }
}

#[test]
fn lambdas_emerge_from_contractions() {
    let p = Arc::new(ModeProfile::new("p", vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap());
    let v = FockState::vacuum(Arc::clone(&p)).unwrap();
    let one = v.apply_b0_dagger();
    // <v| L_2 B^dag |v> and <v| L_3 B^dag |v>
    assert_eq!(v.inner(&one.apply_l2()).unwrap(), p.lambda(2).unwrap());
    assert_eq!(v.inner(&one.apply_l3()).unwrap(), p.lambda(3).unwrap());
    // <v| B L_3^dag |v> through the direct form
    assert_eq!(one.inner(&v.apply_l3_dagger_direct()).unwrap(), p.lambda(3).unwrap());
}
