//! Brute-force many-body oracle on the paired-mode basis.
//!
//! Coboson 0 is `B_0^dag = sum_k c_k a_k^dag b_k^dag` with `c_k = sqrt(p_k)`.
//! Each pair mode is empty or doubly occupied, so a configuration is a subset
//! of modes (a bitmask) and pair operators commute without signs.
//!
//! Amplitudes are stored in reduced form: a state in parity class `T` has
//! amplitude `r(S) * prod_{k in S xor T} c_k` on configuration `S`. Every
//! operator built from `B_0`, `B_0^dag` and diagonal mode weights keeps `r`
//! in the scalar field, so exact rationals never meet a square root unless a
//! caller explicitly asks for one.

mod identities;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

pub use identities::{
    check_identities, closed_form_equivalence, verify_batch, verify_batch_sequential, verify_profile, CheckEntry,
    CheckReport, CheckStatus, IDENTITY_MODE_LIMIT,
};

use crate::error::{Error, Result};
use crate::profiles::ModeProfile;
use crate::scalar::{Rational, Scalar};
use crate::statistics::{approx_g2, approx_q, baselines, Approximation, MomentReport};

/// Largest mode count the oracle accepts.
pub const MAX_MODES: usize = 24;

fn check_limits(modes: usize, n: usize) -> Result<()> {
    if modes > MAX_MODES {
        return Err(Error::OracleLimit { limit: MAX_MODES, modes, n });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockState<S> {
    profile: Arc<ModeProfile<S>>,
    parity: u32,
    amps: BTreeMap<u32, S>,
}

#[derive(Clone, Copy)]
enum Shift {
    Raise,
    Lower,
}

impl<S: Scalar> FockState<S> {
    pub fn vacuum(profile: Arc<ModeProfile<S>>) -> Result<Self> {
        check_limits(profile.mode_count(), 0)?;
        Ok(Self { profile, parity: 0, amps: BTreeMap::from([(0, S::one())]) })
    }

    /// `|S>` with unit amplitude, i.e. `prod_{k in S} a_k^dag b_k^dag |v>`.
    pub fn basis_state(profile: Arc<ModeProfile<S>>, modes: &[usize]) -> Result<Self> {
        check_limits(profile.mode_count(), modes.len())?;
        let mut mask = 0u32;
        for &k in modes {
            if k >= profile.mode_count() {
                return Err(Error::InvalidWeight { index: k, reason: "mode outside the profile".into() });
            }
            mask |= 1 << k;
        }
        Ok(Self { profile, parity: mask, amps: BTreeMap::from([(mask, S::one())]) })
    }

    fn empty_like(&self) -> Self {
        Self { profile: Arc::clone(&self.profile), parity: self.parity, amps: BTreeMap::new() }
    }

    pub fn profile(&self) -> &ModeProfile<S> {
        &self.profile
    }

    pub fn mode_count(&self) -> usize {
        self.profile.mode_count()
    }

    pub fn parity_class(&self) -> u32 {
        self.parity
    }

    /// Number of configurations with non-zero reduced amplitude.
    pub fn configurations(&self) -> usize {
        self.amps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    /// `(mask, r(S))` pairs.
    pub fn reduced_amplitudes(&self) -> impl Iterator<Item = (u32, &S)> {
        self.amps.iter().map(|(m, r)| (*m, r))
    }

    fn p(&self, k: usize) -> &S {
        &self.profile.probabilities()[k]
    }

    fn p_product(&self, mask: u32) -> S {
        let mut acc = S::one();
        for k in 0..self.mode_count() {
            if mask & (1 << k) != 0 {
                acc = acc * self.p(k).clone();
            }
        }
        acc
    }

    /// Squared amplitude on configuration `mask`; always in the scalar field.
    pub fn amplitude_squared(&self, mask: u32) -> S {
        match self.amps.get(&mask) {
            Some(r) => r.clone() * r.clone() * self.p_product(mask ^ self.parity),
            None => S::zero(),
        }
    }

    /// Amplitude on configuration `mask`, when representable.
    pub fn amplitude(&self, mask: u32) -> Result<S> {
        let Some(r) = self.amps.get(&mask) else { return Ok(S::zero()) };
        let c = self
            .p_product(mask ^ self.parity)
            .sqrt_exact()
            .ok_or_else(|| Error::Irrational(format!("amplitude of configuration {mask:#b}")))?;
        Ok(r.clone() * c)
    }

    fn accumulate(amps: &mut BTreeMap<u32, S>, mask: u32, value: S) {
        if value.is_zero() {
            return;
        }
        let slot = amps.entry(mask).or_insert_with(S::zero);
        *slot = slot.clone() + value;
        if slot.is_zero() {
            amps.remove(&mask);
        }
    }

    /// `sum_k w_k c_k P_k^dag` (raise) or `sum_k w_k c_k P_k` (lower), with
    /// `w_k = 1` when no weights are given.
    fn shift(&self, direction: Shift, weights: Option<&[S]>) -> Self {
        let mut out = self.empty_like();
        for (&mask, r) in &self.amps {
            for k in 0..self.mode_count() {
                let bit = 1u32 << k;
                let occupied = mask & bit != 0;
                let target = match direction {
                    Shift::Raise if !occupied => mask | bit,
                    Shift::Lower if occupied => mask & !bit,
                    _ => continue,
                };
                // The c_k brought in either joins the implicit product or pairs
                // up with one already there into p_k.
                let in_class = self.parity & bit != 0;
                let pairs_up = match direction {
                    Shift::Raise => in_class,
                    Shift::Lower => !in_class,
                };
                let mut value = r.clone();
                if pairs_up {
                    value = value * self.p(k).clone();
                }
                if let Some(w) = weights {
                    value = value * w[k].clone();
                }
                Self::accumulate(&mut out.amps, target, value);
            }
        }
        out
    }

    fn combine(&self, a: &S, other: &Self, b: &S) -> Self {
        debug_assert_eq!(self.parity, other.parity);
        let mut out = self.empty_like();
        for (&m, r) in &self.amps {
            Self::accumulate(&mut out.amps, m, a.clone() * r.clone());
        }
        for (&m, r) in &other.amps {
            Self::accumulate(&mut out.amps, m, b.clone() * r.clone());
        }
        out
    }

    fn ensure_same_class(&self, other: &Self) -> Result<()> {
        if self.parity != other.parity {
            return Err(Error::Irrational(format!(
                "adding states of parity classes {:#b} and {:#b}",
                self.parity, other.parity
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: &S) -> Self {
        let mut out = self.empty_like();
        for (&m, r) in &self.amps {
            Self::accumulate(&mut out.amps, m, s.clone() * r.clone());
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.ensure_same_class(other)?;
        Ok(self.combine(&S::one(), other, &S::one()))
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.ensure_same_class(other)?;
        Ok(self.combine(&S::one(), other, &-S::one()))
    }

    /// `sum_i a_i |s_i>`; every state must share one parity class.
    pub fn linear_combination(terms: &[(S, &Self)]) -> Result<Self> {
        let (first_coeff, first) = terms.first().expect("at least one term");
        let mut acc = first.scaled(first_coeff);
        for (coeff, state) in &terms[1..] {
            acc.ensure_same_class(state)?;
            acc = acc.combine(&S::one(), state, coeff);
        }
        Ok(acc)
    }

    pub fn apply_b0_dagger(&self) -> Self {
        self.shift(Shift::Raise, None)
    }

    pub fn apply_b0(&self) -> Self {
        self.shift(Shift::Lower, None)
    }

    /// `B_0^dag B_0`.
    pub fn apply_number(&self) -> Self {
        self.apply_b0().apply_b0_dagger()
    }

    /// `D_00 = 1 - B_0 B_0^dag + B_0^dag B_0`.
    pub fn apply_d00(&self) -> Self {
        let bbd = self.apply_b0_dagger().apply_b0();
        let bdb = self.apply_b0().apply_b0_dagger();
        let one = S::one();
        self.combine(&one, &bbd, &-one.clone()).combine(&one, &bdb, &one)
    }

    fn half_commutator(left: &Self, right: &Self) -> Self {
        let half = S::ratio(1, 2);
        left.combine(&half, right, &-half.clone())
    }

    /// `L_2^dag = [D_00, B_0^dag] / 2`.
    pub fn apply_l2_dagger(&self) -> Self {
        Self::half_commutator(&self.apply_b0_dagger().apply_d00(), &self.apply_d00().apply_b0_dagger())
    }

    /// `L_3^dag = [D_00, L_2^dag] / 2`.
    pub fn apply_l3_dagger(&self) -> Self {
        Self::half_commutator(&self.apply_l2_dagger().apply_d00(), &self.apply_d00().apply_l2_dagger())
    }

    /// `L_2 = [B_0, D_00] / 2`, the adjoint of `L_2^dag`.
    pub fn apply_l2(&self) -> Self {
        Self::half_commutator(&self.apply_d00().apply_b0(), &self.apply_b0().apply_d00())
    }

    /// `L_3 = [L_2, D_00] / 2`.
    pub fn apply_l3(&self) -> Self {
        Self::half_commutator(&self.apply_d00().apply_l2(), &self.apply_l2().apply_d00())
    }

    /// `2 sum_k p_k n_k`, the diagonal form of `D_00` in this model.
    pub fn apply_d00_diagonal(&self) -> Self {
        let mut out = self.empty_like();
        for (&mask, r) in &self.amps {
            let weight = S::sum_all((0..self.mode_count()).filter(|k| mask & (1 << k) != 0).map(|k| self.p(k).clone()));
            Self::accumulate(&mut out.amps, mask, S::from_i64(2) * weight * r.clone());
        }
        out
    }

    /// `sum_k p_k c_k P_k^dag`.
    pub fn apply_l2_dagger_direct(&self) -> Self {
        self.shift(Shift::Raise, Some(self.profile.probabilities()))
    }

    /// `sum_k p_k^2 c_k P_k^dag`.
    pub fn apply_l3_dagger_direct(&self) -> Self {
        let squares: Vec<S> = self.profile.probabilities().iter().map(|p| p.clone() * p.clone()).collect();
        self.shift(Shift::Raise, Some(&squares))
    }

    /// `<self|other>`; both amplitudes are real.
    pub fn inner(&self, other: &Self) -> Result<S> {
        let cross = self.parity ^ other.parity;
        let common = if cross == 0 {
            S::one()
        } else {
            self.p_product(cross).sqrt_exact().ok_or_else(|| {
                Error::Irrational(format!("overlap of parity classes {:#b} and {:#b}", self.parity, other.parity))
            })?
        };
        let (small, large) = if self.amps.len() <= other.amps.len() { (self, other) } else { (other, self) };
        let sum = S::sum_all(small.amps.iter().filter_map(|(mask, a)| {
            large.amps.get(mask).map(|b| {
                let shared = (mask ^ self.parity) & (mask ^ other.parity);
                a.clone() * b.clone() * self.p_product(shared)
            })
        }));
        Ok(common * sum)
    }

    pub fn norm_squared(&self) -> S {
        self.inner(self).expect("a state always overlaps its own class")
    }
}

pub fn apply_b0_dagger<S: Scalar>(state: &FockState<S>) -> FockState<S> {
    state.apply_b0_dagger()
}

pub fn apply_b0<S: Scalar>(state: &FockState<S>) -> FockState<S> {
    state.apply_b0()
}

pub fn apply_d00<S: Scalar>(state: &FockState<S>) -> FockState<S> {
    state.apply_d00()
}

pub fn apply_l2_dagger<S: Scalar>(state: &FockState<S>) -> FockState<S> {
    state.apply_l2_dagger()
}

pub fn apply_l3_dagger<S: Scalar>(state: &FockState<S>) -> FockState<S> {
    state.apply_l3_dagger()
}

pub fn inner<S: Scalar>(a: &FockState<S>, b: &FockState<S>) -> Result<S> {
    a.inner(b)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `|psi_0>, ..., |psi_top>` with `|psi_N> = B_0^{dag N}|v>`.
pub fn coboson_ladder<S: Scalar>(profile: &Arc<ModeProfile<S>>, top: usize) -> Result<Vec<FockState<S>>> {
    let modes = profile.mode_count();
    check_limits(modes, top.min(modes))?;
    let mut states = vec![FockState::vacuum(Arc::clone(profile))?];
    for n in 1..=top {
        let next = states[n - 1].apply_b0_dagger();
        if next.configurations() != binomial(modes, n) {
            return Err(Error::OracleMismatch(format!(
                "|psi_{n}> has {} configurations, expected C({modes}, {n})",
                next.configurations()
            )));
        }
        states.push(next);
    }
    Ok(states)
}

/// `e_0..=e_M` of the profile probabilities, by expanding `prod_k (1 + p_k x)`.
pub fn elementary_symmetric<S: Scalar>(p: &[S]) -> Vec<S> {
    let mut e = vec![S::zero(); p.len() + 1];
    e[0] = S::one();
    for (j, pk) in p.iter().enumerate() {
        for i in (1..=j + 1).rev() {
            e[i] = e[i].clone() + pk.clone() * e[i - 1].clone();
        }
    }
    e
}

fn factorial<S: Scalar>(n: usize) -> S {
    (1..=n).fold(S::one(), |acc, k| acc * S::from_u64(k as u64))
}

/// `F_N = <psi_N|psi_N> / N!`, checked against `N! e_N(p)`.
pub fn oracle_f<S: Scalar>(profile: &ModeProfile<S>, n: usize) -> Result<S> {
    let profile = Arc::new(profile.clone());
    let states = coboson_ladder(&profile, n)?;
    let from_state = states[n].norm_squared() / factorial::<S>(n);
    let e = elementary_symmetric(profile.probabilities());
    let from_polynomial = factorial::<S>(n) * e.get(n).cloned().unwrap_or_else(S::zero);
    let agree = if S::is_exact() {
        from_state == from_polynomial
    } else {
        (from_state.to_f64() - from_polynomial.to_f64()).abs() <= 1e-10 * from_polynomial.to_f64().abs().max(1e-300)
    };
    if !agree {
        return Err(Error::OracleMismatch(format!(
            "F_{n}: state norm gives {}, symmetric polynomial gives {}",
            from_state.render(),
            from_polynomial.render()
        )));
    }
    Ok(from_state)
}

/// Statistics computed by definition, `<A>_N = <psi_N|A|psi_N>/<psi_N|psi_N>`,
/// with every operator applied explicitly.
pub fn oracle_report<S: Scalar>(profile: &ModeProfile<S>, n: usize) -> Result<MomentReport<S>> {
    if n == 0 {
        return Err(Error::ParticleCount { quantity: "oracle_report", min: 1, n });
    }
    let shared = Arc::new(profile.clone());
    let states = coboson_ladder(&shared, n)?;
    let psi = &states[n];
    let norm = psi.norm_squared();
    if norm.is_zero() {
        return Err(Error::Blocked(n));
    }
    let b_psi = psi.apply_b0();
    let n_psi = b_psi.apply_b0_dagger();
    let bb_psi = b_psi.apply_b0();

    let mean_n = psi.inner(&n_psi)? / norm.clone();
    let mean_n2 = n_psi.norm_squared() / norm.clone();
    let variance = mean_n2.clone() - mean_n.clone() * mean_n.clone();
    let mandel_q = variance.clone() / mean_n.clone() - S::one();
    let coincidence = bb_psi.norm_squared() / norm.clone();
    let g2 = coincidence.clone() / (mean_n.clone() * mean_n.clone());
    let d00_moment = b_psi.inner(&b_psi.apply_d00())? / norm.clone();
    let r_term = if n >= 2 {
        let l2l2 = states[n - 2].apply_l2_dagger().apply_l2_dagger();
        Some(psi.inner(&l2l2)? / norm.clone())
    } else {
        None
    };

    let l2 = profile.lambda(2)?;
    let l3 = profile.lambda(3)?;
    let (baseline_g2, baseline_q) = baselines(n);
    Ok(MomentReport {
        n,
        eta: None,
        mean_n,
        mean_n2,
        variance,
        variance_error: 0.0,
        mandel_q,
        q_error: 0.0,
        coincidence,
        g2,
        r_term,
        d00_moment,
        approx_q: approx_q(&l2, &l3, n),
        approx_g2_a: approx_g2(&l2, n, Approximation::A),
        approx_g2_b: approx_g2(&l2, n, Approximation::B),
        approx_g2_large: approx_g2(&l2, n, Approximation::LargeSample),
        baseline_g2,
        baseline_q,
    })
}

/// Profile with `modes` positive integer weights drawn from `1..=20`,
/// normalized exactly.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, modes: usize) -> ModeProfile<Rational> {
    let weights = (0..modes).map(|_| Rational::from_u64(rng.random_range(1..=20u64))).collect();
    ModeProfile::from_weights(format!("random:{modes}"), weights, true).expect("positive weights")
}
