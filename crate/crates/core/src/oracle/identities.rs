//! Machine-checked operator identities and oracle/closed-form agreement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{coboson_ladder, elementary_symmetric, factorial, oracle_report, FockState};
use crate::error::{Error, Result};
use crate::norm::NormTable;
use crate::par;
use crate::profiles::ModeProfile;
use crate::scalar::Scalar;
use crate::statistics::{report, MomentReport};

/// Largest mode count accepted by [`check_identities`].
pub const IDENTITY_MODE_LIMIT: usize = 12;

const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub identity: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub status: CheckStatus,
    /// Squared norm of `lhs - rhs` for state identities, `|lhs - rhs|` for
    /// scalar ones.
    pub residual: String,
}

impl CheckEntry {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CheckReport {
    entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn entries(&self) -> &[CheckEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn identities(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.entries.iter().map(|e| e.identity.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }
}

impl FromIterator<CheckEntry> for CheckReport {
    fn from_iter<I: IntoIterator<Item = CheckEntry>>(iter: I) -> Self {
        Self { entries: iter.into_iter().collect() }
    }
}

fn scalar_entry<S: Scalar>(identity: &str, n: usize, lhs: &S, rhs: &S) -> CheckEntry {
    let residual = (lhs.clone() - rhs.clone()).abs();
    let pass = if S::is_exact() {
        residual.is_zero()
    } else {
        let scale = lhs.to_f64().abs() + rhs.to_f64().abs() + 1e-3;
        residual.to_f64() <= FLOAT_TOLERANCE * scale
    };
    entry(identity, n, pass, residual.render())
}

fn state_entry<S: Scalar>(identity: &str, n: usize, lhs: &FockState<S>, rhs: &FockState<S>) -> CheckEntry {
    match lhs.minus(rhs) {
        Ok(diff) => {
            let residual = diff.norm_squared();
            let pass = if S::is_exact() {
                diff.is_zero()
            } else {
                let scale = lhs.norm_squared().to_f64() + rhs.norm_squared().to_f64() + 1e-6;
                residual.to_f64() <= FLOAT_TOLERANCE * FLOAT_TOLERANCE * scale
            };
            entry(identity, n, pass, residual.render())
        }
        Err(e) => entry(identity, n, false, e.to_string()),
    }
}

fn entry(identity: &str, n: usize, pass: bool, residual: String) -> CheckEntry {
    let status = if pass { CheckStatus::Pass } else { CheckStatus::Fail };
    CheckEntry { identity: identity.to_string(), n, status, residual }
}

fn combo<S: Scalar>(terms: &[(S, &FockState<S>)]) -> FockState<S> {
    FockState::linear_combination(terms).expect("ladder states share the vacuum's class")
}

fn inner<S: Scalar>(a: &FockState<S>, b: &FockState<S>) -> S {
    a.inner(b).expect("ladder states share the vacuum's class")
}

fn ns<S: Scalar>(n: usize) -> S {
    S::from_u64(n as u64)
}

fn subsets_of_size(modes: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << modes)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..modes).filter(|k| m & (1 << k) != 0).collect())
        .collect()
}

struct Ladder<S> {
    profile: Arc<ModeProfile<S>>,
    states: Vec<FockState<S>>,
    /// `<psi_N|psi_N>`.
    norms: Vec<S>,
    lambda2: S,
    lambda3: S,
}

impl<S: Scalar> Ladder<S> {
    fn new(profile: &ModeProfile<S>, top: usize) -> Result<Self> {
        let profile = Arc::new(profile.clone());
        let states = coboson_ladder(&profile, top)?;
        let norms = states.iter().map(FockState::norm_squared).collect();
        let lambda2 = profile.lambda(2)?;
        let lambda3 = profile.lambda(3)?;
        Ok(Self { profile, states, norms, lambda2, lambda3 })
    }

    fn f(&self, n: usize) -> S {
        self.norms[n].clone() / factorial::<S>(n)
    }

    /// `Delta_N^(k)` from oracle norms.
    fn delta(&self, n: usize, k: usize) -> S {
        (self.f(n + k) - self.f(n + k - 1)) / self.f(n)
    }

    fn identities_at(&self, n: usize) -> Vec<CheckEntry> {
        let mut out = Vec::new();
        let psi = &self.states[n];
        let norm = &self.norms[n];
        let one = S::one();
        let two = S::from_i64(2);
        let nn = ns::<S>(n);
        let b_psi = psi.apply_b0();
        let b_next = self.states[n + 1].apply_b0();

        // [B, B^dag] = 1 - D_00 with D_00 in its diagonal form, on every basis
        // state with N pairs.
        let mut worst: Option<CheckEntry> = None;
        for modes in subsets_of_size(self.profile.mode_count(), n) {
            let s = FockState::basis_state(Arc::clone(&self.profile), &modes).expect("modes within the profile");
            let lhs = combo(&[(one.clone(), &s.apply_b0_dagger().apply_b0()), (-one.clone(), &s.apply_b0().apply_b0_dagger())]);
            let rhs = combo(&[(one.clone(), &s), (-one.clone(), &s.apply_d00_diagonal())]);
            let e = state_entry("commutator", n, &lhs, &rhs);
            if worst.as_ref().is_none_or(|w| w.passed() && !e.passed()) {
                worst = Some(e);
            }
        }
        out.extend(worst);

        let prev = &self.states[n - 1];
        out.push(state_entry("l2_dagger_direct", n, &prev.apply_l2_dagger(), &prev.apply_l2_dagger_direct()));
        out.push(state_entry("l3_dagger_direct", n, &prev.apply_l3_dagger(), &prev.apply_l3_dagger_direct()));

        // B|psi_N> = N|psi_(N-1)> - N(N-1) L_2^dag|psi_(N-2)>
        let l2_two_below = if n >= 2 { Some(self.states[n - 2].apply_l2_dagger()) } else { None };
        let rhs = match &l2_two_below {
            Some(l2) => combo(&[(nn.clone(), prev), (-ns::<S>(n * (n - 1)), l2)]),
            None => prev.scaled(&nn),
        };
        out.push(state_entry("b_lowers_ladder", n, &b_psi, &rhs));

        // B^dag B|psi_N> = |psi_N> + (N-1)/(N+1) B|psi_(N+1)>
        let number_psi = b_psi.apply_b0_dagger();
        let rhs = combo(&[(one.clone(), psi), (ns::<S>(n - 1) / ns::<S>(n + 1), &b_next)]);
        out.push(state_entry("number_on_ladder", n, &number_psi, &rhs));

        // D_00|psi_N> = 2N L_2^dag|psi_(N-1)> = 2|psi_N> - 2/(N+1) B|psi_(N+1)>
        let d_psi = psi.apply_d00();
        out.push(state_entry("d00_via_l2", n, &d_psi, &prev.apply_l2_dagger().scaled(&ns::<S>(2 * n))));
        let rhs = combo(&[(two.clone(), psi), (-two.clone() / ns::<S>(n + 1), &b_next)]);
        out.push(state_entry("d00_via_b", n, &d_psi, &rhs));

        // L_2|psi_N> = N lambda_2|psi_(N-1)> - N(N-1) L_3^dag|psi_(N-2)>
        let rhs = if n >= 2 {
            combo(&[(nn.clone() * self.lambda2.clone(), prev), (-ns::<S>(n * (n - 1)), &self.states[n - 2].apply_l3_dagger())])
        } else {
            prev.scaled(&(nn.clone() * self.lambda2.clone()))
        };
        out.push(state_entry("l2_lowers_ladder", n, &psi.apply_l2(), &rhs));

        if n == 1 {
            let v = &self.states[0];
            out.push(scalar_entry("lambda2_contraction", n, &inner(psi, &v.apply_l2_dagger()), &self.lambda2));
            out.push(scalar_entry("lambda3_contraction", n, &inner(psi, &v.apply_l3_dagger()), &self.lambda3));
        }

        if norm.is_zero() {
            return out;
        }

        // Expectation values in |psi_N>.
        let ev = |x: S| x / norm.clone();
        let bdb = ev(inner(&b_psi, &b_psi.apply_d00()));
        let dbb = ev(inner(&d_psi, &number_psi));
        let l2b = ev(inner(&psi.apply_l2(), &b_psi));
        let (d1, d2) = (self.delta(n, 1), self.delta(n, 2));
        let r_def = l2_two_below.as_ref().map(|l2| ev(inner(psi, &l2.apply_l2_dagger())));
        let nn1 = ns::<S>(n * (n - 1));

        out.push(scalar_entry("bdb_split", n, &bdb, &(dbb.clone() - two.clone() * l2b.clone())));
        let dbb_closed = -two.clone() * d1.clone() - two.clone() * nn1.clone() / ns::<S>(n + 1) * d2.clone();
        out.push(scalar_entry("d00_number_moment", n, &dbb, &dbb_closed));
        let l2b_closed = -d1.clone() - nn1.clone() * r_def.clone().unwrap_or_else(S::zero);
        out.push(scalar_entry("L2dag_B", n, &l2b, &l2b_closed));

        let mean = ev(inner(psi, &number_psi));
        let mean2 = ev(number_psi.norm_squared());
        let bb_psi = b_psi.apply_b0();
        let coincidence = ev(bb_psi.norm_squared());
        out.push(scalar_entry("coincidence_split", n, &coincidence, &(mean2 - mean + bdb.clone())));

        let bdb_closed = -two.clone() * (self.lambda2.clone() + d1.clone() + ns::<S>((n - 1) * (n - 1)) / ns::<S>(n + 1) * d2.clone());
        out.push(scalar_entry("bdb_closed", n, &bdb, &bdb_closed));

        let Some(r) = r_def else { return out };
        let bdb_r = -two.clone() * nn1.clone() / ns::<S>(n + 1) * d2.clone() + two.clone() * nn1.clone() * r.clone();
        out.push(scalar_entry("bdb_via_r", n, &bdb, &bdb_r));
        out.push(scalar_entry("bdb_via_r_factored", n, &bdb, &(-two.clone() * nn1.clone() * (d2.clone() / ns::<S>(n + 1) - r.clone()))));

        // R = lambda_2/(N-1) (F_(N-1) - F_N)/F_N
        //     + (<psi_(N-1)|L_3|psi_N> - N <psi_(N-2)|L_3|psi_(N-1)>) / <psi_N|psi_N>
        let l3_top = inner(&self.states[n - 1], &psi.apply_l3());
        let l3_low = inner(&self.states[n - 2], &prev.apply_l3());
        let r_l3 = self.lambda2.clone() / ns::<S>(n - 1) * (self.f(n - 1) - self.f(n)) / self.f(n)
            + (l3_top - nn.clone() * l3_low.clone()) / norm.clone();
        out.push(scalar_entry("r_via_l3", n, &r, &r_l3));

        let l3_closed = self.lambda2.clone() / ns::<S>(n - 1) * self.norms[n - 1].clone()
            - self.norms[n].clone() / ns::<S>(n * n * (n - 1))
            + self.norms[n + 1].clone() / ns::<S>(n * n * (n * n - 1));
        out.push(scalar_entry("l3_overlap", n, &l3_low, &l3_closed));

        let bracket = one + d1.clone() + S::from_i64(n as i64 - 3) / ns::<S>(n + 1) * d2.clone() + two * r.clone();
        out.push(scalar_entry("coincidence_closed", n, &coincidence, &(nn1 * bracket)));

        let r_closed = d2 / ns::<S>(n * (n + 1)) - (self.lambda2.clone() + d1) / ns::<S>(n * (n - 1));
        out.push(scalar_entry("r_closed", n, &r, &r_closed));
        out
    }
}

/// Every operator identity for `N = 1..=n_max`, each evaluated on explicitly
/// constructed states. Failures are reported as entries, not errors.
pub fn check_identities<S: Scalar>(profile: &ModeProfile<S>, n_max: usize) -> Result<CheckReport> {
    let modes = profile.mode_count();
    if modes > IDENTITY_MODE_LIMIT || n_max > modes {
        return Err(Error::OracleLimit { limit: IDENTITY_MODE_LIMIT, modes, n: n_max });
    }
    let ladder = Ladder::new(profile, n_max + 2)?;
    let ns: Vec<usize> = (1..=n_max).collect();
    Ok(par::map(&ns, |&n| ladder.identities_at(n)).into_iter().flatten().collect())
}

fn field_residual<S: Scalar>(closed: &MomentReport<S>, oracle: &MomentReport<S>) -> S {
    let pairs = [
        (&closed.mean_n, &oracle.mean_n),
        (&closed.mean_n2, &oracle.mean_n2),
        (&closed.variance, &oracle.variance),
        (&closed.mandel_q, &oracle.mandel_q),
        (&closed.d00_moment, &oracle.d00_moment),
        (&closed.coincidence, &oracle.coincidence),
        (&closed.g2, &oracle.g2),
    ];
    let mut total = S::sum_all(pairs.iter().map(|(a, b)| ((*a).clone() - (*b).clone()).abs()));
    if let (Some(a), Some(b)) = (&closed.r_term, &oracle.r_term) {
        total = total + (a.clone() - b.clone()).abs();
    }
    total
}

/// Norm recursion against both oracle routes for `N = 0..=n_max+2`, and the
/// closed-form statistics against [`oracle_report`] for `N = 1..=n_max`.
pub fn closed_form_equivalence<S: Scalar>(profile: &ModeProfile<S>, n_max: usize) -> Result<CheckReport> {
    let top = n_max + 2;
    let table = NormTable::build(Arc::new(profile.exchange_table(top)), n_max)?;
    let ladder = Ladder::new(profile, top)?;
    let e = elementary_symmetric(profile.probabilities());
    let mut out = CheckReport::default();
    for n in 0..=top {
        let recursion = table.f(n).expect("table covers n_max + 2").clone();
        out.entries.push(scalar_entry("norm_recursion", n, &recursion, &ladder.f(n)));
        let symmetric = factorial::<S>(n) * e.get(n).cloned().unwrap_or_else(S::zero);
        out.entries.push(scalar_entry("norm_symmetric", n, &recursion, &symmetric));
    }
    let ns: Vec<usize> = (1..=n_max).filter(|&n| !ladder.norms[n].is_zero()).collect();
    let stats = par::map(&ns, |&n| -> Result<CheckEntry> {
        let closed = report(&table, n)?;
        let oracle = oracle_report(profile, n)?;
        let residual = field_residual(&closed, &oracle);
        Ok(scalar_entry("statistics", n, &residual, &S::zero()))
    });
    for entry in stats {
        out.entries.push(entry?);
    }
    Ok(out)
}

/// Identities plus closed-form equivalence.
pub fn verify_profile<S: Scalar>(profile: &ModeProfile<S>, n_max: usize) -> Result<CheckReport> {
    let mut out = check_identities(profile, n_max)?;
    out.merge(closed_form_equivalence(profile, n_max)?);
    Ok(out)
}

/// [`verify_profile`] over a batch, one profile per task; `n_max` defaults to
/// each profile's mode count.
pub fn verify_batch<S: Scalar>(profiles: &[ModeProfile<S>], n_max: Option<usize>) -> Vec<Result<CheckReport>> {
    par::map(profiles, |p| verify_profile(p, n_max.unwrap_or(p.mode_count())))
}

pub fn verify_batch_sequential<S: Scalar>(
    profiles: &[ModeProfile<S>],
    n_max: Option<usize>,
) -> Vec<Result<CheckReport>> {
    profiles.iter().map(|p| verify_profile(p, n_max.unwrap_or(p.mode_count()))).collect()
}
