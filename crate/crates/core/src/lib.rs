//! Number statistics of composite bosons built from Pauli exchange
//! scatterings `lambda_n`, with an exact Fock-space oracle to check them.
//!
//! ```
//! use coboson::{build_norm_table, statistics, ModeProfile, Rational};
//!
//! let profile = ModeProfile::<Rational>::uniform(4).unwrap();
//! let table = build_norm_table(&profile.exchange_table(6), 4).unwrap();
//! let g2 = statistics::g2(&table, 2).unwrap();
//! assert_eq!(g2, Rational::new(2.into(), 3.into()));
//! ```

pub mod error;
pub mod norm;
pub mod oracle;
pub mod par;
pub mod profiles;
pub mod quadrature;
pub mod scalar;
pub mod statistics;

pub use error::{Error, Result};
pub use norm::{build_norm_table, delta, NormTable};
pub use oracle::{check_identities, oracle_f, oracle_report, CheckEntry, CheckReport, CheckStatus, FockState};
pub use profiles::{
    hydrogenic_lambda, hydrogenic_lambda_quadrature, lambda_from_profile, uniform_profile, ExchangeSource,
    ExchangeTable, HydrogenicProfile, ModeProfile, QuadratureSpec,
};
pub use scalar::{parse_rational, NumericMode, Rational, Scalar};
pub use statistics::{report, sweep, Approximation, MomentReport};
