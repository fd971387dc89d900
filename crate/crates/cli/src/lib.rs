//! `coboson` command-line front end: `lambdas`, `stats` and `verify`.

pub mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coboson::oracle::{random_profile, verify_batch};
use coboson::statistics::sweep;
use coboson::{
    Error, ExchangeTable, HydrogenicProfile, ModeProfile, MomentReport, NormTable, NumericMode, Rational, Scalar,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use spec::{NRange, ProfileSpec};
use spec::{load_profile_file, FileScalar};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Recorded in every JSON header.
pub const HYDROGENIC_NOTE: &str = "hydrogenic occupation |<k|nu_0>|^2 = 64 pi (a_B/L)^3 / (1 + k^2 a_B^2)^4; \
     the exponent 4 is the one for which lambda_1 = 1 and lambda_2 = (33 pi/2)(a_B/L)^3";

/// Largest mode count `verify` accepts.
pub const VERIFY_MODE_LIMIT: usize = coboson::oracle::IDENTITY_MODE_LIMIT;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::PrecisionDomain { .. } | Error::NegativeNorm { .. } | Error::NonMonotoneNorm { .. }) => 3,
            CliError::Usage(_) | CliError::Core(_) | CliError::Output(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "coboson", version, about = "Number statistics of composite bosons from Pauli exchange scatterings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exchange scatterings lambda_1..lambda_{n-max}.
    Lambdas(LambdasArgs),
    /// Moments, Mandel Q and g2 over a range of particle numbers.
    Stats(StatsArgs),
    /// Check closed forms and operator identities against the Fock-space oracle.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for NumericMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rational => NumericMode::Rational,
            ModeArg::Float => NumericMode::Float,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Numeric mode; rational by default for discrete profiles, float for hydrogenic.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LambdasArgs {
    /// uniform:M | hydrogenic:a_over_L | file:PATH
    #[arg(long)]
    pub profile: ProfileSpec,
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// uniform:M | hydrogenic:a_over_L | file:PATH
    #[arg(long)]
    pub profile: ProfileSpec,
    /// Inclusive range A..B with optional :stride.
    #[arg(long = "n")]
    pub n_range: NRange,
    /// Keep only lambda_1..lambda_L (hydrogenic only; default N_max + 2).
    #[arg(long)]
    pub lambda_max: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// uniform:M | file:PATH
    #[arg(long, conflicts_with = "random")]
    pub profile: Option<ProfileSpec>,
    /// Largest N checked (default: the mode count).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Verify this many seeded random rational profiles instead.
    #[arg(long, requires = "modes")]
    pub random: Option<usize>,
    /// Mode count of the random profiles.
    #[arg(long, requires = "random")]
    pub modes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Everything a command produced: the rendered table and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub exit_code: i32,
    /// Summary for stderr.
    pub message: Option<String>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (outcome, output) = match cli.command {
        Command::Lambdas(args) => (run_lambdas(&args)?, args.output),
        Command::Stats(args) => (run_stats(&args)?, args.output),
        Command::Verify(args) => (run_verify(&args)?, args.output),
    };
    if let Some(path) = &output.out {
        std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(outcome)
}

/// Writes an outcome to stdout unless it already went to a file.
pub fn emit(outcome: &Outcome, to_stdout: bool) -> std::io::Result<()> {
    if to_stdout {
        std::io::stdout().write_all(outcome.body.as_bytes())?;
    }
    if let Some(msg) = &outcome.message {
        eprintln!("{msg}");
    }
    Ok(())
}

fn resolve_mode(spec: &ProfileSpec, requested: Option<ModeArg>) -> Result<NumericMode, CliError> {
    match (spec, requested) {
        (ProfileSpec::Hydrogenic(_), Some(ModeArg::Rational)) => Err(CliError::Usage(
            "rational mode is unavailable for hydrogenic profiles (the lambdas involve pi); use --mode float".into(),
        )),
        (ProfileSpec::Hydrogenic(_), _) => Ok(NumericMode::Float),
        (_, Some(m)) => Ok(m.into()),
        (_, None) => Ok(NumericMode::Rational),
    }
}

fn discrete_profile<S: FileScalar>(spec: &ProfileSpec) -> Result<ModeProfile<S>, CliError> {
    match spec {
        ProfileSpec::Uniform(m) => Ok(ModeProfile::uniform(*m)?),
        ProfileSpec::File(path) => load_profile_file(path),
        ProfileSpec::Hydrogenic(_) => Err(CliError::Usage("a discrete profile is required".into())),
    }
}

fn exchange_table<S: FileScalar>(spec: &ProfileSpec, len: usize) -> Result<ExchangeTable<S>, CliError> {
    Ok(discrete_profile::<S>(spec)?.exchange_table(len))
}

#[derive(Serialize)]
struct Metadata {
    command: &'static str,
    profile: String,
    mode: NumericMode,
    version: &'static str,
    hydrogenic_profile: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl Metadata {
    fn new(command: &'static str, profile: String, mode: NumericMode) -> Self {
        Self { command, profile, mode, version: VERSION, hydrogenic_profile: HYDROGENIC_NOTE, lambda_max: None, seed: None }
    }
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    metadata: &'a Metadata,
    rows: &'a [R],
}

fn to_json<R: Serialize>(metadata: &Metadata, rows: &[R]) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(&Document { metadata, rows })
        .map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn to_csv(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    writer.write_record(header).map_err(fail)?;
    for record in records {
        writer.write_record(&record).map_err(fail)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Serialize)]
struct LambdaRow {
    n: usize,
    lambda: String,
}

pub fn run_lambdas(args: &LambdasArgs) -> Result<Outcome, CliError> {
    if args.n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let mode = resolve_mode(&args.profile, args.output.mode)?;
    let lambdas: Vec<String> = match (&args.profile, mode) {
        (ProfileSpec::Hydrogenic(a), _) => {
            HydrogenicProfile::new(*a)?.exchange_table(args.n_max).lambdas().iter().map(Scalar::render).collect()
        }
        (spec, NumericMode::Rational) => render_all(exchange_table::<Rational>(spec, args.n_max)?.lambdas()),
        (spec, NumericMode::Float) => render_all(exchange_table::<f64>(spec, args.n_max)?.lambdas()),
    };
    let rows: Vec<LambdaRow> = lambdas.into_iter().enumerate().map(|(i, lambda)| LambdaRow { n: i + 1, lambda }).collect();
    let body = match args.output.format {
        OutputFormat::Csv => to_csv(&["n", "lambda"], rows.iter().map(|r| vec![r.n.to_string(), r.lambda.clone()]))?,
        OutputFormat::Json => to_json(&Metadata::new("lambdas", args.profile.to_string(), mode), &rows)?,
    };
    Ok(Outcome { body, exit_code: 0, message: None })
}

fn render_all<S: Scalar>(values: &[S]) -> Vec<String> {
    values.iter().map(Scalar::render).collect()
}

pub const STATS_COLUMNS: [&str; 14] = [
    "N",
    "eta",
    "mean_n",
    "mean_n2",
    "variance",
    "Q",
    "g2",
    "Q_approx",
    "g2_approx_a",
    "g2_approx_b",
    "g2_large_sample",
    "g2_elementary",
    "Q_elementary",
    "status",
];

#[derive(Serialize, Default)]
struct StatsRow {
    #[serde(rename = "N")]
    n: usize,
    eta: Option<String>,
    mean_n: Option<String>,
    mean_n2: Option<String>,
    variance: Option<String>,
    #[serde(rename = "Q")]
    q: Option<String>,
    g2: Option<String>,
    #[serde(rename = "Q_approx")]
    q_approx: Option<String>,
    g2_approx_a: Option<String>,
    g2_approx_b: Option<String>,
    g2_large_sample: Option<String>,
    g2_elementary: Option<String>,
    #[serde(rename = "Q_elementary")]
    q_elementary: Option<String>,
    status: &'static str,
    /// Absolute error estimate of the variance (float mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    variance_error: Option<String>,
}

impl StatsRow {
    fn from_report<S: Scalar>(r: &MomentReport<S>) -> Self {
        let s = |x: &S| Some(x.render());
        StatsRow {
            n: r.n,
            eta: None,
            mean_n: s(&r.mean_n),
            mean_n2: s(&r.mean_n2),
            variance: s(&r.variance),
            q: s(&r.mandel_q),
            g2: s(&r.g2),
            q_approx: s(&r.approx_q),
            g2_approx_a: s(&r.approx_g2_a),
            g2_approx_b: s(&r.approx_g2_b),
            g2_large_sample: s(&r.approx_g2_large),
            g2_elementary: s(&r.baseline_g2),
            q_elementary: s(&r.baseline_q),
            status: if r.variance_resolved() { "ok" } else { "unresolved" },
            variance_error: (!S::is_exact()).then(|| r.variance_error.render()),
        }
    }

    fn record(&self) -> Vec<String> {
        let cell = |x: &Option<String>| x.clone().unwrap_or_default();
        vec![
            self.n.to_string(),
            cell(&self.eta),
            cell(&self.mean_n),
            cell(&self.mean_n2),
            cell(&self.variance),
            cell(&self.q),
            cell(&self.g2),
            cell(&self.q_approx),
            cell(&self.g2_approx_a),
            cell(&self.g2_approx_b),
            cell(&self.g2_large_sample),
            cell(&self.g2_elementary),
            cell(&self.q_elementary),
            self.status.to_string(),
        ]
    }
}

fn stats_rows<S: Scalar>(table: &NormTable<S>, ns: &[usize]) -> Result<Vec<StatsRow>, CliError> {
    sweep(table, ns)
        .into_iter()
        .zip(ns)
        .map(|(result, &n)| match result {
            Ok(report) => Ok(StatsRow::from_report(&report)),
            Err(Error::Blocked(_)) => Ok(StatsRow { n, status: "blocked", ..Default::default() }),
            Err(Error::PrecisionDomain { .. }) => Ok(StatsRow { n, status: "precision", ..Default::default() }),
            Err(e) => Err(e.into()),
        })
        .collect()
}

pub fn run_stats(args: &StatsArgs) -> Result<Outcome, CliError> {
    let mode = resolve_mode(&args.profile, args.output.mode)?;
    let ns = args.n_range.values();
    let n_max = args.n_range.end;
    let mut metadata = Metadata::new("stats", args.profile.to_string(), mode);

    let (mut rows, last_reliable) = match (&args.profile, mode) {
        (ProfileSpec::Hydrogenic(a), _) => {
            let mut lambdas = HydrogenicProfile::new(*a)?.exchange_table(n_max + 2);
            if let Some(cap) = args.lambda_max {
                if cap == 0 {
                    return Err(CliError::Usage("--lambda-max must be at least 1".into()));
                }
                lambdas = lambdas.truncated(cap);
                metadata.lambda_max = Some(cap);
            }
            let table = NormTable::build(Arc::new(lambdas), n_max)?;
            (stats_rows(&table, &ns)?, table.last_reliable_n())
        }
        (_, _) if args.lambda_max.is_some() => {
            return Err(CliError::Usage("--lambda-max applies to hydrogenic profiles only".into()))
        }
        (spec, NumericMode::Rational) => {
            let table = NormTable::build(Arc::new(exchange_table::<Rational>(spec, n_max + 2)?), n_max)?;
            (stats_rows(&table, &ns)?, table.last_reliable_n())
        }
        (spec, NumericMode::Float) => {
            let table = NormTable::build(Arc::new(exchange_table::<f64>(spec, n_max + 2)?), n_max)?;
            (stats_rows(&table, &ns)?, table.last_reliable_n())
        }
    };
    if let ProfileSpec::Hydrogenic(a) = args.profile {
        let h = HydrogenicProfile::new(a)?;
        for row in &mut rows {
            row.eta = Some(h.eta(row.n).render());
        }
    }

    let body = match args.output.format {
        OutputFormat::Csv => to_csv(&STATS_COLUMNS, rows.iter().map(StatsRow::record))?,
        OutputFormat::Json => to_json(&metadata, &rows)?,
    };
    let precision_rows = rows.iter().filter(|r| r.status == "precision").count();
    if precision_rows > 0 {
        let last = last_reliable.map_or("none".to_string(), |n| n.to_string());
        return Ok(Outcome {
            body,
            exit_code: 3,
            message: Some(format!(
                "{precision_rows} rows are past the reliable float range; last reliable N = {last}"
            )),
        });
    }
    Ok(Outcome { body, exit_code: 0, message: None })
}

#[derive(Serialize)]
struct CheckRow {
    profile: String,
    identity: String,
    #[serde(rename = "N")]
    n: usize,
    status: &'static str,
    residual: String,
}

fn verify_profiles<S: Scalar>(profiles: &[ModeProfile<S>], n_max: Option<usize>) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Vec::new();
    for (profile, report) in profiles.iter().zip(verify_batch(profiles, n_max)) {
        for e in report?.entries() {
            rows.push(CheckRow {
                profile: profile.label().to_string(),
                identity: e.identity.clone(),
                n: e.n,
                status: if e.passed() { "pass" } else { "fail" },
                residual: e.residual.clone(),
            });
        }
    }
    Ok(rows)
}

fn check_limits(modes: usize, n_max: Option<usize>) -> Result<(), CliError> {
    if modes > VERIFY_MODE_LIMIT {
        return Err(CliError::Usage(format!("verify accepts at most {VERIFY_MODE_LIMIT} modes, got {modes}")));
    }
    if let Some(n) = n_max {
        if n == 0 || n > modes {
            return Err(CliError::Usage(format!("--n-max must lie in 1..={modes}, got {n}")));
        }
    }
    Ok(())
}

pub fn run_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let (label, rational_profiles) = match (&args.profile, args.random) {
        (Some(spec), None) => {
            if !spec.is_discrete() {
                return Err(CliError::Usage("verify needs a discrete profile (uniform:M or file:PATH)".into()));
            }
            (spec.to_string(), vec![])
        }
        (None, Some(count)) => {
            let modes = args.modes.ok_or_else(|| CliError::Usage("--random needs --modes".into()))?;
            if count == 0 || modes == 0 {
                return Err(CliError::Usage("--random and --modes must be positive".into()));
            }
            check_limits(modes, args.n_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let profiles: Vec<ModeProfile<Rational>> =
                (0..count).map(|i| random_profile(&mut rng, modes).with_label(format!("random:{i}"))).collect();
            (format!("random:{count}x{modes}"), profiles)
        }
        _ => return Err(CliError::Usage("verify needs either --profile or --random".into())),
    };
    let mode = match args.output.mode {
        Some(m) => NumericMode::from(m),
        None => NumericMode::Rational,
    };

    let rows = match (&args.profile, mode) {
        (Some(spec), NumericMode::Rational) => {
            let p = discrete_profile::<Rational>(spec)?;
            check_limits(p.mode_count(), args.n_max)?;
            verify_profiles(&[p], args.n_max)?
        }
        (Some(spec), NumericMode::Float) => {
            let p = discrete_profile::<f64>(spec)?;
            check_limits(p.mode_count(), args.n_max)?;
            verify_profiles(&[p], args.n_max)?
        }
        (None, NumericMode::Rational) => verify_profiles(&rational_profiles, args.n_max)?,
        (None, NumericMode::Float) => {
            let floats: Vec<ModeProfile<f64>> = rational_profiles.iter().map(ModeProfile::to_float).collect();
            verify_profiles(&floats, args.n_max)?
        }
    };

    let mut metadata = Metadata::new("verify", label, mode);
    if args.random.is_some() {
        metadata.seed = Some(args.seed);
    }
    let body = match args.output.format {
        OutputFormat::Csv => to_csv(
            &["profile", "identity", "N", "status", "residual"],
            rows.iter().map(|r| vec![r.profile.clone(), r.identity.clone(), r.n.to_string(), r.status.into(), r.residual.clone()]),
        )?,
        OutputFormat::Json => to_json(&metadata, &rows)?,
    };
    let failures = rows.iter().filter(|r| r.status == "fail").count();
    let profiles = if args.random.is_some() { rational_profiles.len() } else { 1 };
    let summary = format!("{profiles} profile(s), {} checks, {failures} failed", rows.len());
    Ok(Outcome { body, exit_code: if failures > 0 { 1 } else { 0 }, message: Some(summary) })
}
