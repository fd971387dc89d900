//! Parsing of `--profile`, `--n` and profile files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use coboson::{parse_rational, ModeProfile, Rational, Scalar};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSpec {
    Uniform(usize),
    Hydrogenic(f64),
    File(PathBuf),
}

impl ProfileSpec {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, ProfileSpec::Hydrogenic(_))
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Uniform(m) => write!(f, "uniform:{m}"),
            ProfileSpec::Hydrogenic(a) => write!(f, "hydrogenic:{a}"),
            ProfileSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("expected uniform:M, hydrogenic:a_over_L or file:PATH, got '{s}'"))?;
        match kind {
            "uniform" => match arg.parse::<usize>() {
                Ok(m) if m > 0 => Ok(ProfileSpec::Uniform(m)),
                _ => Err(format!("uniform needs a positive mode count, got '{arg}'")),
            },
            "hydrogenic" => match arg.parse::<f64>() {
                Ok(a) if a.is_finite() && a > 0.0 => Ok(ProfileSpec::Hydrogenic(a)),
                _ => Err(format!("a_over_L must be positive and finite, got '{arg}'")),
            },
            "file" if !arg.is_empty() => Ok(ProfileSpec::File(PathBuf::from(arg))),
            _ => Err(format!("unknown profile kind '{kind}'")),
        }
    }
}

/// Inclusive `A..B` with an optional `:stride`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
    pub stride: usize,
}

impl NRange {
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.stride).collect()
    }
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (range, stride) = match s.split_once(':') {
            Some((r, st)) => (r, st.parse::<usize>().map_err(|_| format!("bad stride '{st}'"))?),
            None => (s, 1),
        };
        let (start, end) = match range.split_once("..") {
            Some((a, b)) => (a, b),
            None => (range, range),
        };
        let start = start.parse::<usize>().map_err(|_| format!("bad range start '{start}'"))?;
        let end = end.parse::<usize>().map_err(|_| format!("bad range end '{end}'"))?;
        if stride == 0 {
            return Err("stride must be positive".into());
        }
        if start == 0 {
            return Err("N must start at 1 or above".into());
        }
        if end < start {
            return Err(format!("empty range {start}..{end}"));
        }
        Ok(NRange { start, end, stride })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Weight {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    label: String,
    weights: Vec<Weight>,
    #[serde(default)]
    normalize: bool,
}

/// Scalars a profile file can be read into.
pub trait FileScalar: Scalar {
    fn parse_weight(text: &str) -> Option<Self>;
}

impl FileScalar for Rational {
    fn parse_weight(text: &str) -> Option<Self> {
        parse_rational(text)
    }
}

impl FileScalar for f64 {
    fn parse_weight(text: &str) -> Option<Self> {
        match text.split_once('/') {
            Some(_) => parse_rational(text).map(|r| r.to_f64()),
            None => text.trim().parse().ok(),
        }
    }
}

pub fn load_profile_file<S: FileScalar>(path: &Path) -> Result<ModeProfile<S>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read profile file {}: {e}", path.display())))?;
    parse_profile_json(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_profile_json<S: FileScalar>(text: &str) -> Result<ModeProfile<S>, CliError> {
    let file: ProfileFile =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid profile file: {e}")))?;
    let weights = file
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let text = match w {
                Weight::Number(n) => n.to_string(),
                Weight::Text(t) => t.clone(),
            };
            S::parse_weight(&text).ok_or_else(|| CliError::Usage(format!("weight {i} ('{text}') is not a number")))
        })
        .collect::<Result<Vec<S>, _>>()?;
    Ok(ModeProfile::from_weights(file.label, weights, file.normalize)?)
}
