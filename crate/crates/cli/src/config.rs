use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spinfactor::TripleIsometry;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("cannot parse isometry `{0}`")]
    IsometrySyntax(String),
    #[error("matrix file {path}: {reason}")]
    MatrixFile { path: PathBuf, reason: String },
    #[error("config file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn bad(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Axioms,
    FixpointOrthogonal,
    FixpointSliver,
    Weakfp,
    Dynamics,
    Density,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Axioms => "axioms",
            Self::FixpointOrthogonal => "fixpoint-orthogonal",
            Self::FixpointSliver => "fixpoint-sliver",
            Self::Weakfp => "weakfp",
            Self::Dynamics => "dynamics",
            Self::Density => "density",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| bad("command", format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(bad("format", format!("expected json or csv, got `{s}`"))),
        }
    }
}

/// Isometry descriptions. Indices are 1-based, as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum IsometrySpec {
    Identity,
    NegIdentity,
    /// `e_1 → e_2 → ... → e_m → e_1`.
    CyclicShift(usize),
    /// `e_k → e_{perm[k]}`.
    Permutation(Vec<usize>),
    PlaneRotation { i: usize, j: usize, phi: f64 },
    MatrixFile(PathBuf),
}

impl fmt::Display for IsometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::NegIdentity => write!(f, "neg-identity"),
            Self::CyclicShift(m) => write!(f, "cyclic-shift({m})"),
            Self::Permutation(p) => {
                let items: Vec<String> = p.iter().map(usize::to_string).collect();
                write!(f, "permutation({})", items.join(","))
            }
            Self::PlaneRotation { i, j, phi } => write!(f, "plane-rotation({i},{j},{phi})"),
            Self::MatrixFile(p) => write!(f, "matrix-file({})", p.display()),
        }
    }
}

impl FromStr for IsometrySpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let syntax = || ConfigError::IsometrySyntax(s.to_owned());
        let (head, args) = match s.find('(') {
            Some(open) if s.ends_with(')') => (&s[..open], Some(&s[open + 1..s.len() - 1])),
            Some(_) => return Err(syntax()),
            None => (s, None),
        };
        let list = |a: &str| -> Vec<String> { a.split(',').map(|x| x.trim().to_owned()).collect() };
        let int = |x: &str| x.parse::<usize>().map_err(|_| syntax());
        match (head.trim(), args) {
            ("identity", None) => Ok(Self::Identity),
            ("neg-identity", None) => Ok(Self::NegIdentity),
            ("cyclic-shift", Some(a)) => Ok(Self::CyclicShift(int(a.trim())?)),
            ("permutation", Some(a)) => {
                Ok(Self::Permutation(list(a).iter().map(|x| int(x)).collect::<Result<_, _>>()?))
            }
            ("plane-rotation", Some(a)) => match list(a).as_slice() {
                [i, j, phi] => Ok(Self::PlaneRotation {
                    i: int(i)?,
                    j: int(j)?,
                    phi: phi.parse().map_err(|_| syntax())?,
                }),
                _ => Err(syntax()),
            },
            ("matrix-file", Some(a)) if !a.trim().is_empty() => Ok(Self::MatrixFile(PathBuf::from(a.trim()))),
            _ => Err(syntax()),
        }
    }
}

impl Serialize for IsometrySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IsometrySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl IsometrySpec {
    pub fn build(&self, n: usize) -> Result<TripleIsometry, ConfigError> {
        let one_based = |k: usize, field: &'static str| {
            if k == 0 || k > n {
                Err(bad(field, format!("index {k} outside 1..={n}")))
            } else {
                Ok(k - 1)
            }
        };
        let iso = match self {
            Self::Identity => Ok(TripleIsometry::identity(n)),
            Self::NegIdentity => Ok(TripleIsometry::neg_identity(n)),
            Self::CyclicShift(m) => TripleIsometry::cyclic_shift(n, *m),
            Self::Permutation(p) => {
                if p.len() != n {
                    return Err(bad("isometry", format!("permutation has {} entries, dim is {n}", p.len())));
                }
                let zero: Vec<usize> = p.iter().map(|&k| one_based(k, "isometry")).collect::<Result<_, _>>()?;
                TripleIsometry::permutation(&zero)
            }
            Self::PlaneRotation { i, j, phi } => {
                TripleIsometry::plane_rotation(n, one_based(*i, "isometry")?, one_based(*j, "isometry")?, *phi)
            }
            Self::MatrixFile(path) => return load_matrix_file(path, n),
        };
        iso.map_err(|e| bad("isometry", e.to_string()))
    }
}

/// Plain text, one matrix row per line, entries separated by whitespace.
/// An entry is a real `x` or a complex `re,im`.
pub fn load_matrix_file(path: &Path, n: usize) -> Result<TripleIsometry, ConfigError> {
    let err = |reason: String| ConfigError::MatrixFile { path: path.to_owned(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let rows: Vec<Vec<Complex64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(parse_entry).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| err("malformed entry".into()))?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(err(format!("expected a {n} x {n} matrix")));
    }
    let m = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
    let result = if m.iter().all(|c| c.im == 0.0) {
        TripleIsometry::new(0.0, m.map(|c| c.re))
    } else {
        TripleIsometry::from_unitary(&m)
    };
    result.map_err(|e| err(e.to_string()))
}

fn parse_entry(tok: &str) -> Option<Complex64> {
    match tok.split_once(',') {
        Some((re, im)) => Some(Complex64::new(re.parse().ok()?, im.parse().ok()?)),
        None => Some(Complex64::new(tok.parse().ok()?, 0.0)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// For `axioms`, samples are drawn in dimensions `2..=dim`.
    pub dim: usize,
    pub seed: u64,
    pub t: f64,
    pub isometry: IsometrySpec,
    pub tol: f64,
    pub max_iter: usize,
    pub samples: usize,
    /// Scale `ρ` applied after the map in `dynamics`.
    pub contraction: f64,
    /// Perturbation radius for `density`.
    pub eps: f64,
    pub out_path: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dim: 4,
            seed: 0,
            t: 0.5,
            isometry: IsometrySpec::Identity,
            tol: 1e-12,
            max_iter: 2000,
            samples: 20,
            contraction: 1.0,
            eps: 1e-3,
            out_path: None,
            format: Format::Json,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dim < 2 {
            return Err(bad("dim", format!("must be at least 2, got {}", self.dim)));
        }
        let t_ok = match self.command {
            Command::FixpointOrthogonal | Command::FixpointSliver | Command::Weakfp => self.t > 0.0 && self.t < 1.0,
            Command::Dynamics => (0.0..1.0).contains(&self.t),
            Command::Axioms | Command::Density => true,
        };
        if !t_ok {
            return Err(bad("t", format!("{} is outside the allowed range for {}", self.t, self.command.name())));
        }
        if !(self.tol > 0.0) {
            return Err(bad("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(bad("max_iter", "must be positive"));
        }
        if self.samples == 0 && matches!(self.command, Command::Axioms | Command::Density | Command::Dynamics) {
            return Err(bad("samples", "must be positive"));
        }
        if !(self.contraction > 0.0 && self.contraction <= 1.0) {
            return Err(bad("contraction", "must lie in (0, 1]"));
        }
        if !(self.eps > 0.0) {
            return Err(bad("eps", "must be positive"));
        }
        if !matches!(self.command, Command::Axioms | Command::Density) {
            self.isometry.build(self.dim)?;
        }
        Ok(())
    }
}
