//! Declarative experiment configs.
//!
//! Complex entries are written `[re, im]`; a plain number is read as a real
//! entry.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dynsamp_core::dynsamp::WeightSpec;
use dynsamp_core::numkit::{self, Matrix, Operator, Vector, C64};
use dynsamp_core::perturb::CertificateName;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// A complex scalar in config and report files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cplx(pub C64);

impl Serialize for Cplx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cplx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => Cplx(numkit::real(x)),
            Repr::Pair([re, im]) => Cplx(numkit::c64(re, im)),
        })
    }
}

fn to_c64(xs: &[Cplx]) -> Vec<C64> {
    xs.iter().map(|c| c.0).collect()
}

pub fn cplx_list(xs: &[C64]) -> Vec<Cplx> {
    xs.iter().copied().map(Cplx).collect()
}

/// Operator description. `nilpotent_shift` may be written as a bare
/// string (size taken from the config dimension) or `{"nilpotent_shift": n}`.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSpec {
    Diagonal(Vec<Cplx>),
    NilpotentShift(Option<usize>),
    Circulant(Vec<Cplx>),
    /// Row-major entries of a square matrix.
    Dense(Vec<Cplx>),
    BlockDiag(Vec<OperatorSpec>),
}

impl Serialize for OperatorSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        if let OperatorSpec::NilpotentShift(None) = self {
            return s.serialize_str("nilpotent_shift");
        }
        let mut m = s.serialize_map(Some(1))?;
        match self {
            OperatorSpec::Diagonal(v) => m.serialize_entry("diagonal", v)?,
            OperatorSpec::NilpotentShift(n) => m.serialize_entry("nilpotent_shift", n)?,
            OperatorSpec::Circulant(v) => m.serialize_entry("circulant", v)?,
            OperatorSpec::Dense(v) => m.serialize_entry("dense", v)?,
            OperatorSpec::BlockDiag(v) => m.serialize_entry("block_diag", v)?,
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for OperatorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        OperatorSpec::from_value(v).map_err(de::Error::custom)
    }
}

impl OperatorSpec {
    fn from_value(v: Value) -> Result<Self, String> {
        let list = |v: Value| serde_json::from_value::<Vec<Cplx>>(v).map_err(|e| e.to_string());
        match v {
            Value::String(s) if s == "nilpotent_shift" => Ok(OperatorSpec::NilpotentShift(None)),
            Value::Object(map) if map.len() == 1 => {
                let (k, v) = map.into_iter().next().expect("one entry");
                match k.as_str() {
                    "diagonal" => Ok(OperatorSpec::Diagonal(list(v)?)),
                    "circulant" => Ok(OperatorSpec::Circulant(list(v)?)),
                    "dense" => Ok(OperatorSpec::Dense(list(v)?)),
                    "nilpotent_shift" => Ok(OperatorSpec::NilpotentShift(
                        serde_json::from_value(v).map_err(|e| e.to_string())?,
                    )),
                    "block_diag" => {
                        let items: Vec<Value> = serde_json::from_value(v).map_err(|e| e.to_string())?;
                        Ok(OperatorSpec::BlockDiag(
                            items.into_iter().map(OperatorSpec::from_value).collect::<Result<_, _>>()?,
                        ))
                    }
                    other => Err(format!("unknown operator kind '{other}'")),
                }
            }
            other => Err(format!("malformed operator spec: {other}")),
        }
    }

    /// Builds the operator; `dim` sizes a bare `nilpotent_shift`.
    pub fn build(&self, dim: Option<usize>) -> Result<Operator, CliError> {
        let core = |e: dynsamp_core::Error| CliError::Config(e.to_string());
        match self {
            OperatorSpec::Diagonal(v) => Operator::diagonal(&to_c64(v)).map_err(core),
            OperatorSpec::NilpotentShift(n) => {
                let n = n.or(dim).ok_or_else(|| {
                    CliError::Config("nilpotent_shift inside block_diag needs an explicit size".into())
                })?;
                Ok(Operator::nilpotent_shift(n))
            }
            OperatorSpec::Circulant(v) => Operator::circulant(&to_c64(v)).map_err(core),
            OperatorSpec::Dense(v) => {
                let n = (v.len() as f64).sqrt().round() as usize;
                if n * n != v.len() || n == 0 {
                    return Err(CliError::Config(format!(
                        "dense operator has {} entries, not a perfect square",
                        v.len()
                    )));
                }
                Operator::new(Matrix::from_row_slice(n, n, &to_c64(v))).map_err(core)
            }
            OperatorSpec::BlockDiag(blocks) => {
                let ops = blocks.iter().map(|b| b.build(None)).collect::<Result<Vec<_>, _>>()?;
                Operator::block_diag(&ops).map_err(core)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    Constant(Cplx),
    Geometric(f64),
    Explicit(Vec<Cplx>),
}

impl WeightsConfig {
    pub fn spec(&self) -> WeightSpec {
        match self {
            WeightsConfig::Constant(c) => WeightSpec::Constant(c.0),
            WeightsConfig::Geometric(r) => WeightSpec::Geometric(*r),
            WeightsConfig::Explicit(v) => WeightSpec::Explicit(to_c64(v)),
        }
    }
}

/// Inputs of the `perturbation:<certificate>` checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<Cplx>>,
    /// Columns spanning the invariant subspace of the main operator
    /// (default: whole space).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<Vec<Vec<Cplx>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_operator: Option<OperatorSpec>,
    /// Defaults to `subspace`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_subspace: Option<Vec<Vec<Cplx>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub generators: Vec<Vec<Cplx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsConfig>,
    pub horizon: usize,
    pub checks: Vec<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    /// Period for the `periodic` check; detected when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    /// Horizons for `nogo-proxy` (default `d, 4d, 16d`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    /// Trials for `satisfiability:*` (default 1000).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
}

/// Tolerance keys and their defaults.
pub const TOLERANCES: [(&str, f64); 5] = [
    ("tol", 1e-10),
    ("stein", 1e-12),
    ("surjectivity", 1e-8),
    ("repro", 1e-12),
    ("perturbation", 1e-8),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    OrbitBounds,
    Stein,
    Surjectivity,
    Periodic,
    RatioBound,
    KernelInvariance,
    Representation,
    Perturbation(CertificateName),
    NogoProxy,
    RieszProfile,
    IteratedFrameOperator,
    Satisfiability(CertificateName),
    ReproAldroubi,
    AldroubiSweep,
    PerturbationGallery,
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let cert = |rest: &str| {
            rest.parse::<CertificateName>()
                .map_err(|_| CliError::Config(format!("unknown certificate in check '{s}'")))
        };
        if let Some(rest) = s.strip_prefix("perturbation:") {
            return Ok(Check::Perturbation(cert(rest)?));
        }
        if let Some(rest) = s.strip_prefix("satisfiability:") {
            return Ok(Check::Satisfiability(cert(rest)?));
        }
        Ok(match s {
            "orbit-bounds" => Check::OrbitBounds,
            "stein" => Check::Stein,
            "surjectivity" => Check::Surjectivity,
            "periodic" => Check::Periodic,
            "ratio-bound" => Check::RatioBound,
            "kernel-invariance" => Check::KernelInvariance,
            "representation" => Check::Representation,
            "nogo-proxy" => Check::NogoProxy,
            "riesz-profile" => Check::RieszProfile,
            "iterated-frame-operator" => Check::IteratedFrameOperator,
            "repro-aldroubi" => Check::ReproAldroubi,
            "aldroubi-sweep" => Check::AldroubiSweep,
            "perturbation-gallery" => Check::PerturbationGallery,
            _ => return Err(CliError::Config(format!("unknown check '{s}'"))),
        })
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::OrbitBounds => f.write_str("orbit-bounds"),
            Check::Stein => f.write_str("stein"),
            Check::Surjectivity => f.write_str("surjectivity"),
            Check::Periodic => f.write_str("periodic"),
            Check::RatioBound => f.write_str("ratio-bound"),
            Check::KernelInvariance => f.write_str("kernel-invariance"),
            Check::Representation => f.write_str("representation"),
            Check::Perturbation(c) => write!(f, "perturbation:{c}"),
            Check::NogoProxy => f.write_str("nogo-proxy"),
            Check::RieszProfile => f.write_str("riesz-profile"),
            Check::IteratedFrameOperator => f.write_str("iterated-frame-operator"),
            Check::Satisfiability(c) => write!(f, "satisfiability:{c}"),
            Check::ReproAldroubi => f.write_str("repro-aldroubi"),
            Check::AldroubiSweep => f.write_str("aldroubi-sweep"),
            Check::PerturbationGallery => f.write_str("perturbation-gallery"),
        }
    }
}

/// A validated config with its operator and vectors built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub operator: Operator,
    pub generators: Vec<Vector>,
    pub weights: Option<WeightSpec>,
    pub checks: Vec<Check>,
}

impl Experiment {
    pub fn tol(&self, key: &str) -> f64 {
        self.config.tolerances.get(key).copied().unwrap_or_else(|| {
            TOLERANCES
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .expect("known tolerance key")
        })
    }

    pub fn generator(&self) -> Result<&Vector, String> {
        self.generators
            .first()
            .ok_or_else(|| "check needs at least one generator".to_string())
    }
}

fn vector(entries: &[Cplx], dim: usize, what: &str) -> Result<Vector, CliError> {
    if entries.len() != dim {
        return Err(CliError::Config(format!(
            "{what} has {} entries, expected {dim}",
            entries.len()
        )));
    }
    Ok(Vector::from_vec(to_c64(entries)))
}

/// Columns given as lists, orthonormalized.
pub fn subspace_basis(columns: &[Vec<Cplx>], dim: usize) -> Result<Matrix, CliError> {
    if columns.is_empty() {
        return Err(CliError::Config("subspace needs at least one column".into()));
    }
    let cols = columns
        .iter()
        .map(|c| vector(c, dim, "subspace column"))
        .collect::<Result<Vec<_>, _>>()?;
    numkit::range_basis(&Matrix::from_columns(&cols), 1e-10).map_err(|e| CliError::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config does not parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(self) -> Result<Experiment, CliError> {
        let d = self.dimension;
        if d == 0 {
            return Err(CliError::Config("dimension must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        let operator = self.operator.build(Some(d))?;
        if operator.dim() != d {
            return Err(CliError::Config(format!(
                "operator acts on ℂ^{} but dimension is {d}",
                operator.dim()
            )));
        }
        let generators = self
            .generators
            .iter()
            .map(|g| vector(g, d, "generator"))
            .collect::<Result<Vec<_>, _>>()?;
        let checks = self.checks.iter().map(|c| c.parse()).collect::<Result<Vec<Check>, _>>()?;
        let weights = self.weights.as_ref().map(WeightsConfig::spec);
        if let Some(w) = &weights {
            // The scaled-generator certificate reads one weight past the horizon.
            let scaled = checks
                .iter()
                .any(|c| matches!(c, Check::Perturbation(CertificateName::ScaledGeneratorPerturbation)));
            w.weights(self.horizon + usize::from(scaled)).map_err(|e| CliError::Config(e.to_string()))?;
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCES.iter().any(|(name, _)| name == k) {
                return Err(CliError::Config(format!("unknown tolerance '{k}'")));
            }
            if !(*v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("tolerance '{k}' must be positive")));
            }
        }
        if let Some(p) = &self.perturbation {
            if let Some(psi) = &p.psi {
                vector(psi, d, "psi")?;
            }
            if let Some(s) = &p.subspace {
                subspace_basis(s, d)?;
            }
            if let Some(s) = &p.second_subspace {
                subspace_basis(s, d)?;
            }
            if let Some(op) = &p.second_operator {
                if op.build(Some(d))?.dim() != d {
                    return Err(CliError::Config("second operator has the wrong dimension".into()));
                }
            }
        }
        if self.trials == Some(0) {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        Ok(Experiment {
            config: self,
            operator,
            generators,
            weights,
            checks,
        })
    }
}
