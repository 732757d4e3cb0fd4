//! Run configuration, read from TOML.
//!
//! ```toml
//! group = "slq_super"      # glq | slq | slq_super
//! N = 3
//! K = 1                    # slq_super only
//! q = 2.0                  # or [re, im]
//! h = 0.1
//! gauge = "unitary"        # or "upper_triangular"
//! tolerance = 1e-9
//! checks = "all"           # or a list of check names
//! output = "report.json"
//!
//! [b0]
//! kind = "canonical"       # canonical | beta (with `beta = [...]`) | explicit (with `matrix = [[...]]`)
//!
//! [momenta]
//! seed = 7
//! count = 20
//! scale = 1.0
//! # explicit = [[0.1, 0.35, -0.2]]
//!
//! [spectral]
//! pairs = [[1.3, 0.7], [2.0, 0.5]]
//! theta = [[0.4, -0.9]]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::coefficients::{beta_family, nondegenerate_lambda, validate_b0, BZero, CoefficientScheme, Gauge, GradingSignature};
use crate::momentum::{generic_margin, resonance_check, Momentum};
use crate::report::fmt_f64;
use crate::rmatrix::RMatrixSpec;
use crate::tensor::{c, re, Scalar, MAX_LOCAL_DIM};
use crate::verify::{CHECK_NAMES, DEFAULT_TOLERANCE};

pub const DEFAULT_COUNT: usize = 20;

/// A configuration problem, located by its key path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Glq,
    Slq,
    SlqSuper,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Glq => "glq",
            Group::Slq => "slq",
            Group::SlqSuper => "slq_super",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Real(f64),
    Pair([f64; 2]),
}

impl RawScalar {
    fn value(self) -> Scalar {
        match self {
            RawScalar::Real(x) => re(x),
            RawScalar::Pair([x, y]) => c(x, y),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawB0 {
    Canonical,
    Beta { beta: Vec<RawScalar> },
    Explicit { matrix: Vec<Vec<RawScalar>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMomenta {
    seed: Option<u64>,
    count: Option<usize>,
    scale: Option<f64>,
    explicit: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawChecks {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    pairs: Option<Vec<[RawScalar; 2]>>,
    theta: Option<Vec<[RawScalar; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    group: Group,
    #[serde(rename = "N", alias = "n")]
    n: usize,
    #[serde(rename = "K", alias = "k", default)]
    k: Option<usize>,
    q: RawScalar,
    h: f64,
    gauge: Option<Gauge>,
    b0: Option<RawB0>,
    momenta: RawMomenta,
    checks: Option<RawChecks>,
    spectral: Option<RawSpectral>,
    tolerance: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum B0Config {
    Canonical,
    Beta { beta: Vec<Scalar> },
    Explicit { matrix: Vec<Vec<Scalar>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentaConfig {
    Seeded { seed: u64, count: usize, scale: f64 },
    Explicit { vectors: Vec<Vec<f64>> },
}

impl MomentaConfig {
    pub fn count(&self) -> usize {
        match self {
            MomentaConfig::Seeded { count, .. } => *count,
            MomentaConfig::Explicit { vectors } => vectors.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralConfig {
    pub pairs: Vec<(Scalar, Scalar)>,
    pub theta: Vec<(Scalar, Scalar)>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            pairs: vec![(re(1.3), re(0.7)), (re(2.0), re(0.5)), (c(0.9, 0.1), re(1.1))],
            theta: vec![(re(0.4), re(-0.9))],
        }
    }
}

/// A validated run configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub group: Group,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub q: Scalar,
    pub h: f64,
    pub gauge: Gauge,
    pub b0: B0Config,
    pub momenta: MomentaConfig,
    pub checks: Vec<String>,
    pub spectral: SpectralConfig,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
    #[serde(skip)]
    scheme: CoefficientScheme,
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::at("<document>", e.message().to_string()))?;
    RunConfig::from_value(value)
}

impl RunConfig {
    /// Validates an already-parsed TOML value (used by the flag-driven CLI).
    pub fn from_value(value: toml::Value) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(if path == "." { "<document>".into() } else { path }, e.inner().to_string())
        })?;
        Self::validate(raw)
    }

    pub fn scheme(&self) -> &CoefficientScheme {
        &self.scheme
    }

    pub fn lambda(&self) -> Scalar {
        self.scheme.lambda()
    }

    /// The family member selected by `group`.
    pub fn rmatrix_spec(&self) -> RMatrixSpec {
        let scheme = self.scheme.clone();
        match self.group {
            Group::Glq => RMatrixSpec::dynamical(scheme),
            Group::Slq => RMatrixSpec::dynamical_sl(scheme).expect("validated slq scheme"),
            Group::SlqSuper => RMatrixSpec::dynamical_super_sl(scheme).expect("validated slq_super scheme"),
        }
    }

    fn validate(raw: RawConfig) -> Result<Self, ConfigError> {
        let n = raw.n;
        if n == 0 || n > MAX_LOCAL_DIM {
            return Err(ConfigError::at("N", format!("must be in 1..={MAX_LOCAL_DIM}, got {n}")));
        }
        let k = match (raw.group, raw.k) {
            (Group::SlqSuper, None) => {
                return Err(ConfigError::at("K", "required when group = slq_super"));
            }
            (Group::SlqSuper, Some(k)) if k == 0 || k >= n => {
                return Err(ConfigError::at("K", format!("must satisfy 1 <= K <= N-1, got K = {k}, N = {n}")));
            }
            (Group::SlqSuper, Some(k)) => Some(k),
            (_, Some(_)) => {
                return Err(ConfigError::at("K", "only allowed when group = slq_super"));
            }
            (_, None) => None,
        };
        let q = raw.q.value();
        nondegenerate_lambda(q).map_err(|e| ConfigError::at("q", e.to_string()))?;
        if !(raw.h.is_finite() && raw.h > 0.0) {
            return Err(ConfigError::at("h", format!("must be positive and finite, got {}", raw.h)));
        }
        let gauge = raw.gauge.unwrap_or(Gauge::Unitary);
        let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(ConfigError::at("tolerance", format!("must be positive, got {tolerance}")));
        }

        let (b0_config, b0) = match raw.b0.unwrap_or(RawB0::Canonical) {
            RawB0::Canonical => (B0Config::Canonical, BZero::Canonical),
            RawB0::Beta { beta } => {
                let beta: Vec<Scalar> = beta.into_iter().map(RawScalar::value).collect();
                let b0 = beta_family(n, &beta, q).map_err(|e| ConfigError::at("b0.beta", e.to_string()))?;
                (B0Config::Beta { beta }, b0)
            }
            RawB0::Explicit { matrix } => {
                let matrix: Vec<Vec<Scalar>> =
                    matrix.into_iter().map(|row| row.into_iter().map(RawScalar::value).collect()).collect();
                let b0 = BZero::explicit(matrix.clone()).map_err(|e| ConfigError::at("b0.matrix", e.to_string()))?;
                if b0.dim() != Some(n) {
                    return Err(ConfigError::at("b0.matrix", format!("must be {n}x{n}")));
                }
                let report = validate_b0(&b0, q, tolerance.max(1e-10));
                if !report.passed {
                    let worst = report
                        .details
                        .iter()
                        .max_by(|a, b| a.residual.relative.total_cmp(&b.residual.relative))
                        .map(|d| d.label.clone())
                        .unwrap_or_default();
                    return Err(ConfigError::at(
                        "b0.matrix",
                        format!(
                            "violates the b0 constraints; worst is {worst} with relative residual {}",
                            fmt_f64(report.residual.relative)
                        ),
                    ));
                }
                (B0Config::Explicit { matrix }, b0)
            }
        };
        if raw.group != Group::Glq && !b0.is_canonical() {
            return Err(ConfigError::at("b0", format!("group {} needs kind = \"canonical\"", raw.group.name())));
        }
        if raw.group == Group::Slq && gauge != Gauge::Unitary {
            return Err(ConfigError::at("gauge", "group slq needs the unitary gauge"));
        }
        let sig = GradingSignature::new(n, k.unwrap_or(n), q).map_err(|e| ConfigError::at("q", e.to_string()))?;
        let scheme = CoefficientScheme::new(sig, b0, gauge, raw.h).map_err(|e| ConfigError::at("b0", e.to_string()))?;

        let momenta = Self::validate_momenta(raw.momenta, &scheme)?;
        let checks = match raw.checks {
            None => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
            Some(RawChecks::Keyword(word)) if word == "all" => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
            Some(RawChecks::Keyword(word)) => {
                return Err(ConfigError::at("checks", format!("expected \"all\" or a list, got \"{word}\"")));
            }
            Some(RawChecks::List(list)) => {
                if list.is_empty() {
                    return Err(ConfigError::at("checks", "list is empty"));
                }
                let mut names = Vec::new();
                for (i, name) in list.into_iter().enumerate() {
                    if !CHECK_NAMES.contains(&name.as_str()) {
                        return Err(ConfigError::at(
                            format!("checks[{i}]"),
                            format!("unknown check \"{name}\"; known: {}", CHECK_NAMES.join(", ")),
                        ));
                    }
                    if !names.contains(&name) {
                        names.push(name);
                    }
                }
                names.sort();
                names
            }
        };
        let spectral = match raw.spectral {
            None => SpectralConfig::default(),
            Some(s) => {
                let defaults = SpectralConfig::default();
                let convert = |v: Vec<[RawScalar; 2]>| -> Vec<(Scalar, Scalar)> {
                    v.into_iter().map(|[a, b]| (a.value(), b.value())).collect()
                };
                let pairs = s.pairs.map(convert).unwrap_or(defaults.pairs);
                for (i, (y, z)) in pairs.iter().enumerate() {
                    if y.norm() == 0.0 || z.norm() == 0.0 {
                        return Err(ConfigError::at(format!("spectral.pairs[{i}]"), "spectral parameters must be nonzero"));
                    }
                }
                let theta = s.theta.map(convert).unwrap_or(defaults.theta);
                SpectralConfig { pairs, theta }
            }
        };

        Ok(Self {
            group: raw.group,
            n,
            k,
            q,
            h: raw.h,
            gauge,
            b0: b0_config,
            momenta,
            checks,
            spectral,
            tolerance,
            output: raw.output,
            scheme,
        })
    }

    fn validate_momenta(raw: RawMomenta, scheme: &CoefficientScheme) -> Result<MomentaConfig, ConfigError> {
        let (n, h) = (scheme.n(), scheme.h());
        match (raw.seed, raw.explicit) {
            (Some(_), Some(_)) => Err(ConfigError::at("momenta", "give either seed or explicit, not both")),
            (None, None) => Err(ConfigError::at("momenta", "needs seed or explicit")),
            (Some(seed), None) => {
                let count = raw.count.unwrap_or(DEFAULT_COUNT);
                if count == 0 {
                    return Err(ConfigError::at("momenta.count", "must be at least 1"));
                }
                let scale = raw.scale.unwrap_or(1.0);
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(ConfigError::at("momenta.scale", format!("must be positive, got {scale}")));
                }
                Ok(MomentaConfig::Seeded { seed, count, scale })
            }
            (None, Some(vectors)) => {
                if raw.count.is_some() || raw.scale.is_some() {
                    return Err(ConfigError::at("momenta", "count and scale only apply to seeded momenta"));
                }
                if vectors.is_empty() {
                    return Err(ConfigError::at("momenta.explicit", "list is empty"));
                }
                for (i, p) in vectors.iter().enumerate() {
                    let path = format!("momenta.explicit[{i}]");
                    let m = Momentum::new(p.clone(), h).map_err(|e| ConfigError::at(&path, e.to_string()))?;
                    if m.len() != n {
                        return Err(ConfigError::at(&path, format!("has {} components, N = {n}", m.len())));
                    }
                    let neighbourhood = m.shift_neighbourhood(2).map_err(|e| ConfigError::at(&path, e.to_string()))?;
                    for point in neighbourhood {
                        let report = resonance_check(&point, scheme, generic_margin(n, h));
                        if let Some(pair) = report.offending_pairs.first() {
                            return Err(ConfigError::at(
                                &path,
                                format!("resonant within two shifts: pair ({},{}): {}", pair.i, pair.j, pair.reason),
                            ));
                        }
                    }
                }
                Ok(MomentaConfig::Explicit { vectors })
            }
        }
    }
}
