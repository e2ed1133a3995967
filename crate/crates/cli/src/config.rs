//! Flat `key = value` configuration with dotted sections.
//!
//! ```text
//! command = eigen-continuation
//! n = 1
//! h = 0.015625
//! ball.radius = 1
//! density.kind = constant
//! ```
//!
//! `[section]` headers prefix the keys that follow them. `R` is shorthand
//! for a centred ball of that radius.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cma::domain::{DensitySpec, DomainKind, DomainSpec};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    Field { key: String, message: String },
    #[error("conflicting keys {0} and {1}")]
    Conflict(String, String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("missing required key {0}")]
    Missing(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn field(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    EigenContinuation,
    EigenInversePower,
    Radial,
    Rayleigh,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::EigenContinuation => "eigen-continuation",
            Command::EigenInversePower => "eigen-inverse-power",
            Command::Radial => "radial",
            Command::Rayleigh => "rayleigh",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "solve" => Command::Solve,
            "eigen-continuation" => Command::EigenContinuation,
            "eigen-inverse-power" => Command::EigenInversePower,
            "radial" => Command::Radial,
            "rayleigh" => Command::Rayleigh,
            "verify" => Command::Verify,
            other => return Err(field("command", format!("unknown command {other:?}"))),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    Csv,
    Binary,
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainSpec,
    pub density: DensitySpec,
    pub n: usize,
    pub h: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
    /// λ for `solve` (0 gives the frozen problem `det = fⁿ`).
    pub solve_lambda: f64,
    pub filter: Option<String>,
    /// Resolved key/value pairs, used for the config hash.
    canonical: BTreeMap<String, String>,
}

const KNOWN: &[&str] = &[
    "command",
    "n",
    "h",
    "tol",
    "max_iters",
    "seed",
    "output_dir",
    "emit",
    "R",
    "ball.radius",
    "ball.center",
    "ellipsoid.semi_axes",
    "density.kind",
    "density.value",
    "density.amplitude",
    "density.width",
    "density.center",
    "solve.lambda",
    "verify.filter",
];

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<String>,
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub filter: Option<String>,
}

/// Split text into key/value pairs, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(ConfigError::Syntax {
                line: i + 1,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
            line: i + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        let value = v.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key {key}"),
            });
        }
    }
    Ok(out)
}

fn num<T: FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError> {
    pairs
        .get(key)
        .map(|v| v.parse::<T>().map_err(|_| field(key, format!("cannot parse {v:?}"))))
        .transpose()
}

fn list(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    pairs
        .get(key)
        .map(|v| {
            v.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| field(key, format!("cannot parse {s:?}"))))
                .collect()
        })
        .transpose()
}

fn complex_point(key: &str, values: &[f64], n: usize) -> Result<Vec<Complex64>, ConfigError> {
    if values.len() != 2 * n {
        return Err(field(key, format!("expected {} numbers (re, im per coordinate)", 2 * n)));
    }
    Ok(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

pub fn parse_config_text(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut pairs = parse_pairs(text)?;
    let set = |pairs: &mut BTreeMap<String, String>, k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.insert(k.to_string(), v);
        }
    };
    set(&mut pairs, "command", overrides.command.clone());
    set(&mut pairs, "n", overrides.n.map(|v| v.to_string()));
    set(&mut pairs, "h", overrides.h.map(|v| v.to_string()));
    set(&mut pairs, "tol", overrides.tol.map(|v| v.to_string()));
    set(&mut pairs, "seed", overrides.seed.map(|v| v.to_string()));
    set(&mut pairs, "output_dir", overrides.out.as_ref().map(|p| p.display().to_string()));
    set(&mut pairs, "verify.filter", overrides.filter.clone());

    if let Some(k) = pairs.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }

    let command: Command = pairs
        .get("command")
        .ok_or_else(|| ConfigError::Missing("command".into()))?
        .parse()?;
    let n: usize = num(&pairs, "n")?.unwrap_or(1);
    if n == 0 || n > 4 {
        return Err(field("n", "complex dimension must be in 1..=4"));
    }

    let ball_keys: Vec<&str> = ["R", "ball.radius", "ball.center"]
        .into_iter()
        .filter(|k| pairs.contains_key(*k))
        .collect();
    if pairs.contains_key("R") && pairs.contains_key("ball.radius") {
        return Err(ConfigError::Conflict("R".into(), "ball.radius".into()));
    }
    let domain = if pairs.contains_key("ellipsoid.semi_axes") {
        if let Some(b) = ball_keys.first() {
            return Err(ConfigError::Conflict(b.to_string(), "ellipsoid.semi_axes".into()));
        }
        let axes = list(&pairs, "ellipsoid.semi_axes")?.unwrap();
        if axes.len() != n {
            return Err(field("ellipsoid.semi_axes", format!("expected {n} semi-axes")));
        }
        DomainSpec::ellipsoid(axes)
    } else {
        let radius: f64 = match (num(&pairs, "R")?, num(&pairs, "ball.radius")?) {
            (Some(r), _) | (_, Some(r)) => r,
            _ => 1.0,
        };
        let center = match list(&pairs, "ball.center")? {
            Some(c) => complex_point("ball.center", &c, n)?,
            None => vec![Complex64::new(0.0, 0.0); n],
        };
        DomainSpec::ball(center, radius)
    };
    domain.validate().map_err(|e| field("domain", e.to_string()))?;

    let density = match pairs.get("density.kind").map(String::as_str).unwrap_or("constant") {
        "constant" => DensitySpec::Constant(num(&pairs, "density.value")?.unwrap_or(1.0)),
        "gaussian-bump" => {
            let center = match list(&pairs, "density.center")? {
                Some(c) if c.len() == 2 * n => c,
                Some(_) => return Err(field("density.center", format!("expected {} numbers", 2 * n))),
                None => vec![0.0; 2 * n],
            };
            DensitySpec::GaussianBump {
                center,
                amplitude: num(&pairs, "density.amplitude")?.unwrap_or(1.0),
                width: num(&pairs, "density.width")?.unwrap_or(0.5),
            }
        }
        other => return Err(field("density.kind", format!("unknown density {other:?}"))),
    };
    match &density {
        DensitySpec::Constant(c) if !(*c > 0.0) => return Err(field("density.value", "must be positive")),
        DensitySpec::GaussianBump { amplitude, width, .. } if !(*amplitude >= 0.0 && *width > 0.0) => {
            return Err(field("density", "bump needs amplitude >= 0 and width > 0"))
        }
        _ => {}
    }

    let h = match num::<f64>(&pairs, "h")? {
        Some(h) => h,
        None => default_spacing(&domain, n),
    };
    if !(h > 0.0) {
        return Err(field("h", "must be positive"));
    }
    if command != Command::Radial && command != Command::Verify && h > domain.max_spacing() {
        return Err(field("h", format!("{h} exceeds the largest admissible spacing {}", domain.max_spacing())));
    }
    let tol: f64 = num(&pairs, "tol")?.unwrap_or(1e-8);
    if !(tol > 0.0 && tol <= 0.1) {
        return Err(field("tol", "must lie in (0, 0.1]"));
    }
    let max_iters: usize = num(&pairs, "max_iters")?.unwrap_or(500);
    if max_iters == 0 {
        return Err(field("max_iters", "must be positive"));
    }
    let seed: u64 = num(&pairs, "seed")?.unwrap_or(42);
    let output_dir = PathBuf::from(pairs.get("output_dir").cloned().unwrap_or_else(|| "out".into()));
    let emit = match pairs.get("emit") {
        None => vec![Emit::Csv, Emit::Binary, Emit::Summary],
        Some(v) => {
            let mut e = v
                .split(',')
                .map(|s| match s.trim() {
                    "csv" => Ok(Emit::Csv),
                    "binary" => Ok(Emit::Binary),
                    "summary" => Ok(Emit::Summary),
                    other => Err(field("emit", format!("unknown target {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            e.sort();
            e.dedup();
            e
        }
    };
    let solve_lambda: f64 = num(&pairs, "solve.lambda")?.unwrap_or(0.0);
    if !(solve_lambda >= 0.0) {
        return Err(field("solve.lambda", "must be non-negative"));
    }

    let mut canonical = BTreeMap::new();
    canonical.insert("command".into(), command.name().to_string());
    canonical.insert("n".into(), n.to_string());
    canonical.insert("h".into(), format!("{h:e}"));
    canonical.insert("tol".into(), format!("{tol:e}"));
    canonical.insert("max_iters".into(), max_iters.to_string());
    canonical.insert("seed".into(), seed.to_string());
    canonical.insert("domain".into(), format!("{:?}", domain.kind));
    canonical.insert("density".into(), format!("{density:?}"));
    canonical.insert("solve.lambda".into(), format!("{solve_lambda:e}"));
    if let Some(f) = pairs.get("verify.filter") {
        canonical.insert("verify.filter".into(), f.clone());
    }

    Ok(RunConfig {
        command,
        domain,
        density,
        n,
        h,
        tol,
        max_iters,
        seed,
        output_dir,
        emit,
        solve_lambda,
        filter: pairs.get("verify.filter").cloned(),
        canonical,
    })
}

pub fn parse_config(path: Option<&std::path::Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    parse_config_text(&text, overrides)
}

/// Default spacing: a 64th of the smallest extent for n = 1, an 8th otherwise.
fn default_spacing(domain: &DomainSpec, n: usize) -> f64 {
    let extent = 4.0 * domain.max_spacing();
    if n == 1 {
        extent / 64.0
    } else {
        extent / 8.0
    }
}

impl RunConfig {
    /// SHA-256 over the resolved settings, independent of formatting, key
    /// order and output location.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.canonical {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.domain.kind {
            DomainKind::Ball { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_radial_config_fills_defaults() {
        let c = parse_config_text("command = radial\nn = 1\nR = 1\n", &Overrides::default()).unwrap();
        assert_eq!(c.command, Command::Radial);
        assert_eq!(c.seed, 42);
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.radius(), Some(1.0));
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        let err = parse_config_text("command = radial\ntol = 0\n", &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref key, .. } if key == "tol"));
    }

    #[test]
    fn ball_and_ellipsoid_conflict_names_both_keys() {
        let text = "command = solve\nball.radius = 1\nellipsoid.semi_axes = 1\n";
        let err = parse_config_text(text, &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ball.radius") && msg.contains("ellipsoid.semi_axes"), "{msg}");
    }

    #[test]
    fn sections_prefix_keys() {
        let text = "command = solve\n[ball]\nradius = 2\n";
        let c = parse_config_text(text, &Overrides::default()).unwrap();
        assert_eq!(c.radius(), Some(2.0));
    }

    #[test]
    fn hash_ignores_formatting_and_order() {
        let a = parse_config_text("command = radial\nn = 1\nR = 1\n", &Overrides::default()).unwrap();
        let b = parse_config_text("# same run\nR=1.0\n\ncommand=radial\n", &Overrides::default()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config_text("command = radial\nR = 2\n", &Overrides::default()).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(
            parse_config_text("command = radial\nradius = 1\n", &Overrides::default()),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            parse_config_text("command = radial\nn = 1\nn = 2\n", &Overrides::default()),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn flags_override_file() {
        let o = Overrides {
            n: Some(2),
            seed: Some(7),
            ..Default::default()
        };
        let c = parse_config_text("command = radial\nn = 1\n", &o).unwrap();
        assert_eq!((c.n, c.seed), (2, 7));
    }
}
