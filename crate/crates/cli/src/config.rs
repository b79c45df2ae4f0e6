//! TOML run configuration: parsing, validation, command-line overrides and
//! the canonical hash recorded in every JSON artifact.

use std::fs;
use std::path::{Path, PathBuf};

use livsic_core::cohomology::SolverConfig;
use livsic_core::observables::FourierTerm;
use livsic_core::{Interval, MapSpec, Observable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}:{line}: {key}: {message}")]
    Invalid { path: String, line: usize, key: String, message: String },
    #[error("{key}: {message}")]
    Override { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Data { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horseshoe: Option<HorseshoeCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub seed: u64,
    /// Not part of the hash; `--out` and the environment take precedence.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

/// Candidate intervals for the horseshoe check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorseshoeCandidate {
    pub j: Interval,
    pub j1: Interval,
    pub j2: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `offset + Σ a cos(2πnx) + b sin(2πnx)` with terms `[n, a, b]`.
    Fourier {
        #[serde(default)]
        offset: f64,
        terms: Vec<[f64; 3]>,
    },
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Linear {
        knots: Vec<[f64; 2]>,
    },
    /// Two-column file with header `x,value`, read as linear knots.
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 4096, tol: 1e-12, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderSection {
    pub p: f64,
    pub max_depth: usize,
    pub threshold: f64,
    pub constant_tol: f64,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection { p: 1.0, max_depth: 16, threshold: 1e-5, constant_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    /// Highest Fourier frequency for `ℓx mod 1`.
    pub n_max: usize,
    /// Highest composition level `J` in coefficient tables.
    pub levels: usize,
    /// Λ-family size for other maps.
    pub budget: usize,
    /// Deepest dyadic level searched for Λ-functions.
    pub max_depth: u32,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { n_max: 19, levels: 4, budget: 32, max_depth: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub trials: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { trials: 100 }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub eps_tail: Option<f64>,
    pub eps_res: Option<f64>,
    pub j_max: Option<usize>,
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub p: Option<f64>,
}

/// A parsed configuration and where it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub path: PathBuf,
    source: String,
    /// Raw bytes of a csv observable, folded into the hash.
    data: Option<Vec<u8>>,
}

impl Loaded {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let source =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_str(&source, path)
    }

    pub fn from_str(source: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(source).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            line: parse_error_line(source, &e),
            message: e.message().trim_end().to_string(),
        })?;
        let mut loaded = Loaded { config, path: path.to_path_buf(), source: source.to_string(), data: None };
        if let Some(ObservableSpec::Csv { path: data }) = &loaded.config.observable {
            let full = loaded.resolve(data);
            let bytes =
                fs::read(&full).map_err(|source| ConfigError::Io { path: full.display().to_string(), source })?;
            loaded.data = Some(bytes);
        }
        loaded.validate()?;
        Ok(loaded)
    }

    /// Paths in the config are relative to the config file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        let c = &mut self.config;
        let checks: [(&str, Option<f64>); 5] = [
            ("eps_tail", o.eps_tail),
            ("eps_res", o.eps_res),
            ("lambda", o.lambda),
            ("threshold", o.threshold),
            ("p", o.p),
        ];
        if let Some(n) = o.grid {
            c.grid.n = n;
        }
        if let Some(s) = o.seed {
            c.seed = s;
        }
        if let Some(j) = o.j_max {
            c.solver.j_max = j;
        }
        for (key, v) in checks {
            let Some(v) = v else { continue };
            match key {
                "eps_tail" => c.solver.eps_tail = v,
                "eps_res" => c.solver.eps_res = v,
                "lambda" => c.solver.lambda = v,
                "threshold" => c.ladder.threshold = v,
                _ => c.ladder.p = v,
            }
        }
        self.check()
            .map_err(|(_, key, message)| ConfigError::Override { key: format!("--{}", key.replace('_', "-")), message })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.check().map_err(|(section, key, message)| ConfigError::Invalid {
            path: self.path.display().to_string(),
            line: line_of(&self.source, section, key),
            key: if section.is_empty() { key.to_string() } else { format!("{section}.{key}") },
            message,
        })
    }

    /// `(section, key, message)` of the first violated constraint.
    fn check(&self) -> Result<(), (&'static str, &'static str, String)> {
        let c = &self.config;
        let n = c.grid.n;
        if n < 64 || !n.is_power_of_two() {
            return Err(("grid", "n", format!("must be a power of two ≥ 64, got {n}")));
        }
        let positive = [
            ("grid", "tol", c.grid.tol),
            ("solver", "eps_tail", c.solver.eps_tail),
            ("solver", "eps_res", c.solver.eps_res),
            ("solver", "inconclusive_factor", c.solver.inconclusive_factor),
            ("solver", "density_floor", c.solver.density_floor),
            ("ladder", "threshold", c.ladder.threshold),
            ("ladder", "constant_tol", c.ladder.constant_tol),
        ];
        for (section, key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err((section, key, format!("must be positive, got {v}")));
            }
        }
        if !(c.solver.lambda > 0.0 && c.solver.lambda <= 1.0) {
            return Err(("solver", "lambda", format!("must lie in (0, 1], got {}", c.solver.lambda)));
        }
        if !(c.ladder.p >= 1.0 && c.ladder.p.is_finite()) {
            return Err(("ladder", "p", format!("must be ≥ 1, got {}", c.ladder.p)));
        }
        if c.solver.j_max == 0 {
            return Err(("solver", "j_max", "must be at least 1".into()));
        }
        if c.grid.max_iter == 0 {
            return Err(("grid", "max_iter", "must be at least 1".into()));
        }
        if c.basis.levels == 0 {
            return Err(("basis", "levels", "must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the parsed configuration
    /// (defaults filled in, key order fixed) plus any observable data file.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.config).expect("config serializes"));
        if let Some(d) = &self.data {
            hasher.update(d);
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn observable(&self) -> Result<Option<Observable>, ConfigError> {
        let Some(spec) = &self.config.observable else { return Ok(None) };
        let invalid = |message: String| ConfigError::Invalid {
            path: self.path.display().to_string(),
            line: line_of(&self.source, "observable", "kind"),
            key: "observable".into(),
            message,
        };
        let obs = match spec {
            ObservableSpec::Fourier { offset, terms } => Observable::Fourier {
                offset: *offset,
                terms: terms.iter().map(|t| FourierTerm { n: t[0], cos: t[1], sin: t[2] }).collect(),
            },
            ObservableSpec::Step { breakpoints, values } => {
                Observable::step(breakpoints.clone(), values.clone()).map_err(|e| invalid(e.to_string()))?
            }
            ObservableSpec::Linear { knots } => {
                Observable::linear(knots.iter().map(|k| (k[0], k[1])).collect()).map_err(|e| invalid(e.to_string()))?
            }
            ObservableSpec::Csv { path } => {
                let full = self.resolve(path);
                let knots = read_knots(&full, self.data.as_deref().unwrap_or_default())?;
                Observable::linear(knots).map_err(|e| invalid(e.to_string()))?
            }
        };
        Ok(Some(obs))
    }
}

#[derive(Debug, Deserialize)]
struct Knot {
    x: f64,
    value: f64,
}

fn read_knots(path: &Path, bytes: &[u8]) -> Result<Vec<(f64, f64)>, ConfigError> {
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers =
        reader.headers().map_err(|e| ConfigError::Data { path: shown.clone(), line: 1, message: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>() != ["x", "value"] {
        return Err(ConfigError::Data { path: shown, line: 1, message: "header must be `x,value`".into() });
    }
    let mut knots = Vec::new();
    for (k, row) in reader.deserialize::<Knot>().enumerate() {
        let row = row.map_err(|e| ConfigError::Data {
            path: shown.clone(),
            line: e.position().map_or(k as u64 + 2, |p| p.line()) as usize,
            message: e.to_string(),
        })?;
        knots.push((row.x, row.value));
    }
    if knots.is_empty() {
        return Err(ConfigError::Data { path: shown, line: 2, message: "no samples".into() });
    }
    Ok(knots)
}

/// Line of a parse error. Errors inside a tagged table are reported at the
/// table header, so unknown fields are looked up below it by name.
fn parse_error_line(source: &str, e: &toml::de::Error) -> usize {
    let start = e.span().map_or(0, |s| s.start).min(source.len());
    let line = source[..start].matches('\n').count() + 1;
    let field = e.message().strip_prefix("unknown field `").and_then(|m| m.split('`').next());
    let Some(field) = field else { return line };
    source
        .lines()
        .enumerate()
        .skip(line - 1)
        .find(|(_, l)| l.trim_start().strip_prefix(field).is_some_and(|r| r.trim_start().starts_with('=')))
        .map_or(line, |(i, _)| i + 1)
}

/// 1-based line of `key = …` inside `[section]` (top level when `section`
/// is empty); falls back to the section header, then to line 1.
fn line_of(source: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header.get_or_insert(i + 1);
            }
            continue;
        }
        let dotted = format!("{section}.{key}");
        let matches_key = |k: &str| line.strip_prefix(k).is_some_and(|rest| rest.trim_start().starts_with('='));
        if (current == section && matches_key(key)) || (current.is_empty() && matches_key(&dotted)) {
            return i + 1;
        }
    }
    header.unwrap_or(1)
}
