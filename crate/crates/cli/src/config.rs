//! Experiment configuration: JSON parsing with duplicate-key detection,
//! defaulting, and validation that reports every violation at once.

use std::cell::RefCell;
use std::fmt;
use std::path::{Path, PathBuf};

use idpath::simulator::GridSpec;
use idpath::{Interval, KernelSpec, RepSpec};
use serde::de::{DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

/// Default Gaussian refinement resolution.
pub const DEFAULT_RESOLUTION: usize = 1 << 14;
/// Default ratio `M / m` of the small-jump band.
pub const DEFAULT_BAND_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Diagnose,
    Validate,
    Qband,
    Rband,
    Refine,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        f.write_str(s.as_str().unwrap())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trunc {
    pub m: f64,
    pub window: Interval,
    /// Upper end of the small-jump band, default `10 m`.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn default_format() -> Format {
    Format::Csv
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refine {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

impl Default for Refine {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Time band `outer \ inner` for the out-of-window residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub inner: Interval,
    pub outer: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(default = "default_m_grid")]
    pub m_grid: Vec<f64>,
    #[serde(default = "default_kappa_grid")]
    pub kappa_grid: Vec<f64>,
    #[serde(default = "default_n_marks")]
    pub n_marks: usize,
    /// Scalar frequencies along the first coordinate axis.
    #[serde(default = "default_y_grid")]
    pub y_grid: Vec<f64>,
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
}

fn default_m_grid() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}
fn default_kappa_grid() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}
fn default_n_marks() -> usize {
    4000
}
fn default_y_grid() -> Vec<f64> {
    (0..21).map(|i| (i as f64 - 10.0) / 5.0).collect()
}
fn default_top_fraction() -> f64 {
    idpath::diagnostics::DEFAULT_TOP_FRACTION
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            m_grid: default_m_grid(),
            kappa_grid: default_kappa_grid(),
            n_marks: default_n_marks(),
            y_grid: default_y_grid(),
            top_fraction: default_top_fraction(),
        }
    }
}

/// A validated experiment. All defaults are explicit, so
/// `parse(emit(c)) == c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub rep: RepSpec,
    pub kernel: KernelSpec,
    pub trunc: Trunc,
    pub grid: GridSpec,
    pub n_paths: usize,
    pub seed: u64,
    pub mode: Mode,
    pub output: Output,
    pub refine: Refine,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_tol: Option<f64>,
}

impl ExperimentConfig {
    /// `T`, the right end of the grid.
    pub fn horizon(&self) -> f64 {
        match &self.grid {
            GridSpec::Uniform { horizon, .. } => *horizon,
            GridSpec::Times { times } => times.last().copied().unwrap_or(f64::NAN),
        }
    }

    /// `M`, with the default applied.
    pub fn upper(&self) -> f64 {
        self.trunc.upper.unwrap_or(DEFAULT_BAND_RATIO * self.trunc.m)
    }

    /// Pretty JSON that [`parse_str`] maps back to `self`.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A parsed config together with the warnings raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

// JSON value deserialization that keeps the last of duplicate keys and
// records the path of each duplicate.
struct Tracked<'a> {
    path: String,
    duplicates: &'a RefCell<Vec<String>>,
}

impl<'de> DeserializeSeed<'de> for Tracked<'_> {
    type Value = Value;

    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<Value, D::Error> {
        deserializer.deserialize_any(self)
    }
}

impl<'de> Visitor<'de> for Tracked<'_> {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<Value, E> {
        Ok(Value::Bool(v))
    }
    fn visit_i64<E>(self, v: i64) -> Result<Value, E> {
        Ok(Value::from(v))
    }
    fn visit_u64<E>(self, v: u64) -> Result<Value, E> {
        Ok(Value::from(v))
    }
    fn visit_f64<E>(self, v: f64) -> Result<Value, E> {
        Ok(Value::from(v))
    }
    fn visit_str<E>(self, v: &str) -> Result<Value, E> {
        Ok(Value::String(v.to_owned()))
    }
    fn visit_string<E>(self, v: String) -> Result<Value, E> {
        Ok(Value::String(v))
    }
    fn visit_unit<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }
    fn visit_none<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut out = Vec::new();
        while let Some(v) = seq.next_element_seed(Tracked {
            path: format!("{}[{}]", self.path, out.len()),
            duplicates: self.duplicates,
        })? {
            out.push(v);
        }
        Ok(Value::Array(out))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Value, A::Error> {
        let mut out = Map::new();
        while let Some(key) = map.next_key::<String>()? {
            let path = if self.path.is_empty() {
                key.clone()
            } else {
                format!("{}.{key}", self.path)
            };
            let value = map.next_value_seed(Tracked {
                path: path.clone(),
                duplicates: self.duplicates,
            })?;
            if out.insert(key, value).is_some() {
                self.duplicates.borrow_mut().push(path);
            }
        }
        Ok(Value::Object(out))
    }
}

fn section<T: for<'de> Deserialize<'de>>(root: &Map<String, Value>, key: &str, errors: &mut Vec<String>) -> Option<T> {
    match root.get(key) {
        None => {
            errors.push(format!("missing required field `{key}`"));
            None
        }
        Some(v) => match T::deserialize(v) {
            Ok(x) => Some(x),
            Err(e) => {
                errors.push(format!("{key}: {e}"));
                None
            }
        },
    }
}

fn optional<T: for<'de> Deserialize<'de>>(root: &Map<String, Value>, key: &str, errors: &mut Vec<String>) -> Option<T> {
    root.get(key).and_then(|v| match T::deserialize(v) {
        Ok(x) => Some(x),
        Err(e) => {
            errors.push(format!("{key}: {e}"));
            None
        }
    })
}

const KNOWN_KEYS: [&str; 12] = [
    "rep",
    "kernel",
    "trunc",
    "grid",
    "n_paths",
    "seed",
    "mode",
    "output",
    "refine",
    "band",
    "diagnostics",
    "quadrature_tol",
];

/// Parses and validates a config from JSON text.
pub fn parse_str(text: &str) -> Result<Parsed, ConfigErrors> {
    let duplicates = RefCell::new(Vec::new());
    let mut de = serde_json::Deserializer::from_str(text);
    let value = Tracked {
        path: String::new(),
        duplicates: &duplicates,
    }
    .deserialize(&mut de)
    .and_then(|v| de.end().map(|_| v))
    .map_err(|e| ConfigErrors(vec![format!("malformed JSON: {e}")]))?;
    let Value::Object(root) = value else {
        return Err(ConfigErrors(vec!["top level must be a JSON object".into()]));
    };
    let warnings: Vec<String> = duplicates
        .into_inner()
        .into_iter()
        .map(|p| format!("duplicate key `{p}`: the last occurrence wins"))
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut errors = Vec::new();
    for key in root.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            errors.push(format!("unknown field `{key}`"));
        }
    }
    let rep: Option<RepSpec> = section(&root, "rep", &mut errors);
    let kernel: Option<KernelSpec> = section(&root, "kernel", &mut errors);
    let trunc: Option<Trunc> = section(&root, "trunc", &mut errors);
    let grid: Option<GridSpec> = section(&root, "grid", &mut errors);
    let n_paths: Option<usize> = section(&root, "n_paths", &mut errors);
    let seed: Option<u64> = section(&root, "seed", &mut errors);
    let mode: Option<Mode> = section(&root, "mode", &mut errors);
    let output: Option<Output> = section(&root, "output", &mut errors);
    let refine: Option<Refine> = optional(&root, "refine", &mut errors);
    let band: Option<Band> = optional(&root, "band", &mut errors);
    let diagnostics: Option<Diagnostics> = optional(&root, "diagnostics", &mut errors);
    let quadrature_tol: Option<f64> = optional(&root, "quadrature_tol", &mut errors);

    let (Some(rep), Some(kernel), Some(trunc), Some(grid), Some(n_paths), Some(seed), Some(mode), Some(output)) =
        (rep, kernel, trunc, grid, n_paths, seed, mode, output)
    else {
        return Err(ConfigErrors(errors));
    };
    let mut trunc = trunc;
    if trunc.upper.is_none() {
        trunc.upper = Some(DEFAULT_BAND_RATIO * trunc.m);
    }
    let config = ExperimentConfig {
        rep,
        kernel,
        trunc,
        grid,
        n_paths,
        seed,
        mode,
        output,
        refine: refine.unwrap_or_default(),
        band,
        diagnostics: diagnostics.unwrap_or_default(),
        quadrature_tol,
    };
    errors.extend(validate(&config));
    if errors.is_empty() {
        Ok(Parsed { config, warnings })
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Reads and parses `path`.
pub fn parse_config(path: &Path) -> Result<Parsed, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_str(&text)
}

/// Semantic checks; every violation is reported.
pub fn validate(c: &ExperimentConfig) -> Vec<String> {
    let mut errors = Vec::new();
    if let Err(e) = c.rep.build() {
        errors.push(format!("rep: {e}"));
    }
    let times = match c.grid.times() {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("grid: {e}"));
            None
        }
    };
    let horizon = c.horizon();
    let kernel = if horizon.is_finite() && horizon > 0.0 {
        match c.kernel.build(horizon) {
            Ok(k) => Some(k),
            Err(e) => {
                errors.push(format!("kernel: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let Some(times) = &times {
        if times.iter().any(|&t| t < 0.0) {
            errors.push("grid: times must be nonnegative".into());
        }
    }
    let w = c.trunc.window;
    if !w.is_finite() || w.is_empty() {
        errors.push(format!("trunc.window {w} must be finite with positive length"));
    } else if let Some(k) = &kernel {
        let domain = k.natural_domain();
        if !domain.contains_interval(&w) {
            errors.push(format!("trunc.window {w} is not inside the kernel domain {domain}"));
        }
    }
    if !(c.trunc.m.is_finite() && c.trunc.m > 0.0) {
        errors.push(format!("trunc.m must be positive and finite, got {}", c.trunc.m));
    }
    let upper = c.upper();
    if !(upper.is_finite() && upper >= c.trunc.m) {
        errors.push(format!("trunc.M must be finite and at least m, got {upper}"));
    }
    if c.n_paths == 0 {
        errors.push("n_paths must be at least 1".into());
    }
    if c.refine.resolution == 0 {
        errors.push("refine.resolution must be at least 1".into());
    }
    if let Some(b) = &c.band {
        if !b.outer.contains_interval(&b.inner) {
            errors.push(format!("band.inner {} must lie inside band.outer {}", b.inner, b.outer));
        }
        if !b.outer.is_finite() {
            errors.push(format!("band.outer {} must be finite", b.outer));
        }
        if let Some(k) = &kernel {
            let domain = k.natural_domain();
            if !domain.contains_interval(&b.outer) {
                errors.push(format!(
                    "band.outer {} is not inside the kernel domain {domain}",
                    b.outer
                ));
            }
        }
    } else if c.mode == Mode::Rband {
        errors.push("mode rband requires a `band` section".into());
    }
    let d = &c.diagnostics;
    if d.m_grid.is_empty() || d.m_grid.windows(2).any(|p| !(p[1] > p[0])) || d.m_grid.iter().any(|m| !(*m > 0.0)) {
        errors.push("diagnostics.m_grid must be positive and strictly increasing".into());
    }
    if d.kappa_grid.is_empty() || d.kappa_grid.iter().any(|k| !(*k > 0.0)) {
        errors.push("diagnostics.kappa_grid must be nonempty and positive".into());
    }
    if d.n_marks == 0 {
        errors.push("diagnostics.n_marks must be at least 1".into());
    }
    if !(d.top_fraction > 0.01 && d.top_fraction < 0.2) {
        errors.push(format!(
            "diagnostics.top_fraction must lie in (0.01, 0.2), got {}",
            d.top_fraction
        ));
    }
    if let Some(tol) = c.quadrature_tol {
        if !(tol > 0.0 && tol < 1.0) {
            errors.push(format!("quadrature_tol must lie in (0, 1), got {tol}"));
        }
    }
    errors
}
