//! Run configuration: TOML (or JSON) with sections `[model]`, `[grid]`,
//! `[solver]` and `[study]`, plus `key=value` overrides on dotted paths.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env_models::{
    make_oscillating_optimum, make_oscillating_pressure, EnvironmentModel, FourierPressure,
    TabulatedRate,
};
use crate::pde_solver::{SimulationGrid, TimeScheme};

/// A configuration problem, with the 1-based line it points at when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }

    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `a = r − g (x − c sin bt)²`.
    OscillatingOptimum {
        r: f64,
        g: f64,
        c: f64,
        b: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `a = r − g(t) x²`, `g(t) = g0 + Σ g_cos[k] cos 2π(k+1)t + g_sin[k] sin 2π(k+1)t`.
    OscillatingPressure {
        r: f64,
        g0: f64,
        #[serde(default)]
        g_cos: Vec<f64>,
        #[serde(default)]
        g_sin: Vec<f64>,
        #[serde(default)]
        shift: f64,
    },
    Constant {
        a0: f64,
        period: f64,
        #[serde(default)]
        shift: f64,
    },
    /// Rate table on a uniform `(t, x)` grid; `path` is relative to the config.
    Tabulated {
        path: String,
        x_lo: f64,
        x_hi: f64,
        #[serde(default)]
        shift: f64,
    },
}

fn default_x_lo() -> f64 {
    -4.0
}
fn default_x_hi() -> f64 {
    4.0
}
fn default_nx() -> usize {
    799
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_x_lo")]
    pub x_lo: f64,
    #[serde(default = "default_x_hi")]
    pub x_hi: f64,
    /// Interior nodes.
    #[serde(default = "default_nx")]
    pub nx: usize,
    /// Time step; when absent the period is split into `steps_per_period`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_lo: default_x_lo(),
            x_hi: default_x_hi(),
            nx: default_nx(),
            dt: None,
            steps_per_period: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    ImexEuler,
    #[default]
    Strang,
}

fn default_orbit_tol() -> f64 {
    1e-8
}
fn default_max_periods() -> usize {
    5000
}
fn default_eigen_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Mutation scale; `σ = ε²`. Give `eps` or `sigma`, not both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_orbit_tol")]
    pub orbit_tol: f64,
    #[serde(default = "default_max_periods")]
    pub max_periods: usize,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default = "default_eigen_tol")]
    pub eigen_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: None,
            sigma: None,
            orbit_tol: default_orbit_tol(),
            max_periods: default_max_periods(),
            scheme: SchemeConfig::default(),
            eigen_tol: default_eigen_tol(),
        }
    }
}

fn default_eps_list() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_radii() -> Vec<f64> {
    vec![2.0, 3.0, 4.0, 5.0]
}
fn default_t_end() -> f64 {
    200.0
}
fn default_sigma0_dt() -> f64 {
    1.0 / 256.0
}
fn default_window() -> f64 {
    0.1
}
fn default_n0_sd() -> f64 {
    0.05
}
fn default_limit_half_width() -> f64 {
    1.0
}
fn default_snapshot_count() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Constant environment used for fitness comparisons; defaults to the
    /// phase where the optimum sits at its mean (example 1) or `½` (example 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// End time of the `σ = 0` run.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_sigma0_dt")]
    pub sigma0_dt: f64,
    /// Half-width of the window around `x_m` for concentration measurements.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Standard deviation of the Gaussian initial density in `σ = 0` runs.
    #[serde(default = "default_n0_sd")]
    pub n0_sd: f64,
    /// Half-width of the trait window for the phase comparison.
    #[serde(default = "default_limit_half_width")]
    pub limit_half_width: f64,
    /// Density snapshots written per orbit.
    #[serde(default = "default_snapshot_count")]
    pub snapshot_count: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            eps_list: default_eps_list(),
            radii: default_radii(),
            tau: None,
            t_end: default_t_end(),
            sigma0_dt: default_sigma0_dt(),
            window: default_window(),
            n0_sd: default_n0_sd(),
            limit_half_width: default_limit_half_width(),
            snapshot_count: default_snapshot_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub study: StudyConfig,
    /// Directory that relative model paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<std::path::PathBuf>,
}

/// Default mutation scale when neither `eps` nor `sigma` is given.
pub const DEFAULT_EPS: f64 = 0.05;

impl RunConfig {
    /// `ε`, from `eps` or `√sigma`.
    pub fn eps(&self) -> f64 {
        match (self.solver.eps, self.solver.sigma) {
            (Some(e), _) => e,
            (None, Some(s)) => s.sqrt(),
            (None, None) => DEFAULT_EPS,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.solver.sigma {
            Some(s) if self.solver.eps.is_none() => s,
            _ => self.eps() * self.eps(),
        }
    }

    pub fn scheme(&self) -> TimeScheme {
        match self.solver.scheme {
            SchemeConfig::ImexEuler => TimeScheme::ImexEuler,
            SchemeConfig::Strang => TimeScheme::Strang,
        }
    }

    /// The growth-rate model described by `[model]`.
    pub fn build_model(&self) -> Result<EnvironmentModel, ConfigError> {
        let built = match &self.model {
            ModelConfig::OscillatingOptimum { r, g, c, b, shift } => {
                make_oscillating_optimum(*r, *g, *c, *b).map(|m| m.shifted(*shift))
            }
            ModelConfig::OscillatingPressure {
                r,
                g0,
                g_cos,
                g_sin,
                shift,
            } => {
                let p = FourierPressure::new(*g0, g_cos.clone(), g_sin.clone());
                make_oscillating_pressure(*r, move |t| p.eval(t)).map(|m| m.shifted(*shift))
            }
            ModelConfig::Constant { a0, period, shift } => {
                EnvironmentModel::constant(a0 + shift, *period)
            }
            ModelConfig::Tabulated {
                path,
                x_lo,
                x_hi,
                shift,
            } => {
                let full = match &self.base_dir {
                    Some(dir) => dir.join(path),
                    None => Path::new(path).to_path_buf(),
                };
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    ConfigError::new(format!("cannot read rate table {}: {e}", full.display()))
                })?;
                let table = TabulatedRate::parse(&text, *x_lo, *x_hi).map_err(|e| {
                    ConfigError::new(format!(
                        "rate table {}: line {}: {}",
                        full.display(),
                        e.line,
                        e.message
                    ))
                })?;
                EnvironmentModel::tabulated(table).map(|m| m.shifted(*shift))
            }
        };
        built.map_err(|e| ConfigError::new(format!("[model]: {e}")))
    }

    /// Time step from `dt` or `steps_per_period` (default 512 per period).
    pub fn dt(&self, period: f64) -> f64 {
        match (self.grid.dt, self.grid.steps_per_period) {
            (Some(dt), _) => dt,
            (None, Some(n)) => period / n as f64,
            (None, None) => period / 512.0,
        }
    }

    pub fn build_grid(&self, model: &EnvironmentModel) -> Result<SimulationGrid, ConfigError> {
        SimulationGrid::new(
            self.grid.x_lo,
            self.grid.x_hi,
            self.grid.nx,
            self.dt(model.period()),
            self.sigma(),
        )
        .map(|g| g.with_scheme(self.scheme()))
        .map_err(|e| ConfigError::new(format!("[grid]: {e}")))
    }

    /// Fitness-comparison environment.
    pub fn tau(&self) -> f64 {
        if let Some(t) = self.study.tau {
            return t;
        }
        match &self.model {
            ModelConfig::OscillatingOptimum { b, .. } => PI / b,
            ModelConfig::OscillatingPressure { .. } => 0.5,
            _ => 0.0,
        }
    }
}

/// Structural checks that do not need a built model. Each failure names the
/// offending key as `section.key`.
fn validate(cfg: &RunConfig) -> Result<(), (String, String)> {
    let fail = |key: &str, msg: String| Err((key.to_string(), msg));
    let pos = |v: f64| v.is_finite() && v > 0.0;
    match &cfg.model {
        ModelConfig::OscillatingOptimum { r, g, c, b, shift } => {
            for (k, v) in [("r", r), ("c", c), ("shift", shift)] {
                if !v.is_finite() {
                    return fail(&format!("model.{k}"), format!("{k} must be finite"));
                }
            }
            if !pos(*g) {
                return fail("model.g", format!("g must be positive, got {g}"));
            }
            if !pos(*b) {
                return fail("model.b", format!("b must be positive, got {b}"));
            }
        }
        ModelConfig::OscillatingPressure {
            r,
            g0,
            g_cos,
            g_sin,
            shift,
        } => {
            if !r.is_finite() || !shift.is_finite() {
                return fail("model.r", "r and shift must be finite".into());
            }
            if !pos(*g0) {
                return fail("model.g0", format!("g0 must be positive, got {g0}"));
            }
            let amp: f64 = g_cos.iter().chain(g_sin).map(|v| v.abs()).sum();
            if !(amp < *g0) {
                return fail(
                    "model.g0",
                    format!("g0 = {g0} must exceed the total harmonic amplitude {amp}"),
                );
            }
        }
        ModelConfig::Constant { a0, period, shift } => {
            if !a0.is_finite() || !shift.is_finite() {
                return fail("model.a0", "a0 and shift must be finite".into());
            }
            if !pos(*period) {
                return fail(
                    "model.period",
                    format!("period must be positive, got {period}"),
                );
            }
        }
        ModelConfig::Tabulated {
            path,
            x_lo,
            x_hi,
            shift,
        } => {
            if path.is_empty() {
                return fail("model.path", "path must not be empty".into());
            }
            if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
                return fail(
                    "model.x_lo",
                    format!("need x_lo < x_hi, got [{x_lo}, {x_hi}]"),
                );
            }
            if !shift.is_finite() {
                return fail("model.shift", "shift must be finite".into());
            }
        }
    }
    let g = &cfg.grid;
    if !(g.x_lo.is_finite() && g.x_hi.is_finite() && g.x_lo < g.x_hi) {
        return fail(
            "grid.x_lo",
            format!("need x_lo < x_hi, got [{}, {}]", g.x_lo, g.x_hi),
        );
    }
    if g.nx < 16 {
        return fail("grid.nx", format!("nx must be at least 16, got {}", g.nx));
    }
    if g.dt.is_some() && g.steps_per_period.is_some() {
        return fail("grid.dt", "give dt or steps_per_period, not both".into());
    }
    if let Some(dt) = g.dt {
        if !pos(dt) {
            return fail("grid.dt", format!("dt must be positive, got {dt}"));
        }
    }
    if g.steps_per_period == Some(0) {
        return fail(
            "grid.steps_per_period",
            "steps_per_period must be positive".into(),
        );
    }
    let s = &cfg.solver;
    if s.eps.is_some() && s.sigma.is_some() {
        return fail("solver.eps", "give eps or sigma, not both".into());
    }
    if let Some(e) = s.eps {
        if !(e.is_finite() && e >= 0.0) {
            return fail("solver.eps", format!("eps must be nonnegative, got {e}"));
        }
    }
    if let Some(v) = s.sigma {
        if !(v.is_finite() && v >= 0.0) {
            return fail(
                "solver.sigma",
                format!("sigma must be nonnegative, got {v}"),
            );
        }
    }
    if !pos(s.orbit_tol) {
        return fail(
            "solver.orbit_tol",
            format!("orbit_tol must be positive, got {}", s.orbit_tol),
        );
    }
    if s.max_periods == 0 {
        return fail("solver.max_periods", "max_periods must be positive".into());
    }
    if !pos(s.eigen_tol) {
        return fail(
            "solver.eigen_tol",
            format!("eigen_tol must be positive, got {}", s.eigen_tol),
        );
    }
    let st = &cfg.study;
    if st.eps_list.is_empty() || st.eps_list.iter().any(|e| !pos(*e)) {
        return fail(
            "study.eps_list",
            "eps_list must hold positive values".into(),
        );
    }
    if st.radii.is_empty()
        || st.radii.iter().any(|r| !pos(*r))
        || st.radii.windows(2).any(|w| w[1] <= w[0])
    {
        return fail(
            "study.radii",
            "radii must be positive and increasing".into(),
        );
    }
    if let Some(t) = st.tau {
        if !t.is_finite() {
            return fail("study.tau", "tau must be finite".into());
        }
    }
    for (k, v) in [
        ("t_end", st.t_end),
        ("sigma0_dt", st.sigma0_dt),
        ("window", st.window),
        ("n0_sd", st.n0_sd),
        ("limit_half_width", st.limit_half_width),
    ] {
        if !pos(v) {
            return fail(
                &format!("study.{k}"),
                format!("{k} must be positive, got {v}"),
            );
        }
    }
    if st.snapshot_count == 0 {
        return fail(
            "study.snapshot_count",
            "snapshot_count must be positive".into(),
        );
    }
    Ok(())
}

/// 1-based line of `key` inside `[section]` of a TOML text, if present.
fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = String::new();
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        let lhs = line.split('=').next().unwrap_or("").trim();
        if current == section && lhs == key {
            return Some(i + 1);
        }
        if current.is_empty() && lhs == dotted {
            return Some(i + 1);
        }
    }
    section_line
}

/// A single `key=value` override. The value is read as a TOML literal and
/// falls back to a bare string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: toml::Value,
}

pub fn parse_override(spec: &str) -> Result<Override, ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let path: Vec<String> = key.split('.').map(|s| s.trim().to_string()).collect();
    let valid_segment = |s: &String| {
        !s.is_empty()
            && s.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    };
    if !path.iter().all(valid_segment) {
        return Err(ConfigError::new(format!(
            "override key `{key}` is not a dotted name"
        )));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) if t.len() == 1 => t.remove("v").expect("single key"),
        _ => toml::Value::String(raw.to_string()),
    };
    Ok(Override { path, value })
}

fn apply_override(table: &mut toml::Table, ov: &Override) -> Result<(), ConfigError> {
    let (last, parents) = ov.path.split_last().expect("nonempty path");
    let mut cur = table;
    for seg in parents {
        let entry = cur
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            ConfigError::new(format!(
                "override `{}`: `{seg}` is not a section",
                ov.path.join(".")
            ))
        })?;
    }
    cur.insert(last.clone(), ov.value.clone());
    Ok(())
}

fn json_line(err: &serde_json::Error) -> Option<usize> {
    (err.line() > 0).then_some(err.line())
}

/// Parse and validate a configuration text. JSON is detected by a leading `{`.
pub fn parse_config_str(text: &str, overrides: &[Override]) -> Result<RunConfig, ConfigError> {
    let is_json = text.trim_start().starts_with('{');
    let mut table: toml::Table = if is_json {
        let json: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| ConfigError::at(json_line(&e), e.to_string()))?;
        match toml::Value::try_from(json) {
            Ok(toml::Value::Table(t)) => t,
            Ok(_) => return Err(ConfigError::new("configuration must be an object")),
            Err(e) => return Err(ConfigError::new(format!("unsupported JSON value: {e}"))),
        }
    } else {
        toml::from_str(text).map_err(|e| toml_error(text, &e))?
    };
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let cfg: RunConfig = if is_json || !overrides.is_empty() {
        // spans of the merged table no longer point into the text
        RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| {
            let msg = e.to_string();
            let line = if is_json {
                None
            } else {
                first_backticked_key(&msg).and_then(|k| locate_any(text, &k))
            };
            ConfigError::at(line, msg.trim().to_string())
        })?
    } else {
        toml::from_str(text).map_err(|e| toml_error(text, &e))?
    };
    validate(&cfg).map_err(|(key, msg)| {
        let line = if is_json {
            None
        } else {
            locate_key(text, &key)
        };
        ConfigError::at(line, format!("{key}: {msg}"))
    })?;
    Ok(cfg)
}

fn first_backticked_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    Some(msg[start..end].to_string())
}

fn locate_any(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| l.split('=').next().map(str::trim) == Some(key))
        .map(|i| i + 1)
}

fn toml_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| {
        text.as_bytes()[..s.start.min(text.len())]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    });
    ConfigError::at(line, e.message().trim().to_string())
}

/// Read, parse and validate a configuration file.
pub fn parse_config(path: &Path, overrides: &[Override]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text, overrides).map_err(|e| ConfigError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

/// Canonical TOML text of a configuration, every default spelled out.
pub fn config_to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration is always representable")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
kind = "oscillating_optimum"
r = 1.0
g = 1.0
c = 1.0
b = 6.283185307179586
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.eps(), DEFAULT_EPS);
        assert!((cfg.tau() - 0.5).abs() < 1e-15);
        let m = cfg.build_model().unwrap();
        assert!((m.period() - 1.0).abs() < 1e-15);
        let g = cfg.build_grid(&m).unwrap();
        assert_eq!(g.nx, 799);
        assert!((g.dt - 1.0 / 512.0).abs() < 1e-18);
    }

    #[test]
    fn zero_nodes_is_rejected_with_its_line() {
        let text = format!("{MINIMAL}\n[grid]\nnx = 0\n");
        let err = parse_config_str(&text, &[]).unwrap_err();
        assert_eq!(err.line, Some(10));
        assert!(err.message.contains("grid.nx"));
    }

    #[test]
    fn unknown_keys_and_type_errors_carry_lines() {
        let err = parse_config_str(&format!("{MINIMAL}\n[grid]\nnz = 5\n"), &[]).unwrap_err();
        assert_eq!(err.line, Some(10), "{err}");
        assert!(err.message.contains("nz"));
        let err =
            parse_config_str(&format!("{MINIMAL}\n[solver]\neps = \"small\"\n"), &[]).unwrap_err();
        assert_eq!(err.line, Some(10), "{err}");
        let err = parse_config_str("[model]\nkind = \"wobbly\"\n", &[]).unwrap_err();
        assert!(err.line.is_some());
    }

    #[test]
    fn round_trip_through_canonical_text() {
        let cfg = parse_config_str(
            &format!("{MINIMAL}\n[solver]\neps = 0.025\n[study]\ntau = 0.3\n"),
            &[],
        )
        .unwrap();
        let text = config_to_toml(&cfg);
        assert_eq!(parse_config_str(&text, &[]).unwrap(), cfg);
    }

    #[test]
    fn json_is_accepted() {
        let json = r#"{"model": {"kind": "oscillating_pressure", "r": 1.0, "g0": 2.0, "g_cos": [1.8]},
                       "solver": {"eps": 0.05}}"#;
        let cfg = parse_config_str(json, &[]).unwrap();
        let m = cfg.build_model().unwrap();
        assert!((m.rate(0.5, 1.0) - (1.0 - 0.2)).abs() < 1e-12);
        assert!(parse_config_str("{\"model\": 3", &[])
            .unwrap_err()
            .line
            .is_some());
    }

    #[test]
    fn overrides_replace_and_create_values() {
        let ov = [
            parse_override("solver.eps=0.025").unwrap(),
            parse_override("study.radii=[2.0, 4.0]").unwrap(),
            parse_override("solver.scheme=imex_euler").unwrap(),
        ];
        let cfg = parse_config_str(MINIMAL, &ov).unwrap();
        assert_eq!(cfg.solver.eps, Some(0.025));
        assert_eq!(cfg.study.radii, vec![2.0, 4.0]);
        assert_eq!(cfg.scheme(), TimeScheme::ImexEuler);
        assert!(parse_override("noequals").is_err());
        assert!(parse_override("a..b=1").is_err());
        let bad = parse_config_str(MINIMAL, &[parse_override("grid.nx=3").unwrap()]).unwrap_err();
        assert!(bad.message.contains("grid.nx"));
        let bad = parse_config_str(MINIMAL, &[parse_override("model.r.x=1").unwrap()]).unwrap_err();
        assert!(bad.message.contains("not a section"));
    }

    #[test]
    fn eps_and_sigma_are_exclusive() {
        let err = parse_config_str(
            &format!("{MINIMAL}\n[solver]\neps = 0.1\nsigma = 0.01\n"),
            &[],
        )
        .unwrap_err();
        assert!(err.message.contains("not both"));
        let cfg = parse_config_str(&format!("{MINIMAL}\n[solver]\nsigma = 0.01\n"), &[]).unwrap();
        assert!((cfg.eps() - 0.1).abs() < 1e-15);
        assert_eq!(cfg.sigma(), 0.01);
    }
}
