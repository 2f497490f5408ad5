//! Plain-text run configuration.
//!
//! One `key = value` per line. `#` starts a comment. Keys may carry a
//! dotted section prefix (`mesh.nx = 8`) or sit under a `[section]`
//! header; the section is informational and only the final key segment
//! is interpreted.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{Domain, MeshKind};
use crate::ref_elem::QuadratureOption;
use crate::solver::{FluxMode, RunConfig};

/// Recognized keys.
pub const KEYS: [&str; 15] = [
    "N", "Ngeo", "option", "element_kind", "nx", "ny", "domain", "alpha", "cfl", "T", "flux", "gamma",
    "out_dir", "threads", "seed",
];

/// One `key = value` line. `line` is 1-based; 0 marks a command-line override.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Assignment {
    pub fn new(line: usize, key: &str, value: &str) -> Self {
        Assignment { line, key: key.into(), value: value.into() }
    }
}

fn config_error(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Split configuration text into validated assignments.
pub fn parse_assignments(text: &str) -> Result<Vec<Assignment>> {
    let mut out: Vec<Assignment> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            inner
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| is_ident(n))
                .ok_or_else(|| config_error(line, format!("malformed section header `{content}`")))?;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{content}`")))?;
        let (full, value) = (key.trim(), value.trim());
        if !is_ident(full) {
            return Err(config_error(line, format!("malformed key `{full}`")));
        }
        let key = full.rsplit('.').next().unwrap_or(full);
        if !KEYS.contains(&key) {
            return Err(config_error(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(config_error(line, format!("missing value for `{key}`")));
        }
        if let Some(prev) = out.iter().find(|a| a.key == key) {
            return Err(config_error(line, format!("`{key}` already set on line {}", prev.line)));
        }
        out.push(Assignment::new(line, key, value));
    }
    Ok(out)
}

/// A run configuration plus output location.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub run: RunConfig,
    pub out_dir: Option<PathBuf>,
}

impl Settings {
    pub fn new(run: RunConfig) -> Self {
        Settings { run, out_dir: None }
    }

    pub fn apply(&mut self, a: &Assignment) -> Result<()> {
        let line = a.line;
        let v = a.value.trim();
        let bad = |what: &str| config_error(line, format!("`{}`: expected {what}, got `{v}`", a.key));
        let uint = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let real = || v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("a finite number"));
        let r = &mut self.run;
        match a.key.as_str() {
            "N" => r.degree = uint()?,
            "Ngeo" => r.ngeo = uint()?,
            "option" => r.option = QuadratureOption::parse(v).ok_or_else(|| bad("1, 2, 3 or M<m>"))?,
            "element_kind" => r.mesh = MeshKind::parse(v).ok_or_else(|| bad("tri, quad or hybrid"))?,
            "nx" => r.nx = uint()?,
            "ny" => r.ny = uint()?,
            "domain" => r.domain = parse_domain(v).ok_or_else(|| bad("x0,x1,y0,y1 with x0 < x1, y0 < y1"))?,
            "alpha" => r.alpha = real()?,
            "cfl" => r.cfl = real()?,
            "T" => r.final_time = real()?,
            "flux" => r.flux = FluxMode::parse(v).ok_or_else(|| bad("ec or es"))?,
            "gamma" => r.gamma = real()?,
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            "threads" => r.threads = uint()?,
            "seed" => r.seed = v.parse().map_err(|_| bad("a non-negative integer"))?,
            other => return Err(config_error(line, format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_all(&mut self, assignments: &[Assignment]) -> Result<()> {
        assignments.iter().try_for_each(|a| self.apply(a))
    }
}

fn parse_domain(s: &str) -> Option<Domain> {
    let vals: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().ok().filter(|x: &f64| x.is_finite()))
        .collect::<Option<_>>()?;
    match vals[..] {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Some(Domain::new(x0, x1, y0, y1)),
        _ => None,
    }
}

/// Parse `text` on top of `base`.
pub fn parse_settings(text: &str, base: Settings) -> Result<Settings> {
    let mut s = base;
    s.apply_all(&parse_assignments(text)?)?;
    Ok(s)
}

/// Read and parse a configuration file on top of `base`.
pub fn load_settings(path: &Path, base: Settings) -> Result<Settings> {
    parse_settings(&std::fs::read_to_string(path)?, base)
}
