//! Flat `key = value` configuration files for scenarios and sweeps.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Scenario
//! keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `name` | label used in reports | file stem |
//! | `m`, `e`, `hbar` | model constants | required |
//! | `A0`, `Adot0` | initial classical data | required |
//! | `t_end` | duration | required |
//! | `quantum_init` | `vacuum`, `explicit` or `adiabatic` | `vacuum` |
//! | `rho0`, `rhodot0` | Pinney data for `explicit` | `rhodot0 = 0` |
//! | `representation` | `pinney`, `mode` or `moments` | `pinney` |
//! | `method` | `rk4` or `adaptive` | `rk4` |
//! | `dt` | RK4 step | `1e-3` |
//! | `rtol`, `atol`, `dt_init` | adaptive controls | `1e-10`, `1e-12`, `1e-3` |
//! | `sample_every` | output stride | `10` |
//! | `rho_min` | collapse floor | `1e-8` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{Method, QuantumInit, ScenarioConfig, DEFAULT_RHO_MIN};
use crate::error::{Error, Result};
use crate::physics::ModelParams;
use crate::state::Representation;

const SCENARIO_KEYS: &[&str] = &[
    "name",
    "m",
    "e",
    "hbar",
    "A0",
    "Adot0",
    "t_end",
    "quantum_init",
    "rho0",
    "rhodot0",
    "representation",
    "method",
    "dt",
    "rtol",
    "atol",
    "dt_init",
    "sample_every",
    "rho_min",
];

/// Bundled example scenarios as `(name, file text)`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("free", include_str!("../scenarios/free.cfg")),
    ("vacuum-kick", include_str!("../scenarios/vacuum-kick.cfg")),
    ("adiabatic", include_str!("../scenarios/adiabatic.cfg")),
    ("strong", include_str!("../scenarios/strong.cfg")),
];

/// Parsed `key = value` pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(Some(line_no), format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::config(Some(line_no), "empty key"));
            }
            if value.is_empty() {
                return Err(Error::config(Some(line_no), format!("key `{key}` has no value")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(Error::config(
                    Some(line_no),
                    format!("duplicate key `{key}` (first set at line {first})"),
                ));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(l, _)| *l)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn remove(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn keys(&self) -> impl Iterator<Item = (&String, usize)> {
        self.entries.iter().map(|(k, (l, _))| (k, *l))
    }

    fn required_f64(&self, key: &str) -> Result<f64> {
        self.optional_f64(key)?
            .ok_or_else(|| Error::config(None, format!("missing required key `{key}`")))
    }

    fn optional_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::config(self.line(key), format!("key `{key}`: `{v}` is not a finite number"))),
        }
    }

    fn optional_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                Error::config(
                    self.line(key),
                    format!("key `{key}`: `{v}` is not a nonnegative integer"),
                )
            }),
        }
    }

    /// Builds a scenario; every value is checked and unknown keys are rejected.
    pub fn to_scenario(&self, default_name: &str) -> Result<ScenarioConfig> {
        for (key, line) in self.keys() {
            if !SCENARIO_KEYS.contains(&key.as_str()) {
                return Err(Error::config(Some(line), format!("unknown key `{key}`")));
            }
        }
        let params = ModelParams {
            m: self.required_f64("m")?,
            e: self.required_f64("e")?,
            hbar: self.required_f64("hbar")?,
        };
        params.validate().map_err(|e| Error::config(None, e.to_string()))?;
        let quantum_init = match self.get("quantum_init").unwrap_or("vacuum") {
            "vacuum" => QuantumInit::Vacuum,
            "adiabatic" => QuantumInit::Adiabatic,
            "explicit" => QuantumInit::Explicit {
                rho0: self.required_f64("rho0")?,
                rhodot0: self.optional_f64("rhodot0")?.unwrap_or(0.0),
            },
            other => {
                return Err(Error::config(
                    self.line("quantum_init"),
                    format!("key `quantum_init`: unknown value `{other}` (vacuum, explicit, adiabatic)"),
                ))
            }
        };
        let representation = match self.get("representation") {
            None => Representation::Pinney,
            Some(v) => v
                .parse()
                .map_err(|e: Error| Error::config(self.line("representation"), e.to_string()))?,
        };
        let method = match self.get("method").unwrap_or("rk4") {
            "rk4" => Method::Rk4 {
                dt: self.optional_f64("dt")?.unwrap_or(1e-3),
            },
            "adaptive" => Method::Adaptive {
                rtol: self.optional_f64("rtol")?.unwrap_or(1e-10),
                atol: self.optional_f64("atol")?.unwrap_or(1e-12),
                dt_init: self.optional_f64("dt_init")?.unwrap_or(1e-3),
            },
            other => {
                return Err(Error::config(
                    self.line("method"),
                    format!("key `method`: unknown value `{other}` (rk4, adaptive)"),
                ))
            }
        };
        let cfg = ScenarioConfig {
            name: self.get("name").unwrap_or(default_name).to_string(),
            params,
            a0: self.required_f64("A0")?,
            adot0: self.required_f64("Adot0")?,
            quantum_init,
            representation,
            method,
            t_end: self.required_f64("t_end")?,
            sample_every: self.optional_usize("sample_every")?.unwrap_or(10),
            rho_min: self.optional_f64("rho_min")?.unwrap_or(DEFAULT_RHO_MIN),
        };
        cfg.validate().map_err(|e| Error::config(None, e.to_string()))?;
        Ok(cfg)
    }
}

/// Parses scenario text.
pub fn parse_scenario(text: &str, default_name: &str) -> Result<ScenarioConfig> {
    KeyValues::parse(text)?.to_scenario(default_name)
}

/// Text of a bundled scenario.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads a scenario from a file, falling back to a bundled scenario of that
/// name when no such file exists.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    match std::fs::read_to_string(path) {
        Ok(text) => parse_scenario(&text, &stem),
        Err(e) => match path.to_str().and_then(bundled) {
            Some(text) => parse_scenario(text, &stem),
            None => Err(Error::Io(format!("{}: {e}", path.display()))),
        },
    }
}

/// Serializes a scenario in the same format [`parse_scenario`] reads.
pub fn scenario_to_text(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", cfg.name);
    let _ = writeln!(out, "m = {:?}", cfg.params.m);
    let _ = writeln!(out, "e = {:?}", cfg.params.e);
    let _ = writeln!(out, "hbar = {:?}", cfg.params.hbar);
    let _ = writeln!(out, "A0 = {:?}", cfg.a0);
    let _ = writeln!(out, "Adot0 = {:?}", cfg.adot0);
    let _ = writeln!(out, "t_end = {:?}", cfg.t_end);
    match cfg.quantum_init {
        QuantumInit::Vacuum => {
            let _ = writeln!(out, "quantum_init = vacuum");
        }
        QuantumInit::Adiabatic => {
            let _ = writeln!(out, "quantum_init = adiabatic");
        }
        QuantumInit::Explicit { rho0, rhodot0 } => {
            let _ = writeln!(out, "quantum_init = explicit\nrho0 = {rho0:?}\nrhodot0 = {rhodot0:?}");
        }
    }
    let _ = writeln!(out, "representation = {}", cfg.representation);
    match cfg.method {
        Method::Rk4 { dt } => {
            let _ = writeln!(out, "method = rk4\ndt = {dt:?}");
        }
        Method::Adaptive { rtol, atol, dt_init } => {
            let _ = writeln!(
                out,
                "method = adaptive\nrtol = {rtol:?}\natol = {atol:?}\ndt_init = {dt_init:?}"
            );
        }
    }
    let _ = writeln!(out, "sample_every = {}", cfg.sample_every);
    let _ = writeln!(out, "rho_min = {:?}", cfg.rho_min);
    out
}

/// Parameter varied across the legs of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Coupling,
    A0,
    Adot0,
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::Coupling => "e",
            SweepAxis::A0 => "A0",
            SweepAxis::Adot0 => "Adot0",
        }
    }

    pub fn apply(&self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepAxis::Coupling => cfg.params.e = value,
            SweepAxis::A0 => cfg.a0 = value,
            SweepAxis::Adot0 => cfg.adot0 = value,
        }
    }
}

/// A base scenario plus one axis of values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// One scenario per value, named `<base>-<axis>-<index>`.
    pub fn legs(&self) -> Vec<ScenarioConfig> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut cfg = self.base.clone();
                self.axis.apply(&mut cfg, v);
                cfg.name = format!("{}-{}-{i:02}", self.base.name, self.axis.key());
                cfg
            })
            .collect()
    }
}

/// Parses a sweep file:
///
/// ```text
/// base = adiabatic          # bundled name or path relative to the sweep file
/// axis = e                  # e, A0 or Adot0
/// values = 0.2, 0.1, 0.05
/// t_end = 2                 # any scenario key overrides the base
/// ```
pub fn parse_sweep(text: &str, dir: &Path) -> Result<SweepSpec> {
    let mut kv = KeyValues::parse(text)?;
    let (base_line, base) = kv
        .remove("base")
        .ok_or_else(|| Error::config(None, "missing required key `base`"))?;
    let (axis_line, axis) = kv
        .remove("axis")
        .ok_or_else(|| Error::config(None, "missing required key `axis`"))?;
    let (values_line, values) = kv
        .remove("values")
        .ok_or_else(|| Error::config(None, "missing required key `values`"))?;
    let axis = match axis.as_str() {
        "e" => SweepAxis::Coupling,
        "A0" => SweepAxis::A0,
        "Adot0" => SweepAxis::Adot0,
        other => {
            return Err(Error::config(
                Some(axis_line),
                format!("key `axis`: unknown value `{other}` (e, A0, Adot0)"),
            ))
        }
    };
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| {
            Error::config(
                Some(values_line),
                "key `values`: expected a comma-separated list of numbers",
            )
        })?;

    let base_path: PathBuf = dir.join(&base);
    let base_text = match std::fs::read_to_string(&base_path) {
        Ok(t) => t,
        Err(_) => bundled(&base).map(str::to_string).ok_or_else(|| {
            Error::config(
                Some(base_line),
                format!("base `{base}` is neither a file nor a bundled scenario"),
            )
        })?,
    };
    let mut merged = KeyValues::parse(&base_text)?;
    for (key, (_, value)) in kv.entries {
        merged.set(&key, value);
    }
    let stem = Path::new(&base).file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let base = merged.to_scenario(stem)?;
    Ok(SweepSpec { base, axis, values })
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sweep(&text, path.parent().unwrap_or(Path::new(".")))
}
