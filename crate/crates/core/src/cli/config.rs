//! Scenario configuration files.
//!
//! A config is UTF-8 text with `[section]` headers and `key = value` lines;
//! `#` starts a comment. Sections are `[profile]`, `[platoon]`, `[sim]` and
//! `[perturbations]`. Perturbation lines read `<vehicle> = <dx> [<dv>]`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::controller::{ControllerParams, TiePolicy};
use crate::error::{Hypothesis, PlatoonError};
use crate::profile::{Profile, SpeedDropProfile, VelocityProfile};
use crate::sim::{
    Integrator, Perturbation, Scenario, DEFAULT_DT, DEFAULT_DURATION, DEFAULT_LEADER_OFFSET,
    DEFAULT_RECORD_INTERVAL,
};

const DEFAULT_RTOL: f64 = 1e-8;
const DEFAULT_ATOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigErrorKind {
    Syntax(String),
    UnknownSection(String),
    UnknownKey {
        section: String,
        key: String,
    },
    DuplicateKey(String),
    MissingKey(String),
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: String,
    },
    Invalid(String),
    Hypothesis(Hypothesis),
}

/// Config problem with the 1-based line it refers to (0 when the file has
/// no relevant line, e.g. a missing key).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {}", describe(.kind))]
pub struct ConfigError {
    pub line: usize,
    pub kind: ConfigErrorKind,
}

fn describe(kind: &ConfigErrorKind) -> String {
    match kind {
        ConfigErrorKind::Syntax(s) => format!("syntax error: {s}"),
        ConfigErrorKind::UnknownSection(s) => format!("unknown section [{s}]"),
        ConfigErrorKind::UnknownKey { section, key } => {
            format!("unknown key '{key}' in [{section}]")
        }
        ConfigErrorKind::DuplicateKey(k) => format!("duplicate key '{k}'"),
        ConfigErrorKind::MissingKey(k) => format!("missing required key '{k}'"),
        ConfigErrorKind::TypeMismatch {
            key,
            expected,
            found,
        } => {
            format!("'{key}' expects {expected}, found '{found}'")
        }
        ConfigErrorKind::Invalid(s) => s.clone(),
        ConfigErrorKind::Hypothesis(h) => format!("hypothesis violation: {h}"),
    }
}

const SECTIONS: [&str; 4] = ["profile", "platoon", "sim", "perturbations"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "profile" => &["v0", "rho", "drop_start", "drop_length"],
        "platoon" => &["n", "headway", "x1_start", "tie", "spacing_weight"],
        "sim" => &[
            "duration",
            "dt",
            "record_interval",
            "integrator",
            "rtol",
            "atol",
            "saturation",
        ],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

/// Parsed but unresolved `key = value` document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDoc {
    entries: Vec<Entry>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = ConfigDoc::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(ConfigError {
                    line,
                    kind: ConfigErrorKind::Syntax(format!(
                        "unterminated section header '{content}'"
                    )),
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError {
                        line,
                        kind: ConfigErrorKind::UnknownSection(name.into()),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError {
                line,
                kind: ConfigErrorKind::Syntax(format!("expected 'key = value', found '{content}'")),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.clone().ok_or(ConfigError {
                line,
                kind: ConfigErrorKind::Syntax(format!("key '{key}' appears before any section")),
            })?;
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError {
                    line,
                    kind: ConfigErrorKind::Syntax(format!("empty key or value in '{content}'")),
                });
            }
            if sec != "perturbations" && !known_keys(&sec).contains(&key) {
                return Err(ConfigError {
                    line,
                    kind: ConfigErrorKind::UnknownKey {
                        section: sec,
                        key: key.into(),
                    },
                });
            }
            if doc.entries.iter().any(|e| e.section == sec && e.key == key) {
                return Err(ConfigError {
                    line,
                    kind: ConfigErrorKind::DuplicateKey(format!("{sec}.{key}")),
                });
            }
            doc.entries.push(Entry {
                section: sec,
                key: key.into(),
                value: value.into(),
                line,
            });
        }
        Ok(doc)
    }

    /// Sets `section.key` to `value`, replacing any existing entry.
    pub fn set(&mut self, dotted_key: &str, value: &str) -> Result<(), ConfigError> {
        let (section, key) = dotted_key.split_once('.').ok_or(ConfigError {
            line: 0,
            kind: ConfigErrorKind::Syntax(format!("parameter '{dotted_key}' must be section.key")),
        })?;
        if !SECTIONS.contains(&section) {
            return Err(ConfigError {
                line: 0,
                kind: ConfigErrorKind::UnknownSection(section.into()),
            });
        }
        if section != "perturbations" && !known_keys(section).contains(&key) {
            return Err(ConfigError {
                line: 0,
                kind: ConfigErrorKind::UnknownKey {
                    section: section.into(),
                    key: key.into(),
                },
            });
        }
        match self
            .entries
            .iter_mut()
            .find(|e| e.section == section && e.key == key)
        {
            Some(e) => e.value = value.into(),
            None => self.entries.push(Entry {
                section: section.into(),
                key: key.into(),
                value: value.into(),
                line: 0,
            }),
        }
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    fn float(
        &self,
        section: &str,
        key: &str,
        default: Option<f64>,
    ) -> Result<(f64, usize), ConfigError> {
        match self.get(section, key) {
            Some(e) => parse_f64(&e.value, key, e.line).map(|v| (v, e.line)),
            None => default.map(|d| (d, 0)).ok_or(ConfigError {
                line: 0,
                kind: ConfigErrorKind::MissingKey(format!("{section}.{key}")),
            }),
        }
    }

    /// Resolves defaults, validates every value, and checks `M T < 1` and
    /// `inf v_d > 0`.
    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let invalid = |line: usize, msg: String| ConfigError {
            line,
            kind: ConfigErrorKind::Invalid(msg),
        };

        let (v0, v0_line) = self.float("profile", "v0", None)?;
        let (rho, rho_line) = self.float("profile", "rho", None)?;
        let (drop_start, _) = self.float("profile", "drop_start", Some(0.0))?;
        let (drop_length, len_line) = self.float("profile", "drop_length", None)?;
        let profile = SpeedDropProfile::new(v0, rho, drop_start, drop_length).map_err(|e| {
            let line = match &e {
                PlatoonError::InvalidParameter(m) if m.starts_with("rho") => rho_line,
                PlatoonError::InvalidParameter(m) if m.starts_with("drop_length") => len_line,
                _ => v0_line,
            };
            invalid(line, e.to_string())
        })?;

        let n_entry = self.get("platoon", "n").ok_or(ConfigError {
            line: 0,
            kind: ConfigErrorKind::MissingKey("platoon.n".into()),
        })?;
        let n: usize = n_entry.value.parse().map_err(|_| ConfigError {
            line: n_entry.line,
            kind: ConfigErrorKind::TypeMismatch {
                key: "n".into(),
                expected: "a positive integer",
                found: n_entry.value.clone(),
            },
        })?;
        if n == 0 {
            return Err(invalid(n_entry.line, "n must be at least 1".into()));
        }
        let (headway, headway_line) = self.float("platoon", "headway", None)?;
        let (x1_start, _) = self.float(
            "platoon",
            "x1_start",
            Some(drop_start + DEFAULT_LEADER_OFFSET),
        )?;
        let tie = match self.get("platoon", "tie") {
            None => TiePolicy::Velocity,
            Some(e) => match e.value.as_str() {
                "velocity" => TiePolicy::Velocity,
                "spacing" => TiePolicy::Spacing,
                other => {
                    return Err(ConfigError {
                        line: e.line,
                        kind: ConfigErrorKind::TypeMismatch {
                            key: "tie".into(),
                            expected: "'velocity' or 'spacing'",
                            found: other.into(),
                        },
                    })
                }
            },
        };
        let (spacing_weight, sw_line) = self.float("platoon", "spacing_weight", Some(1.0))?;
        if !(spacing_weight > 0.0 && spacing_weight.is_finite()) {
            return Err(invalid(sw_line, "spacing_weight must be positive".into()));
        }
        let mut controller =
            ControllerParams::new(headway).map_err(|e| invalid(headway_line, e.to_string()))?;
        controller.tie_policy = tie;
        controller.spacing_weight = spacing_weight;

        let (duration, duration_line) = self.float("sim", "duration", Some(DEFAULT_DURATION))?;
        let (dt, dt_line) = self.float("sim", "dt", Some(DEFAULT_DT))?;
        let (record_interval, ri_line) =
            self.float("sim", "record_interval", Some(DEFAULT_RECORD_INTERVAL))?;
        for (name, v, line) in [
            ("duration", duration, duration_line),
            ("dt", dt, dt_line),
            ("record_interval", record_interval, ri_line),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(line, format!("{name} must be positive, got {v}")));
            }
        }
        let integrator_entry = self.get("sim", "integrator");
        let integrator = match integrator_entry.map(|e| e.value.as_str()) {
            None | Some("rk4") => {
                if let Some(e) = self.get("sim", "rtol").or_else(|| self.get("sim", "atol")) {
                    return Err(invalid(
                        e.line,
                        format!("'{}' only applies to integrator = rk45", e.key),
                    ));
                }
                Integrator::Rk4
            }
            Some("rk45") => {
                let (rtol, rl) = self.float("sim", "rtol", Some(DEFAULT_RTOL))?;
                let (atol, al) = self.float("sim", "atol", Some(DEFAULT_ATOL))?;
                if !(rtol > 0.0) {
                    return Err(invalid(rl, "rtol must be positive".into()));
                }
                if !(atol > 0.0) {
                    return Err(invalid(al, "atol must be positive".into()));
                }
                Integrator::Rk45 { rtol, atol }
            }
            Some(other) => {
                let e = integrator_entry.expect("matched Some");
                return Err(ConfigError {
                    line: e.line,
                    kind: ConfigErrorKind::TypeMismatch {
                        key: "integrator".into(),
                        expected: "'rk4' or 'rk45'",
                        found: other.into(),
                    },
                });
            }
        };
        let saturation = match self.get("sim", "saturation") {
            None => None,
            Some(e) if e.value == "none" => None,
            Some(e) => {
                let cap = parse_f64(&e.value, "saturation", e.line)?;
                if !(cap > 0.0) {
                    return Err(invalid(
                        e.line,
                        "saturation must be positive or 'none'".into(),
                    ));
                }
                Some(cap)
            }
        };

        let mut perturbations = Vec::new();
        for e in self.entries.iter().filter(|e| e.section == "perturbations") {
            let vehicle: usize = e.key.parse().map_err(|_| ConfigError {
                line: e.line,
                kind: ConfigErrorKind::TypeMismatch {
                    key: e.key.clone(),
                    expected: "a vehicle index",
                    found: e.key.clone(),
                },
            })?;
            if vehicle == 0 || vehicle > n {
                return Err(invalid(
                    e.line,
                    format!("perturbed vehicle {vehicle} outside 1..={n}"),
                ));
            }
            let parts: Vec<&str> = e.value.split_whitespace().collect();
            if parts.is_empty() || parts.len() > 2 {
                return Err(ConfigError {
                    line: e.line,
                    kind: ConfigErrorKind::TypeMismatch {
                        key: e.key.clone(),
                        expected: "'<dx> [<dv>]'",
                        found: e.value.clone(),
                    },
                });
            }
            let dx = parse_f64(parts[0], &e.key, e.line)?;
            let dv = parts
                .get(1)
                .map(|p| parse_f64(p, &e.key, e.line))
                .transpose()?
                .unwrap_or(0.0);
            perturbations.push(Perturbation { vehicle, dx, dv });
        }

        let profile: Profile = profile.into();
        profile.validate(headway).map_err(|e| match e {
            PlatoonError::Hypothesis(h) => ConfigError {
                line: headway_line,
                kind: ConfigErrorKind::Hypothesis(h),
            },
            other => invalid(headway_line, other.to_string()),
        })?;

        Ok(Scenario {
            n,
            controller,
            profile,
            x1_start,
            duration,
            dt,
            record_interval,
            perturbations,
            integrator,
            saturation,
        })
    }
}

fn parse_f64(text: &str, key: &str, line: usize) -> Result<f64, ConfigError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError {
            line,
            kind: ConfigErrorKind::TypeMismatch {
                key: key.into(),
                expected: "a finite number",
                found: text.into(),
            },
        }),
    }
}

/// Parses and resolves a config document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    ConfigDoc::parse(text)?.resolve()
}

/// Canonical config text; every value is written explicitly with
/// round-trip float formatting, so parsing it reproduces the scenario.
///
/// Only speed-drop profiles and the default error dynamics can be expressed.
pub fn serialize_scenario(s: &Scenario) -> Result<String, PlatoonError> {
    let Profile::SpeedDrop(p) = &s.profile else {
        return Err(PlatoonError::InvalidParameter(
            "only speed-drop profiles can be written to a config".into(),
        ));
    };
    if s.controller.error_dynamics != Default::default() {
        return Err(PlatoonError::InvalidParameter(
            "custom error dynamics cannot be written to a config".into(),
        ));
    }
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[profile]");
    let _ = writeln!(w, "v0 = {}", p.v0());
    let _ = writeln!(w, "rho = {}", p.rho());
    let _ = writeln!(w, "drop_start = {}", p.drop_start());
    let _ = writeln!(w, "drop_length = {}", p.drop_length());
    let _ = writeln!(w, "\n[platoon]");
    let _ = writeln!(w, "n = {}", s.n);
    let _ = writeln!(w, "headway = {}", s.controller.headway);
    let _ = writeln!(w, "x1_start = {}", s.x1_start);
    let tie = match s.controller.tie_policy {
        TiePolicy::Velocity => "velocity",
        TiePolicy::Spacing => "spacing",
    };
    let _ = writeln!(w, "tie = {tie}");
    let _ = writeln!(w, "spacing_weight = {}", s.controller.spacing_weight);
    let _ = writeln!(w, "\n[sim]");
    let _ = writeln!(w, "duration = {}", s.duration);
    let _ = writeln!(w, "dt = {}", s.dt);
    let _ = writeln!(w, "record_interval = {}", s.record_interval);
    match s.integrator {
        Integrator::Rk4 => {
            let _ = writeln!(w, "integrator = rk4");
        }
        Integrator::Rk45 { rtol, atol } => {
            let _ = writeln!(w, "integrator = rk45");
            let _ = writeln!(w, "rtol = {rtol}");
            let _ = writeln!(w, "atol = {atol}");
        }
    }
    match s.saturation {
        Some(c) => {
            let _ = writeln!(w, "saturation = {c}");
        }
        None => {
            let _ = writeln!(w, "saturation = none");
        }
    }
    let _ = writeln!(w, "\n[perturbations]");
    for pt in &s.perturbations {
        let _ = writeln!(w, "{} = {} {}", pt.vehicle, pt.dx, pt.dv);
    }
    Ok(out)
}
