//! Static checks of a config file without running anything.

use std::fs;
use std::path::Path;

use maxshape::optimizer::OptError;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Command, RunConfig, Source, TOP_LEVEL_KEYS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// The file cannot be read or is not a JSON object; nothing else is checked.
    Fatal,
    UnknownKey,
    MissingField,
    InvalidValue,
    MissingFile,
    InfeasibleLength,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Dotted key path, empty for the whole file.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        if self.path.is_empty() {
            write!(f, "{kind}: {}", self.message)
        } else {
            write!(f, "{kind}: {}: {}", self.path, self.message)
        }
    }
}

const OPTIMIZER_KEYS: &[&str] = &[
    "length",
    "functional",
    "coefficients",
    "grid_h",
    "moves",
    "schedule",
    "seed",
    "length_tol",
    "capacity_fraction",
    "step",
    "pde",
];
const OPTIMIZER_REQUIRED: &[&str] = &["length", "functional", "grid_h"];
const MOVE_KEYS: &[&str] =
    &["perturb_vertex", "split_edge", "slide_branch", "ball_surgery", "enlarge_spur", "prune_spur"];
const SCHEDULE_KEYS: &[&str] = &["initial_temperature", "cooling", "iterations", "batch", "restart_after"];
const PDE_KEYS: &[&str] = &["pde_tol", "eig_tol", "ps_tol", "ps_eps", "ps_max_iter"];
const COEFF_KEYS: &[&str] = &["sigma", "rho", "potential"];

/// Extra keys per functional kind.
fn functional_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "inradius" | "torsion_max" | "torsional_rigidity" => &[],
        "eigenvalue" => &["k"],
        "spectral_composite" => &["k", "f"],
        "poincare_sobolev" => &["p", "q"],
        _ => return None,
    })
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, kind: DiagnosticKind, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic { kind, path: path.into(), message: message.into() });
    }

    fn unknown(&mut self, obj: &Map<String, Value>, known: &[&str], prefix: &str) {
        for k in obj.keys() {
            if !known.contains(&k.as_str()) {
                self.push(DiagnosticKind::UnknownKey, join(prefix, k), "unknown key");
            }
        }
    }

    fn required(&mut self, obj: &Map<String, Value>, keys: &[&str], prefix: &str) {
        for k in keys {
            if !obj.contains_key(*k) {
                self.push(DiagnosticKind::MissingField, join(prefix, k), "missing field");
            }
        }
    }

    fn nested(&mut self, obj: &Map<String, Value>, key: &str, known: &[&str], prefix: &str) {
        match obj.get(key) {
            Some(Value::Object(inner)) => self.unknown(inner, known, &join(prefix, key)),
            Some(_) => self.push(DiagnosticKind::InvalidValue, join(prefix, key), "expected an object"),
            None => {}
        }
    }

    fn functional(&mut self, v: &Value, path: &str) {
        let Some(obj) = v.as_object() else {
            self.push(DiagnosticKind::InvalidValue, path, "expected an object with a \"kind\" key");
            return;
        };
        let Some(kind) = obj.get("kind").and_then(Value::as_str) else {
            self.push(DiagnosticKind::MissingField, join(path, "kind"), "missing field");
            return;
        };
        let Some(fields) = functional_fields(kind) else {
            self.push(DiagnosticKind::InvalidValue, join(path, "kind"), format!("unknown functional {kind:?}"));
            return;
        };
        let mut known = vec!["kind"];
        known.extend_from_slice(fields);
        self.unknown(obj, &known, path);
        self.required(obj, fields, path);
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_owned()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Every unknown key, missing field, unreadable reference, and infeasible
/// value in the config at `path`. `command` overrides the config's own.
pub fn validate_config(path: &Path, command: Option<Command>) -> Vec<Diagnostic> {
    let mut out = Collector(Vec::new());
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            out.push(DiagnosticKind::Fatal, "", format!("cannot read {}: {e}", path.display()));
            return out.0;
        }
    };
    let root: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            out.push(DiagnosticKind::Fatal, "", format!("not valid JSON: {e}"));
            return out.0;
        }
    };
    let Some(obj) = root.as_object() else {
        out.push(DiagnosticKind::Fatal, "", "top level must be a JSON object");
        return out.0;
    };

    out.unknown(obj, TOP_LEVEL_KEYS, "");
    let command = command.or_else(|| obj.get("command").and_then(|c| serde_json::from_value(c.clone()).ok()));
    match (command, obj.get("command")) {
        (None, Some(c)) => out.push(DiagnosticKind::InvalidValue, "command", format!("unknown command {c}")),
        (None, None) => out.push(DiagnosticKind::MissingField, "command", "missing field"),
        _ => {}
    }

    if let Some(opt) = obj.get("optimizer") {
        match opt.as_object() {
            Some(o) => {
                out.unknown(o, OPTIMIZER_KEYS, "optimizer");
                out.required(o, OPTIMIZER_REQUIRED, "optimizer");
                out.nested(o, "moves", MOVE_KEYS, "optimizer");
                out.nested(o, "schedule", SCHEDULE_KEYS, "optimizer");
                out.nested(o, "pde", PDE_KEYS, "optimizer");
                out.nested(o, "coefficients", COEFF_KEYS, "optimizer");
                if let Some(f) = o.get("functional") {
                    out.functional(f, "optimizer.functional");
                }
            }
            None => out.push(DiagnosticKind::InvalidValue, "optimizer", "expected an object"),
        }
    }
    if let Some(f) = obj.get("functional") {
        out.functional(f, "functional");
    }

    let needs: &[&str] = match command {
        Some(Command::Solve) => &["domain", "optimizer"],
        Some(Command::Evaluate) => &["domain", "network"],
        Some(Command::Audit) => &["network"],
        _ => &[],
    };
    out.required(obj, needs, "");
    if command == Some(Command::Evaluate) {
        if !obj.contains_key("functional") && !obj.contains_key("optimizer") {
            out.push(DiagnosticKind::MissingField, "functional", "missing field");
        }
        if !obj.contains_key("grid_h") && !obj.contains_key("optimizer") {
            out.push(DiagnosticKind::MissingField, "grid_h", "missing field");
        }
    }
    if !out.0.is_empty() {
        return out.0;
    }

    // Structure is sound; now types, references, and feasibility.
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            out.push(DiagnosticKind::InvalidValue, "", e.to_string());
            return out.0;
        }
    };
    for (key, p) in [
        ("domain", match &cfg.domain {
            Some(Source::Path(p)) => Some(p),
            _ => None,
        }),
        ("network", match &cfg.network {
            Some(Source::Path(p)) => Some(p),
            _ => None,
        }),
    ] {
        if let Some(p) = p {
            if !cfg.resolve(p).is_file() {
                out.push(DiagnosticKind::MissingFile, key, format!("{} does not exist", cfg.resolve(p).display()));
            }
        }
    }
    if cfg.output_dir.exists() && !cfg.output_dir.is_dir() {
        out.push(DiagnosticKind::InvalidValue, "output_dir", "exists and is not a directory");
    }
    if !out.0.is_empty() {
        return out.0;
    }
    let domain = if cfg.domain.is_some() {
        match cfg.domain() {
            Ok(d) => Some(d),
            Err(e) => {
                out.push(DiagnosticKind::InvalidValue, "domain", e.to_string());
                None
            }
        }
    } else {
        None
    };
    if cfg.network.is_some() {
        if let Err(e) = cfg.network() {
            out.push(DiagnosticKind::InvalidValue, "network", e.to_string());
        }
    }
    if let Some(h) = cfg.grid_h {
        if !(h > 0.0 && h.is_finite()) {
            out.push(DiagnosticKind::InvalidValue, "grid_h", "must be positive");
        }
    }
    if let (Some(opt), Some(domain)) = (&cfg.optimizer, &domain) {
        match opt.validate(domain) {
            Ok(()) => {}
            Err(OptError::InfeasibleLength { length, capacity }) => out.push(
                DiagnosticKind::InfeasibleLength,
                "optimizer.length",
                format!("length {length} exceeds the capacity {capacity} of the lattice"),
            ),
            Err(e) => out.push(DiagnosticKind::InvalidValue, "optimizer", e.to_string()),
        }
    }
    out.0
}
