//! Flat key-value experiment configuration.
//!
//! A config file is a TOML table of scalars. Every experiment has a fixed
//! schema; keys outside it are rejected. Resolution order is schema
//! defaults, then the file, then `--set` overrides, then `--seed`/`--out`.
//! Float keys also accept multiples of pi written as strings (`"pi"`,
//! `"10pi"`, `"0.5*pi"`).

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde_json::json;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Crab,
    Sta,
    TgFidelity,
    Propagate,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Spectrum,
        Experiment::Crab,
        Experiment::Sta,
        Experiment::TgFidelity,
        Experiment::Propagate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Crab => "crab",
            Experiment::Sta => "sta",
            Experiment::TgFidelity => "tg-fidelity",
            Experiment::Propagate => "propagate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::Spectrum => "single-particle spectrum swept over Omega, b or a trap frequency",
            Experiment::Crab => "CRAB optimization of a barrier spin-up",
            Experiment::Sta => "shortcut-to-adiabaticity trap protocol",
            Experiment::TgFidelity => "many-body fidelity between reference orbital sets",
            Experiment::Propagate => "plain time evolution with snapshots",
        }
    }

    pub fn schema(self) -> &'static [Param] {
        match self {
            Experiment::Spectrum => SPECTRUM,
            Experiment::Crab => CRAB,
            Experiment::Sta => STA,
            Experiment::TgFidelity => TG_FIDELITY,
            Experiment::Propagate => PROPAGATE,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Float,
    /// Float or the string `"auto"`.
    OptFloat,
    /// Non-negative integer.
    Count,
    Bool,
    Text,
    Choice(&'static [&'static str]),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Float => f.write_str("float"),
            Ty::OptFloat => f.write_str("float|\"auto\""),
            Ty::Count => f.write_str("integer"),
            Ty::Bool => f.write_str("bool"),
            Ty::Text => f.write_str("string"),
            Ty::Choice(opts) => write!(f, "one of {}", opts.join("|")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub ty: Ty,
    /// Default as a TOML literal.
    pub default: &'static str,
    pub doc: &'static str,
}

const fn p(key: &'static str, ty: Ty, default: &'static str, doc: &'static str) -> Param {
    Param { key, ty, default, doc }
}

const COMMON: &[Param] = &[
    p("seed", Ty::Count, "42", "seed for every random stream of the run"),
    p("out", Ty::Text, "\"\"", "output directory (default out/<experiment>)"),
];

const POTENTIALS: &[&str] = &["none", "barrier", "harmonic", "sinusoidal"];

const SPECTRUM: &[Param] = &[
    p("sweep", Ty::Choice(&["omega", "b", "trap_omega"]), "\"omega\"", "swept parameter"),
    p("start", Ty::Float, "0.0", "first sweep value"),
    p("stop", Ty::Float, "\"4pi\"", "last sweep value"),
    p("points", Ty::Count, "401", "number of sweep values"),
    p("levels", Ty::Count, "8", "eigenvalues per sweep value"),
    p("potential", Ty::Choice(POTENTIALS), "\"barrier\"", "external potential"),
    p("omega", Ty::Float, "0.0", "rotation velocity when not swept"),
    p("b", Ty::Float, "1.0", "barrier height when not swept"),
    p("trap_omega", Ty::Float, "10.0", "trap frequency when not swept"),
    p("center", Ty::Float, "0.0", "barrier or trap position"),
    p("cutoff", Ty::Count, "64", "momentum cutoff K (basis -K..K)"),
];

const CRAB: &[Param] = &[
    p("control", Ty::Choice(&["omega", "b", "both"]), "\"omega\"", "optimized pulses"),
    p("particles", Ty::Count, "1", "odd particle number N"),
    p("b", Ty::Float, "1.0", "barrier height of the guess pulse"),
    p("duration", Ty::Float, "10.0", "process time T"),
    p("omega_final", Ty::Float, "\"pi\"", "final rotation velocity"),
    p("terms", Ty::Count, "15", "CRAB terms J per pulse"),
    p("metric", Ty::Choice(&["full", "fermi_edge"]), "\"full\"", "optimized figure of merit"),
    p("allow_negative_b", Ty::Bool, "false", "let b(t) go negative instead of clamping at 0"),
    p("grid_points", Ty::Count, "512", "position grid size M"),
    p("dt", Ty::Float, "1e-3", "time step"),
    p("cutoff", Ty::Count, "32", "momentum cutoff of the barrier integrator"),
    p("max_evals", Ty::Count, "2000", "evaluation budget per simplex run"),
    p("restarts", Ty::Count, "3", "number of simplex runs"),
    p("xtol", Ty::Float, "1e-8", "simplex diameter stop"),
    p("ftol", Ty::Float, "1e-12", "simplex value spread stop"),
];

const STA: &[Param] = &[
    p("particles", Ty::Count, "1", "odd particle number N"),
    p("particles_max", Ty::Count, "0", "if larger than particles, run every odd N up to it"),
    p("trap", Ty::Choice(&["harmonic", "sinusoidal"]), "\"harmonic\"", "trap shape"),
    p("omega0", Ty::Float, "2.0", "trap frequency after raising"),
    p("omega_f", Ty::Float, "100.0", "trap frequency after squeezing"),
    p("distance", Ty::Float, "100.0", "transport distance (may exceed 1)"),
    p("omega_final", Ty::Float, "\"10pi\"", "final rotation velocity, a multiple of pi"),
    p("raise", Ty::Float, "10.0", "raise duration"),
    p("squeeze", Ty::Float, "10.0", "squeeze duration"),
    p("transport", Ty::Float, "10.0", "transport duration"),
    p("unsqueeze", Ty::Float, "10.0", "unsqueeze duration"),
    p("lower", Ty::Float, "10.0", "lowering duration"),
    p("drift", Ty::Float, "0.0", "free evolution after the trap is gone"),
    p(
        "transport_omega",
        Ty::OptFloat,
        "\"auto\"",
        "frequency used in the transport shortcut (auto: omega_f)",
    ),
    p("grid_points", Ty::Count, "512", "position grid size M"),
    p("dt", Ty::Float, "1e-4", "time step"),
    p("schedule_samples", Ty::Count, "5000", "rows of schedule.csv"),
];

const ORBITAL_SETS: &[&str] = &["sta_initial", "sta_target", "crab_initial", "crab_target"];

const TG_FIDELITY: &[Param] = &[
    p("left", Ty::Choice(ORBITAL_SETS), "\"sta_initial\"", "first orbital set"),
    p("right", Ty::Choice(ORBITAL_SETS), "\"sta_target\"", "second orbital set"),
    p("particles", Ty::Count, "1", "smallest odd N"),
    p("particles_max", Ty::Count, "9", "largest odd N"),
    p("shift", Ty::Bool, "true", "maximize over translations of the left set"),
    p("b", Ty::Float, "1.0", "barrier height for the crab sets"),
    p("omega_final", Ty::Float, "\"pi\"", "rotation velocity of the crab target"),
    p("grid_points", Ty::Count, "512", "position grid size M"),
    p("cutoff", Ty::Count, "32", "momentum cutoff for the crab sets"),
];

const PROPAGATE: &[Param] = &[
    p("initial", Ty::Choice(&["plane_wave", "eigenstate"]), "\"plane_wave\"", "initial state"),
    p("k", Ty::Float, "0.0", "plane-wave winding number (integer)"),
    p("level", Ty::Count, "0", "eigenstate index of the initial potential at omega_start"),
    p("potential", Ty::Choice(POTENTIALS), "\"none\"", "static potential in the rotating frame"),
    p("b", Ty::Float, "1.0", "barrier height"),
    p("trap_omega", Ty::Float, "10.0", "trap frequency"),
    p("omega_start", Ty::Float, "0.0", "rotation velocity at t = 0"),
    p("omega_end", Ty::Float, "0.0", "rotation velocity at t = T (linear ramp)"),
    p("duration", Ty::Float, "1.0", "evolution time T"),
    p("dt", Ty::Float, "1e-3", "time step"),
    p("grid_points", Ty::Count, "256", "position grid size M"),
    p("record_stride", Ty::Count, "100", "steps between snapshots (0: final state only)"),
    p("integrator", Ty::Choice(&["split_step", "window"]), "\"split_step\"", "time stepper"),
    p("cutoff", Ty::Count, "32", "momentum cutoff of the window integrator and eigenstates"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Count(u64),
    Bool(bool),
    Str(String),
}

impl Value {
    fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Float(v) => json!(v),
            Value::Count(v) => json!(v),
            Value::Bool(v) => json!(v),
            Value::Str(v) => json!(v),
        }
    }
}

/// `1.5`, `"pi"`, `"10pi"`, `"-0.5*pi"`.
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim().trim_end_matches('*').trim();
            let factor = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => h.parse::<f64>().ok()?,
            };
            Some(factor * PI)
        }
        None => s.parse::<f64>().ok(),
    }
}

fn convert(param: &Param, raw: &toml::Value) -> Result<Value, RunError> {
    let bad = || {
        RunError::Config(format!(
            "key `{}` expects {}, got {}",
            param.key, param.ty, raw
        ))
    };
    let value = match (param.ty, raw) {
        (Ty::Float | Ty::OptFloat, toml::Value::Float(v)) => Value::Float(*v),
        (Ty::Float | Ty::OptFloat, toml::Value::Integer(v)) => Value::Float(*v as f64),
        (Ty::OptFloat, toml::Value::String(s)) if s == "auto" => Value::Str("auto".into()),
        (Ty::Float | Ty::OptFloat, toml::Value::String(s)) => {
            Value::Float(parse_float(s).ok_or_else(bad)?)
        }
        (Ty::Count, toml::Value::Integer(v)) if *v >= 0 => Value::Count(*v as u64),
        (Ty::Bool, toml::Value::Boolean(b)) => Value::Bool(*b),
        (Ty::Text, toml::Value::String(s)) => Value::Str(s.clone()),
        (Ty::Choice(opts), toml::Value::String(s)) if opts.contains(&s.as_str()) => {
            Value::Str(s.clone())
        }
        _ => return Err(bad()),
    };
    if let Value::Float(v) = value {
        if !v.is_finite() {
            return Err(bad());
        }
    }
    Ok(value)
}

fn parse_literal(text: &str) -> Option<toml::Value> {
    let table: toml::Table = toml::from_str(&format!("v = {text}")).ok()?;
    table.get("v").cloned()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Experiment,
    values: Vec<(&'static str, Value)>,
}

/// Inputs to [`resolve`] in increasing precedence.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub file: Option<String>,
    pub sets: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn resolve(kind: Option<Experiment>, ov: &Overrides) -> Result<ExperimentConfig, RunError> {
    let table: toml::Table = match &ov.file {
        Some(text) => toml::from_str(text).map_err(|e| RunError::Config(format!("config parse error: {e}")))?,
        None => toml::Table::new(),
    };
    let file_kind = match table.get("kind") {
        Some(toml::Value::String(s)) => Some(
            Experiment::from_name(s).ok_or_else(|| RunError::Config(format!("unknown experiment kind `{s}`")))?,
        ),
        Some(other) => return Err(RunError::Config(format!("`kind` must be a string, got {other}"))),
        None => None,
    };
    let kind = match (kind, file_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(RunError::Config(format!("config is for `{b}`, not `{a}`")))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(RunError::Config("experiment kind not given".into())),
    };

    let params: Vec<&Param> = COMMON.iter().chain(kind.schema()).collect();
    let find = |key: &str| {
        params
            .iter()
            .copied()
            .find(|p| p.key == key)
            .ok_or_else(|| RunError::Config(format!("unknown key `{key}` for experiment `{kind}`")))
    };

    let mut values: Vec<(&'static str, Value)> = params
        .iter()
        .map(|p| {
            let raw = parse_literal(p.default).expect("schema default is a literal");
            (p.key, convert(p, &raw).expect("schema default converts"))
        })
        .collect();
    let mut set = |param: &Param, raw: &toml::Value| -> Result<(), RunError> {
        let v = convert(param, raw)?;
        let slot = values.iter_mut().find(|(k, _)| *k == param.key).expect("key in schema");
        slot.1 = v;
        Ok(())
    };

    for (key, raw) in &table {
        if key == "kind" {
            continue;
        }
        set(find(key)?, raw)?;
    }
    for item in &ov.sets {
        let (key, text) = item
            .split_once('=')
            .ok_or_else(|| RunError::Config(format!("override `{item}` is not key=value")))?;
        let key = key.trim();
        let text = text.trim();
        let raw = parse_literal(text).unwrap_or_else(|| toml::Value::String(text.to_string()));
        set(find(key)?, &raw)?;
    }
    if let Some(seed) = ov.seed {
        set(find("seed")?, &toml::Value::Integer(seed as i64))?;
    }
    if let Some(out) = &ov.out {
        set(find("out")?, &toml::Value::String(out.display().to_string()))?;
    }
    let mut cfg = ExperimentConfig { kind, values };
    if cfg.string("out").is_empty() {
        let default = format!("out/{}", kind.name());
        cfg.values.iter_mut().find(|(k, _)| *k == "out").unwrap().1 = Value::Str(default);
    }
    Ok(cfg)
}

impl ExperimentConfig {
    fn get(&self, key: &str) -> &Value {
        &self
            .values
            .iter()
            .find(|(k, _)| *k == key)
            .unwrap_or_else(|| panic!("`{key}` is not in the {} schema", self.kind))
            .1
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(v) => *v,
            other => panic!("`{key}` is not a float: {other:?}"),
        }
    }

    pub fn opt_float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Count(v) => *v,
            other => panic!("`{key}` is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.count(key) as usize
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.get(key), Value::Bool(true))
    }

    pub fn string(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Str(s) => s,
            other => panic!("`{key}` is not a string: {other:?}"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.count("seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.string("out"))
    }

    /// Resolved config in schema order; `out` is left out so that the hash
    /// does not depend on where results land.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), json!(self.kind.name()));
        for (k, v) in &self.values {
            if *k != "out" {
                map.insert((*k).into(), v.to_json());
            }
        }
        serde_json::Value::Object(map)
    }

    /// TOML that resolves back to this config.
    pub fn to_toml(&self) -> String {
        let mut s = format!("kind = \"{}\"\n", self.kind.name());
        for (k, v) in &self.values {
            let text = match v {
                Value::Float(x) => format!("{x:?}"),
                Value::Count(x) => x.to_string(),
                Value::Bool(x) => x.to_string(),
                Value::Str(x) => format!("{x:?}"),
            };
            s.push_str(&format!("{k} = {text}\n"));
        }
        s
    }
}

/// Text listing of every experiment and its keys.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for kind in Experiment::ALL {
        s.push_str(&format!("{}: {}\n", kind.name(), kind.summary()));
        for p in COMMON.iter().chain(kind.schema()) {
            s.push_str(&format!(
                "    {:<18} {:<40} default {:<12} {}\n",
                p.key,
                p.ty.to_string(),
                p.default,
                p.doc
            ));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(file: &str, sets: &[&str]) -> Overrides {
        Overrides {
            file: Some(file.into()),
            sets: sets.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_float("pi"), Some(PI));
        assert_eq!(parse_float("10pi"), Some(10.0 * PI));
        assert_eq!(parse_float("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_float("-pi"), Some(-PI));
        assert_eq!(parse_float("2.5"), Some(2.5));
        assert_eq!(parse_float("tau"), None);
    }

    #[test]
    fn defaults_and_precedence() {
        let cfg = resolve(Some(Experiment::Crab), &ov("duration = 1\nseed = 7", &["duration=2.5"])).unwrap();
        assert_eq!(cfg.float("duration"), 2.5);
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.usize("terms"), 15);
        assert_eq!(cfg.float("omega_final"), PI);
        assert_eq!(cfg.out_dir(), PathBuf::from("out/crab"));
        let cfg = resolve(
            None,
            &Overrides {
                seed: Some(3),
                ..ov("kind = \"crab\"\nseed = 7", &["seed=5"])
            },
        )
        .unwrap();
        assert_eq!(cfg.seed(), 3);
    }

    #[test]
    fn unknown_keys_and_bad_types_are_rejected() {
        for (file, sets) in [
            ("durration = 1", &[][..]),
            ("duration = \"long\"", &[]),
            ("terms = -1", &[]),
            ("metric = \"best\"", &[]),
            ("", &["nope=1"]),
            ("", &["duration"]),
            ("kind = \"sta\"", &[]),
            ("duration = [1, 2]", &[]),
        ] {
            assert!(
                matches!(resolve(Some(Experiment::Crab), &ov(file, sets)), Err(RunError::Config(_))),
                "{file} {sets:?}"
            );
        }
    }

    #[test]
    fn optional_float() {
        let cfg = resolve(Some(Experiment::Sta), &Overrides::default()).unwrap();
        assert_eq!(cfg.opt_float("transport_omega"), None);
        let cfg = resolve(Some(Experiment::Sta), &ov("transport_omega = 50", &[])).unwrap();
        assert_eq!(cfg.opt_float("transport_omega"), Some(50.0));
    }

    #[test]
    fn toml_round_trip() {
        for kind in Experiment::ALL {
            let cfg = resolve(Some(kind), &ov("seed = 11", &[])).unwrap();
            let again = resolve(None, &ov(&cfg.to_toml(), &[])).unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn listing_covers_every_experiment() {
        let text = list_experiments();
        for kind in Experiment::ALL {
            assert!(text.contains(&format!("{}:", kind.name())));
        }
        assert!(text.contains("allow_negative_b"));
        assert!(text.contains("transport_omega"));
    }
}
