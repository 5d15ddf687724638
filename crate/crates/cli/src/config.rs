//! Scenario files.
//!
//! ```toml
//! scenario = "rabi-qed"
//! output = "rabi_qed.csv"
//!
//! [params]
//! rabi_khz = 25.0     # cyclic kHz, converted to rad/s
//! tau = 0.5e-6        # seconds
//!
//! [grid]
//! t_start = 0.0
//! t_stop = 200e-6
//! n_points = 201
//!
//! [mc]                # optional
//! n_samples = 100000
//! seed = 0xDEC04E5E
//! ```
//!
//! Parameters without a suffix are angular frequencies (rad/s), seconds or
//! dimensionless numbers. A `_khz` suffix marks a cyclic frequency in kHz.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use gamma_decoherence::monte_carlo::{MCSettings, DEFAULT_SEED};
use toml::{Table, Value};

/// `2π·10³`: cyclic kHz to rad/s.
pub const KHZ_TO_RAD_S: f64 = 2.0 * std::f64::consts::PI * 1e3;
const KHZ_SUFFIX: &str = "_khz";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    RabiQed,
    Ramsey,
    Ion,
    Interrupted,
    McCheck,
    MasterEq,
    GammaDiag,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::RabiQed,
        Scenario::Ramsey,
        Scenario::Ion,
        Scenario::Interrupted,
        Scenario::McCheck,
        Scenario::MasterEq,
        Scenario::GammaDiag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RabiQed => "rabi-qed",
            Scenario::Ramsey => "ramsey",
            Scenario::Ion => "ion",
            Scenario::Interrupted => "interrupted",
            Scenario::McCheck => "mc-check",
            Scenario::MasterEq => "master-eq",
            Scenario::GammaDiag => "gamma-diag",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::RabiQed => {
                "vacuum Rabi oscillation of an atom in a cavity, ideal and averaged"
            }
            Scenario::Ramsey => {
                "Ramsey fringes versus detuning: exact, averaged and Gaussian envelope"
            }
            Scenario::Ion => {
                "blue-sideband oscillation of a trapped ion plus the Fock-number scaling table"
            }
            Scenario::Interrupted => {
                "staircase of periodically interrupted evolution against its linear approximation"
            }
            Scenario::McCheck => {
                "sampled phase averages against the closed-form averaged propagator"
            }
            Scenario::MasterEq => "second-order master equation integrated for a driven qubit",
            Scenario::GammaDiag => "density and distribution function of the evolution-time law",
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            Scenario::Ramsey => Axis::Detuning,
            _ => Axis::Time,
        }
    }

    fn schema(self) -> Schema {
        use ParamKind::*;
        let (keys, groups): (&[(&str, ParamKind)], &[&[&str]]) = match self {
            Scenario::RabiQed => (
                &[("rabi", Frequency), ("tau", Plain)],
                &[&["rabi"], &["tau"]],
            ),
            Scenario::Ramsey => (
                &[
                    ("dispersive_shift", Frequency),
                    ("waist_ratio", Plain),
                    ("flight_time", Plain),
                    ("mean_photon", Plain),
                    ("tau", Plain),
                ],
                &[
                    &["dispersive_shift"],
                    &["waist_ratio"],
                    &["flight_time"],
                    &["tau"],
                ],
            ),
            Scenario::Ion => (
                &[
                    ("lamb_dicke", Plain),
                    ("omega0", Frequency),
                    ("base_rabi", Frequency),
                    ("tau", Plain),
                    ("gamma0", Plain),
                    ("fock_n", Integer),
                    ("n_max", Integer),
                ],
                &[
                    &["lamb_dicke"],
                    &["omega0", "base_rabi"],
                    &["tau", "gamma0"],
                ],
            ),
            Scenario::Interrupted => (&[("tau1", Plain), ("tau2", Plain)], &[&["tau1"], &["tau2"]]),
            Scenario::McCheck => (
                &[
                    ("omega", Frequency),
                    ("tau", Plain),
                    ("tau1", Plain),
                    ("tau2", Plain),
                ],
                &[&["omega"], &["tau", "tau2"]],
            ),
            Scenario::MasterEq => (
                &[
                    ("splitting", Frequency),
                    ("drive", Frequency),
                    ("tau", Plain),
                    ("dt", Plain),
                ],
                &[&["splitting"], &["tau"]],
            ),
            Scenario::GammaDiag => (
                &[
                    ("t", Plain),
                    ("tau", Plain),
                    ("tau1", Plain),
                    ("tau2", Plain),
                    ("omega", Frequency),
                ],
                &[&["t"], &["tau", "tau2"]],
            ),
        };
        Schema { keys, groups }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                format!(
                    "unknown scenario `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    Plain,
    /// Angular frequency; also accepted in cyclic kHz.
    Frequency,
    Integer,
}

struct Schema {
    keys: &'static [(&'static str, ParamKind)],
    /// Each group needs exactly one of its keys.
    groups: &'static [&'static [&'static str]],
}

/// One problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `t_start`, `t_stop` in seconds.
    Time,
    /// `delta_start`, `delta_stop` in rad/s.
    Detuning,
}

impl Axis {
    fn prefix(self) -> &'static str {
        match self {
            Axis::Time => "t",
            Axis::Detuning => "delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// A validated scenario with parameters in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Parameters keyed by base name, `_khz` values already in rad/s.
    pub params: BTreeMap<String, f64>,
    pub grid: Grid,
    pub mc: Option<MCSettings>,
    /// CSV file name, relative to the output directory.
    pub output: String,
}

impl ScenarioConfig {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// Parses and validates, reporting every problem found.
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let table: Table = match text.parse() {
            Ok(t) => t,
            Err(e) => {
                return Err(vec![Diagnostic::new(
                    "<file>",
                    format!("not valid TOML: {e}"),
                )])
            }
        };
        let mut diags = Vec::new();
        let config = parse_table(&table, &mut diags);
        match config {
            Some(c) if diags.is_empty() => {
                let model_diags = crate::scenarios::check(&c);
                if model_diags.is_empty() {
                    Ok(c)
                } else {
                    Err(model_diags)
                }
            }
            _ => Err(diags),
        }
    }

    /// Replaces the seed, or the sample count, of the Monte Carlo section.
    /// A sample count adds a section when none is present.
    pub fn override_mc(
        &mut self,
        seed: Option<u64>,
        samples: Option<usize>,
    ) -> Result<(), Diagnostic> {
        if seed.is_none() && samples.is_none() {
            return Ok(());
        }
        let base = match (self.mc, samples) {
            (Some(m), _) => m,
            (None, Some(n)) => MCSettings::with_samples(n, DEFAULT_SEED)
                .map_err(|e| Diagnostic::new("--samples", e.to_string()))?,
            (None, None) => return Ok(()),
        };
        let mc = MCSettings::new(
            samples.unwrap_or(base.n_samples()),
            seed.unwrap_or(base.seed()),
            base.batch_size(),
        )
        .map_err(|e| Diagnostic::new("mc", e.to_string()))?;
        self.mc = Some(mc);
        Ok(())
    }
}

/// All diagnostics for a scenario file; empty when it is valid.
pub fn validate(text: &str) -> Vec<Diagnostic> {
    ScenarioConfig::parse(text).err().unwrap_or_default()
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_table(table: &Table, diags: &mut Vec<Diagnostic>) -> Option<ScenarioConfig> {
    for key in table.keys() {
        if !["scenario", "output", "params", "grid", "mc"].contains(&key.as_str()) {
            diags.push(Diagnostic::new(key.clone(), "unknown top-level key"));
        }
    }
    let scenario = match table.get("scenario") {
        None => {
            diags.push(Diagnostic::new("scenario", "missing"));
            None
        }
        Some(Value::String(s)) => match s.parse::<Scenario>() {
            Ok(sc) => Some(sc),
            Err(e) => {
                diags.push(Diagnostic::new("scenario", e));
                None
            }
        },
        Some(_) => {
            diags.push(Diagnostic::new("scenario", "must be a string"));
            None
        }
    };
    let output = match table.get("output") {
        None => scenario.map(|s| format!("{}.csv", s.name().replace('-', "_"))),
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(_) => {
            diags.push(Diagnostic::new("output", "must be a non-empty string"));
            None
        }
    };
    let params = scenario.and_then(|sc| parse_params(sc, table.get("params"), diags));
    let grid = scenario.and_then(|sc| parse_grid(sc.axis(), table.get("grid"), diags));
    let mc = parse_mc(table.get("mc"), diags);
    Some(ScenarioConfig {
        scenario: scenario?,
        params: params?,
        grid: grid?,
        mc: mc?,
        output: output?,
    })
}

fn parse_params(
    scenario: Scenario,
    value: Option<&Value>,
    diags: &mut Vec<Diagnostic>,
) -> Option<BTreeMap<String, f64>> {
    let empty = Table::new();
    let table = match value {
        None => &empty,
        Some(Value::Table(t)) => t,
        Some(_) => {
            diags.push(Diagnostic::new("params", "must be a table"));
            return None;
        }
    };
    let schema = scenario.schema();
    let start = diags.len();
    let mut out = BTreeMap::new();
    for (raw_key, v) in table {
        let key_name = format!("params.{raw_key}");
        let (base, khz) = match raw_key.strip_suffix(KHZ_SUFFIX) {
            Some(b) => (b, true),
            None => (raw_key.as_str(), false),
        };
        let Some(&(_, kind)) = schema.keys.iter().find(|(k, _)| *k == base) else {
            diags.push(Diagnostic::new(
                key_name,
                format!("unknown parameter for scenario {scenario}"),
            ));
            continue;
        };
        if khz && kind != ParamKind::Frequency {
            diags.push(Diagnostic::new(
                key_name,
                format!("`{base}` is not a frequency; drop the `_khz` suffix"),
            ));
            continue;
        }
        let Some(x) = as_number(v) else {
            diags.push(Diagnostic::new(key_name, "must be a number"));
            continue;
        };
        if !x.is_finite() {
            diags.push(Diagnostic::new(key_name, "must be finite"));
            continue;
        }
        if kind == ParamKind::Integer && (x < 0.0 || x.fract() != 0.0) {
            diags.push(Diagnostic::new(key_name, "must be a non-negative integer"));
            continue;
        }
        if out.contains_key(base) {
            diags.push(Diagnostic::new(
                key_name,
                format!("`{base}` given both in rad/s and in kHz"),
            ));
            continue;
        }
        out.insert(base.to_string(), if khz { x * KHZ_TO_RAD_S } else { x });
    }
    for group in schema.groups {
        let present: Vec<&str> = group
            .iter()
            .copied()
            .filter(|k| out.contains_key(*k))
            .collect();
        match present.len() {
            0 => diags.push(Diagnostic::new(
                format!("params.{}", group[0]),
                format!(
                    "missing required parameter {}",
                    group
                        .iter()
                        .map(|k| format!("`{k}`"))
                        .collect::<Vec<_>>()
                        .join(" or ")
                ),
            )),
            1 => {}
            _ => diags.push(Diagnostic::new(
                format!("params.{}", present[1]),
                format!("give only one of {}", present.join(", ")),
            )),
        }
    }
    (diags.len() == start).then_some(out)
}

fn parse_grid(axis: Axis, value: Option<&Value>, diags: &mut Vec<Diagnostic>) -> Option<Grid> {
    let Some(value) = value else {
        diags.push(Diagnostic::new("grid", "missing [grid] section"));
        return None;
    };
    let Value::Table(table) = value else {
        diags.push(Diagnostic::new("grid", "must be a table"));
        return None;
    };
    let start_diags = diags.len();
    let p = axis.prefix();
    let (start_key, stop_key) = (format!("{p}_start"), format!("{p}_stop"));
    for key in table.keys() {
        if key != &start_key && key != &stop_key && key != "n_points" {
            diags.push(Diagnostic::new(
                format!("grid.{key}"),
                format!("unknown key; this scenario expects {start_key}, {stop_key}, n_points"),
            ));
        }
    }
    let mut number = |key: &str| -> Option<f64> {
        match table.get(key).map(as_number) {
            None => {
                diags.push(Diagnostic::new(format!("grid.{key}"), "missing"));
                None
            }
            Some(None) => {
                diags.push(Diagnostic::new(format!("grid.{key}"), "must be a number"));
                None
            }
            Some(Some(x)) if !x.is_finite() => {
                diags.push(Diagnostic::new(format!("grid.{key}"), "must be finite"));
                None
            }
            Some(Some(x)) => Some(x),
        }
    };
    let start = number(&start_key);
    let stop = number(&stop_key);
    let n_points = match table.get("n_points") {
        None => {
            diags.push(Diagnostic::new("grid.n_points", "missing"));
            None
        }
        Some(Value::Integer(n)) if *n >= 2 => Some(*n as usize),
        Some(Value::Integer(n)) => {
            diags.push(Diagnostic::new(
                "grid.n_points",
                format!("must be at least 2, got {n}"),
            ));
            None
        }
        Some(_) => {
            diags.push(Diagnostic::new("grid.n_points", "must be an integer"));
            None
        }
    };
    if let (Some(a), Some(b)) = (start, stop) {
        if a >= b {
            diags.push(Diagnostic::new(
                format!("grid.{start_key}"),
                format!("must be below {stop_key} ({a} >= {b})"),
            ));
        }
        if axis == Axis::Time && a < 0.0 {
            diags.push(Diagnostic::new(
                format!("grid.{start_key}"),
                "times must be non-negative",
            ));
        }
    }
    if diags.len() > start_diags {
        return None;
    }
    Some(Grid {
        axis,
        start: start?,
        stop: stop?,
        n_points: n_points?,
    })
}

/// `Some(None)` when the section is absent, `None` on error.
fn parse_mc(value: Option<&Value>, diags: &mut Vec<Diagnostic>) -> Option<Option<MCSettings>> {
    let Some(value) = value else {
        return Some(None);
    };
    let Value::Table(table) = value else {
        diags.push(Diagnostic::new("mc", "must be a table"));
        return None;
    };
    let start = diags.len();
    let mut int = |key: &str, default: Option<i64>, min: i64| -> Option<i64> {
        match table.get(key) {
            None if default.is_some() => default,
            None => {
                diags.push(Diagnostic::new(format!("mc.{key}"), "missing"));
                None
            }
            Some(Value::Integer(n)) if *n >= min => Some(*n),
            Some(_) => {
                diags.push(Diagnostic::new(
                    format!("mc.{key}"),
                    format!("must be an integer >= {min}"),
                ));
                None
            }
        }
    };
    let n_samples = int("n_samples", None, 1);
    let seed = int("seed", Some(DEFAULT_SEED as i64), 0);
    let batch = int("batch_size", Some(1 << 16), 1);
    for key in table.keys() {
        if !["n_samples", "seed", "batch_size"].contains(&key.as_str()) {
            diags.push(Diagnostic::new(format!("mc.{key}"), "unknown key"));
        }
    }
    if diags.len() > start {
        return None;
    }
    match MCSettings::new(n_samples? as usize, seed? as u64, batch? as usize) {
        Ok(m) => Some(Some(m)),
        Err(e) => {
            diags.push(Diagnostic::new("mc", e.to_string()));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RABI: &str = r#"
scenario = "rabi-qed"
[params]
rabi_khz = 25.0
tau = 0.5e-6
[grid]
t_start = 0.0
t_stop = 200e-6
n_points = 201
"#;

    #[test]
    fn parses_and_converts_khz() {
        let c = ScenarioConfig::parse(RABI).unwrap();
        assert_eq!(c.scenario, Scenario::RabiQed);
        assert_eq!(c.param("rabi"), Some(25.0 * KHZ_TO_RAD_S));
        assert_eq!(c.output, "rabi_qed.csv");
        assert_eq!(c.grid.points().len(), 201);
        assert_eq!(*c.grid.points().last().unwrap(), 200e-6);
        assert!(c.mc.is_none());
    }

    #[test]
    fn khz_conversion_is_exact() {
        for x in [1.0, 25.0, 94.0, 0.123] {
            let text = RABI.replace("rabi_khz = 25.0", &format!("rabi_khz = {x:?}"));
            let c = ScenarioConfig::parse(&text).unwrap();
            assert_eq!(c.param("rabi"), Some(x * KHZ_TO_RAD_S));
            let hz = c.param("rabi").unwrap() / (2.0 * std::f64::consts::PI);
            assert!((hz / (x * 1e3) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_tau_is_one_diagnostic() {
        let d = validate(&RABI.replace("tau = 0.5e-6", ""));
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].key.contains("tau"));
    }

    #[test]
    fn negative_points_is_one_diagnostic() {
        let d = validate(&RABI.replace("n_points = 201", "n_points = -5"));
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].key, "grid.n_points");
    }

    #[test]
    fn collects_every_problem() {
        let text = r#"
scenario = "rabi-qed"
colour = "blue"
[params]
rabi = 1e5
rabi_khz = 25.0
tau_us = 3
[grid]
t_start = 1.0
t_stop = 0.5
n_points = 1
[mc]
n_samples = 0
"#;
        let d = validate(text);
        let keys: Vec<&str> = d.iter().map(|d| d.key.as_str()).collect();
        for k in [
            "colour",
            "params.rabi_khz",
            "params.tau_us",
            "params.tau",
            "grid.t_start",
            "grid.n_points",
            "mc.n_samples",
        ] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn unknown_scenario() {
        let d = validate("scenario = \"laser\"");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].key, "scenario");
    }

    #[test]
    fn mc_overrides() {
        let mut c = ScenarioConfig::parse(RABI).unwrap();
        c.override_mc(Some(9), None).unwrap();
        assert!(c.mc.is_none());
        c.override_mc(None, Some(1000)).unwrap();
        assert_eq!(c.mc.unwrap().n_samples(), 1000);
        assert_eq!(c.mc.unwrap().seed(), DEFAULT_SEED);
        c.override_mc(Some(9), None).unwrap();
        assert_eq!(c.mc.unwrap().seed(), 9);
    }
}
