//! Run configuration: a TOML file with `[params]`, `[sweep]` and
//! `[integrator]` tables of flat `key = value` entries, plus command-line
//! overrides. Frequencies are entered as `x_over_2pi` in Hz, rates in 1/s
//! and times in seconds.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use fredkin_core::dynamics::{IntegratorConfig, Method};
use fredkin_core::fredkin::{HamiltonianMode, MemoryFrame, ProtocolSpec};
use fredkin_core::PhysicalParams;
use toml::{Table, Value};

use crate::error::{Result, SimError};
use crate::experiments::{Scenario, ScenarioKind, SweepSpec, Timing};

/// Environment variable naming the directory searched for config files.
pub const CONFIG_DIR_ENV: &str = "FREDKIN_CONFIG_DIR";
/// File loaded from [`CONFIG_DIR_ENV`] when no `--config` is given.
pub const DEFAULT_CONFIG_FILE: &str = "default.toml";

#[derive(Clone, Debug, PartialEq)]
pub struct ParamsConfig {
    pub g1_over_2pi: f64,
    pub g2_over_2pi: f64,
    pub delta1_over_2pi: f64,
    pub delta2_over_2pi: f64,
    pub omega_rabi_over_2pi: f64,
    pub theta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma_ag: f64,
    pub gamma_ea: f64,
    pub gamma_eg: f64,
    pub gamma_phi_a: f64,
    pub gamma_phi_e: f64,
    /// `None` picks the scenario default.
    pub d1: Option<usize>,
    pub d2: Option<usize>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = PhysicalParams::reference(16.0, 1);
        let hz = |w: f64| w / (2.0 * PI);
        Self {
            g1_over_2pi: hz(p.g1),
            g2_over_2pi: hz(p.g2),
            delta1_over_2pi: hz(p.delta1),
            delta2_over_2pi: hz(p.delta2),
            omega_rabi_over_2pi: hz(p.omega_rabi),
            theta: p.theta,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            gamma_ag: p.gamma_ag,
            gamma_ea: p.gamma_ea,
            gamma_eg: p.gamma_eg,
            gamma_phi_a: p.gamma_phi_a,
            gamma_phi_e: p.gamma_phi_e,
            d1: None,
            d2: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioKind,
    pub noon_n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// D = δ₁/g₁ values (key `D_grid`).
    pub detuning_ratios: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub d_grid: Vec<f64>,
    /// D of the inhomogeneity sweep (key `base_D`); `None` picks the scenario default.
    pub base_ratio: Option<f64>,
    pub timing: Timing,
    pub mode: HamiltonianMode,
    pub lossy: bool,
    pub include_pulse: bool,
    pub pulse_lossy: bool,
    pub frame: MemoryFrame,
    pub cutoff_tolerance: f64,
    pub wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = SweepSpec::reference(Scenario::reference(ScenarioKind::Noon));
        let p = ProtocolSpec::default();
        Self {
            scenario: ScenarioKind::Noon,
            noon_n: 5,
            alpha: 1.1,
            beta: 1.1,
            detuning_ratios: s.detuning_ratios,
            c_grid: s.c_grid,
            d_grid: s.d_grid,
            base_ratio: None,
            timing: Timing::Nominal,
            mode: p.mode,
            lossy: p.lossy,
            include_pulse: p.include_pulse,
            pulse_lossy: p.pulse_lossy,
            frame: p.frame,
            cutoff_tolerance: p.cutoff_tolerance,
            wall_time: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Config {
    pub params: ParamsConfig,
    pub sweep: SweepConfig,
    pub integrator: IntegratorConfig,
}

type Getter = fn(&Config) -> String;
type Setter = fn(&mut Config, &Value) -> std::result::Result<(), String>;

pub struct KeySpec {
    pub section: &'static str,
    pub name: &'static str,
    pub unit: &'static str,
    pub help: &'static str,
    get: Getter,
    set: Setter,
}

impl KeySpec {
    pub fn qualified(&self) -> String {
        format!("{}.{}", self.section, self.name)
    }
}

fn float(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {other}")),
    }
}

fn count(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(format!("expected a non-negative integer, got {other}")),
    }
}

fn flag(v: &Value) -> std::result::Result<bool, String> {
    match v {
        Value::Boolean(b) => Ok(*b),
        Value::String(s) => s.parse::<bool>().map_err(|_| format!("expected true or false, got `{s}`")),
        other => Err(format!("expected true or false, got {other}")),
    }
}

fn text(v: &Value) -> std::result::Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        other => Err(format!("expected a string, got {other}")),
    }
}

fn list(v: &Value) -> std::result::Result<Vec<f64>, String> {
    match v {
        Value::Array(a) => a.iter().map(float).collect(),
        other => Ok(vec![float(other)?]),
    }
}

/// Optional value; `"auto"` or `0` selects the default.
fn auto<T>(v: &Value, parse: fn(&Value) -> std::result::Result<T, String>, zero: impl Fn(&T) -> bool) -> std::result::Result<Option<T>, String> {
    if let Value::String(s) = v {
        if s == "auto" {
            return Ok(None);
        }
    }
    let x = parse(v)?;
    Ok(if zero(&x) { None } else { Some(x) })
}

fn show_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(", "))
}

fn show_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "\"auto\"".to_string())
}

fn show_mode(m: HamiltonianMode) -> &'static str {
    match m {
        HamiltonianMode::Full => "full",
        HamiltonianMode::Effective => "effective",
    }
}

pub fn parse_mode(s: &str) -> std::result::Result<HamiltonianMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "full" => Ok(HamiltonianMode::Full),
        "effective" => Ok(HamiltonianMode::Effective),
        _ => Err(format!("unknown mode `{s}` (expected full or effective)")),
    }
}

fn show_frame(f: MemoryFrame) -> &'static str {
    match f {
        MemoryFrame::Lab => "lab",
        MemoryFrame::ParityCompensated => "parity-compensated",
    }
}

fn parse_frame(s: &str) -> std::result::Result<MemoryFrame, String> {
    match s.to_ascii_lowercase().as_str() {
        "lab" => Ok(MemoryFrame::Lab),
        "parity-compensated" => Ok(MemoryFrame::ParityCompensated),
        _ => Err(format!("unknown frame `{s}` (expected lab or parity-compensated)")),
    }
}

macro_rules! float_key {
    ($section:literal, $field:ident, $unit:literal, $help:literal, $($path:ident).+) => {
        KeySpec {
            section: $section,
            name: stringify!($field),
            unit: $unit,
            help: $help,
            get: |c| format!("{:e}", c.$($path).+.$field),
            set: |c, v| {
                c.$($path).+.$field = float(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! bool_key {
    ($section:literal, $field:ident, $help:literal, $($path:ident).+) => {
        KeySpec {
            section: $section,
            name: stringify!($field),
            unit: "bool",
            help: $help,
            get: |c| c.$($path).+.$field.to_string(),
            set: |c, v| {
                c.$($path).+.$field = flag(v)?;
                Ok(())
            },
        }
    };
}

pub static KEYS: &[KeySpec] = &[
    float_key!("params", g1_over_2pi, "Hz", "qutrit coupling to memory 1", params),
    float_key!("params", g2_over_2pi, "Hz", "qutrit coupling to memory 2", params),
    float_key!("params", delta1_over_2pi, "Hz", "detuning of memory 1 (sweeps set it from D)", params),
    float_key!("params", delta2_over_2pi, "Hz", "detuning of memory 2 (sweeps set it from c)", params),
    float_key!("params", omega_rabi_over_2pi, "Hz", "readout pulse Rabi frequency", params),
    float_key!("params", theta, "rad", "readout pulse phase", params),
    float_key!("params", kappa1, "1/s", "memory 1 decay rate", params),
    float_key!("params", kappa2, "1/s", "memory 2 decay rate", params),
    float_key!("params", gamma_ag, "1/s", "qutrit relaxation a -> g", params),
    float_key!("params", gamma_ea, "1/s", "qutrit relaxation e -> a", params),
    float_key!("params", gamma_eg, "1/s", "qutrit relaxation e -> g", params),
    float_key!("params", gamma_phi_a, "1/s", "dephasing of level a", params),
    float_key!("params", gamma_phi_e, "1/s", "dephasing of level e", params),
    KeySpec {
        section: "params",
        name: "d1",
        unit: "levels",
        help: "Fock cutoff of memory 1, or \"auto\"",
        get: |c| show_opt(&c.params.d1),
        set: |c, v| {
            c.params.d1 = auto(v, count, |n| *n == 0)?;
            Ok(())
        },
    },
    KeySpec {
        section: "params",
        name: "d2",
        unit: "levels",
        help: "Fock cutoff of memory 2, or \"auto\"",
        get: |c| show_opt(&c.params.d2),
        set: |c, v| {
            c.params.d2 = auto(v, count, |n| *n == 0)?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "scenario",
        unit: "noon|coherent|cat",
        help: "input memory states",
        get: |c| format!("\"{}\"", c.sweep.scenario),
        set: |c, v| {
            c.sweep.scenario = text(v)?.parse()?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "noon_n",
        unit: "photons",
        help: "N of the NOON scenario",
        get: |c| c.sweep.noon_n.to_string(),
        set: |c, v| {
            c.sweep.noon_n = count(v)?;
            Ok(())
        },
    },
    float_key!("sweep", alpha, "1", "coherent amplitude in memory 1", sweep),
    float_key!("sweep", beta, "1", "coherent amplitude in memory 2", sweep),
    KeySpec {
        section: "sweep",
        name: "D_grid",
        unit: "1",
        help: "values of D = delta1/g1 for sweep-d",
        get: |c| show_list(&c.sweep.detuning_ratios),
        set: |c, v| {
            c.sweep.detuning_ratios = list(v)?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "c_grid",
        unit: "1",
        help: "values of c = delta2/delta1 for sweep-cd",
        get: |c| show_list(&c.sweep.c_grid),
        set: |c, v| {
            c.sweep.c_grid = list(v)?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "d_grid",
        unit: "1",
        help: "values of d = g2/g1 for sweep-cd",
        get: |c| show_list(&c.sweep.d_grid),
        set: |c, v| {
            c.sweep.d_grid = list(v)?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "base_D",
        unit: "1",
        help: "D held fixed by sweep-cd, or \"auto\" (16, 10, 22)",
        get: |c| show_opt(&c.sweep.base_ratio.map(|x| format!("{x:e}"))),
        set: |c, v| {
            c.sweep.base_ratio = auto(v, float, |x| *x == 0.0)?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "timing",
        unit: "nominal|actual",
        help: "gate time from the symmetric or the actual coupling",
        get: |c| format!("\"{}\"", c.sweep.timing),
        set: |c, v| {
            c.sweep.timing = text(v)?.parse()?;
            Ok(())
        },
    },
    KeySpec {
        section: "sweep",
        name: "mode",
        unit: "full|effective",
        help: "Hamiltonian used during the gate",
        get: |c| format!("\"{}\"", show_mode(c.sweep.mode)),
        set: |c, v| {
            c.sweep.mode = parse_mode(&text(v)?)?;
            Ok(())
        },
    },
    bool_key!("sweep", lossy, "apply the loss channels during the gate", sweep),
    bool_key!("sweep", include_pulse, "apply the readout pulse after the gate", sweep),
    bool_key!("sweep", pulse_lossy, "apply the loss channels during the pulse", sweep),
    KeySpec {
        section: "sweep",
        name: "frame",
        unit: "lab|parity-compensated",
        help: "reference frame of memory 2",
        get: |c| format!("\"{}\"", show_frame(c.sweep.frame)),
        set: |c, v| {
            c.sweep.frame = parse_frame(&text(v)?)?;
            Ok(())
        },
    },
    float_key!("sweep", cutoff_tolerance, "1", "allowed growth of the top Fock population", sweep),
    bool_key!("sweep", wall_time, "add a wall_time_s column to the CSV", sweep),
    KeySpec {
        section: "integrator",
        name: "dt",
        unit: "s",
        help: "time step, or \"auto\"",
        get: |c| show_opt(&c.integrator.dt.map(|x| format!("{x:e}"))),
        set: |c, v| {
            c.integrator.dt = auto(v, float, |x| *x == 0.0)?;
            Ok(())
        },
    },
    KeySpec {
        section: "integrator",
        name: "method",
        unit: "rk4|adaptive",
        help: "fixed-step RK4 or Dormand-Prince 5(4)",
        get: |c| {
            match c.integrator.method {
                Method::Rk4 => "\"rk4\"",
                Method::Adaptive => "\"adaptive\"",
            }
            .to_string()
        },
        set: |c, v| {
            c.integrator.method = match text(v)?.to_ascii_lowercase().as_str() {
                "rk4" => Method::Rk4,
                "adaptive" => Method::Adaptive,
                s => return Err(format!("unknown method `{s}` (expected rk4 or adaptive)")),
            };
            Ok(())
        },
    },
    float_key!("integrator", tolerance, "1", "allowed norm or trace drift", integrator),
    KeySpec {
        section: "integrator",
        name: "steps_per_period",
        unit: "steps",
        help: "steps per period of the fastest frequency",
        get: |c| c.integrator.steps_per_period.to_string(),
        set: |c, v| {
            c.integrator.steps_per_period = count(v)?;
            Ok(())
        },
    },
    KeySpec {
        section: "integrator",
        name: "max_steps",
        unit: "steps",
        help: "step budget per evolution",
        get: |c| c.integrator.max_steps.to_string(),
        set: |c, v| {
            c.integrator.max_steps = count(v)?;
            Ok(())
        },
    },
    float_key!("integrator", rtol, "1", "relative tolerance of the adaptive method", integrator),
    float_key!("integrator", atol, "1", "absolute tolerance of the adaptive method", integrator),
    bool_key!("integrator", check_positivity, "reject final states with negative eigenvalues", integrator),
];

fn valid_keys() -> String {
    KEYS.iter().map(|k| k.qualified()).collect::<Vec<_>>().join(", ")
}

fn lookup(key: &str) -> Result<&'static KeySpec> {
    let found: Vec<&KeySpec> = match key.split_once('.') {
        Some((section, name)) => KEYS.iter().filter(|k| k.section == section && k.name == name).collect(),
        None => KEYS.iter().filter(|k| k.name == key).collect(),
    };
    match found.as_slice() {
        [one] => Ok(one),
        _ => Err(SimError::Config(format!("unknown key `{key}`; valid keys: {}", valid_keys()))),
    }
}

/// Parses the right-hand side of `key=value`; bare words become strings.
fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &Value) -> Result<()> {
        let spec = lookup(key)?;
        (spec.set)(self, value).map_err(|e| SimError::Config(format!("{}: {e}", spec.qualified())))
    }

    pub fn get(&self, key: &str) -> Result<String> {
        Ok((lookup(key)?.get)(self))
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(key.trim(), &parse_value(value))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e| SimError::Config(format!("{e}")))?;
        let mut config = Config::default();
        for (name, value) in &table {
            match value {
                Value::Table(entries) => {
                    if !KEYS.iter().any(|k| k.section == name) {
                        return Err(SimError::Config(format!(
                            "unknown section [{name}]; expected [params], [sweep] or [integrator]"
                        )));
                    }
                    for (key, v) in entries {
                        config.set(&format!("{name}.{key}"), v)?;
                    }
                }
                v => config.set(name, v)?,
            }
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Effective configuration as `section.key = value` lines.
    pub fn echo(&self) -> Vec<String> {
        KEYS.iter().map(|k| format!("{} = {}", k.qualified(), (k.get)(self))).collect()
    }

    pub fn scenario(&self) -> Scenario {
        let s = &self.sweep;
        match s.scenario {
            ScenarioKind::Noon => Scenario::Noon { n: s.noon_n },
            ScenarioKind::Coherent => Scenario::Coherent {
                alpha: s.alpha,
                beta: s.beta,
            },
            ScenarioKind::Cat => Scenario::Cat {
                alpha: s.alpha,
                beta: s.beta,
            },
        }
    }

    /// Angular-unit parameters with the scenario's default cutoffs filled in.
    pub fn physical_params(&self) -> PhysicalParams {
        let p = &self.params;
        let w = |hz: f64| 2.0 * PI * hz;
        let cutoff = self.scenario().default_cutoff();
        PhysicalParams {
            g1: w(p.g1_over_2pi),
            g2: w(p.g2_over_2pi),
            delta1: w(p.delta1_over_2pi),
            delta2: w(p.delta2_over_2pi),
            omega_rabi: w(p.omega_rabi_over_2pi),
            theta: p.theta,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            gamma_ag: p.gamma_ag,
            gamma_ea: p.gamma_ea,
            gamma_eg: p.gamma_eg,
            gamma_phi_a: p.gamma_phi_a,
            gamma_phi_e: p.gamma_phi_e,
            d1: p.d1.unwrap_or(cutoff),
            d2: p.d2.unwrap_or(cutoff),
        }
    }

    pub fn protocol(&self) -> ProtocolSpec {
        let s = &self.sweep;
        ProtocolSpec {
            mode: s.mode,
            lossy: s.lossy,
            include_pulse: s.include_pulse,
            pulse_lossy: s.pulse_lossy,
            frame: s.frame,
            gate_time: None,
            integrator: self.integrator.clone(),
            cutoff_tolerance: s.cutoff_tolerance,
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        let scenario = self.scenario();
        let mut spec = SweepSpec::reference(scenario.clone());
        spec.base = self.physical_params();
        spec.detuning_ratios = self.sweep.detuning_ratios.clone();
        spec.c_grid = self.sweep.c_grid.clone();
        spec.d_grid = self.sweep.d_grid.clone();
        spec.base_ratio = self.sweep.base_ratio.unwrap_or_else(|| scenario.default_base_ratio());
        spec.timing = self.sweep.timing;
        spec.protocol = self.protocol();
        spec.wall_time = self.sweep.wall_time;
        spec
    }
}

/// Key reference for `--help`.
pub fn keys_help() -> String {
    let mut out = String::from("Config keys (TOML tables [params], [sweep], [integrator]; `--set section.key=value`):\n");
    for k in KEYS {
        let _ = writeln!(out, "  {:<34} [{}] {}", k.qualified(), k.unit, k.help);
    }
    let _ = write!(
        out,
        "\nIf --config is omitted, ${CONFIG_DIR_ENV}/{DEFAULT_CONFIG_FILE} is loaded when present;\nrelative --config paths are also looked up in ${CONFIG_DIR_ENV}."
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let c = Config::default();
        let p = c.physical_params();
        let r = PhysicalParams::reference(16.0, 6);
        assert!((p.g1 - r.g1).abs() < 1e-6 * r.g1);
        assert!((p.delta1 - r.delta1).abs() < 1e-6 * r.delta1);
        assert_eq!((p.d1, p.d2), (6, 6));
        assert_eq!(p.kappa1, r.kappa1);
    }

    #[test]
    fn parses_sections_and_overrides() {
        let mut c = Config::from_toml_str(
            "[params]\ng1_over_2pi = 50e6\nd1 = 8\n[sweep]\nscenario = \"cat\"\nD_grid = [10, 20]\n[integrator]\ndt = 1e-12\n",
        )
        .unwrap();
        assert_eq!(c.params.g1_over_2pi, 50e6);
        assert_eq!(c.params.d1, Some(8));
        assert_eq!(c.sweep.scenario, ScenarioKind::Cat);
        assert_eq!(c.sweep.detuning_ratios, vec![10.0, 20.0]);
        assert_eq!(c.integrator.dt, Some(1e-12));
        c.apply_override("sweep.scenario=coherent").unwrap();
        c.apply_override("lossy=false").unwrap();
        c.apply_override("d2 = 9").unwrap();
        c.apply_override("dt=auto").unwrap();
        assert_eq!(c.sweep.scenario, ScenarioKind::Coherent);
        assert!(!c.sweep.lossy);
        assert_eq!(c.params.d2, Some(9));
        assert_eq!(c.integrator.dt, None);
    }

    #[test]
    fn unknown_keys_list_valid_ones() {
        let err = Config::default().apply_override("g3_over_2pi=1").unwrap_err();
        let SimError::Config(msg) = err else { panic!() };
        assert!(msg.contains("g3_over_2pi") && msg.contains("params.g1_over_2pi"));
        assert!(Config::from_toml_str("[physics]\nx = 1\n").is_err());
        assert!(Config::default().apply_override("lossy=maybe").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = Config::default();
        c.apply_override("alpha=0.7").unwrap();
        c.apply_override("frame=parity-compensated").unwrap();
        c.apply_override("d_grid=[0.97, 1.05]").unwrap();
        let mut text = String::new();
        let mut section = "";
        for k in KEYS {
            if k.section != section {
                section = k.section;
                text.push_str(&format!("[{section}]\n"));
            }
            text.push_str(&format!("{} = {}\n", k.name, (k.get)(&c)));
        }
        assert_eq!(Config::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn every_key_appears_in_help() {
        let help = keys_help();
        for k in KEYS {
            assert!(help.contains(&k.qualified()));
        }
    }
}
