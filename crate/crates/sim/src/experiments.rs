//! Fidelity sweeps over the detuning ratio D = δ/g and over the
//! inhomogeneity factors (c, d), with deterministic CSV output.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use fredkin_core::fredkin::{run_protocol, ControlAmplitudes, InitialCase, MemoryInput, ProtocolResult, ProtocolSpec};
use fredkin_core::model::derive;
use fredkin_core::{PhysicalParams, C64};
use rayon::prelude::*;

use crate::error::{Result, SimError};

/// Allowed range for D = δ/g.
pub const DETUNING_RATIO_RANGE: (f64, f64) = (1.0, 500.0);
/// Allowed range for the inhomogeneity factors c and d.
pub const INHOMOGENEITY_RANGE: (f64, f64) = (0.5, 1.5);

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// `|N,0⟩` in, NOON out.
    Noon { n: usize },
    /// `|α⟩₁|−β⟩₂` in, entangled coherent state out.
    Coherent { alpha: f64, beta: f64 },
    /// Even cat `|ψ_e(α)⟩₁` and odd cat `|φ_o(β)⟩₂` in, entangled cat state out.
    Cat { alpha: f64, beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Noon,
    Coherent,
    Cat,
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "noon" => Ok(ScenarioKind::Noon),
            "coherent" | "ent-coherent" => Ok(ScenarioKind::Coherent),
            "cat" | "ent-cat" => Ok(ScenarioKind::Cat),
            _ => Err(format!("unknown scenario `{s}` (expected noon, coherent or cat)")),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Noon => "noon",
            ScenarioKind::Coherent => "coherent",
            ScenarioKind::Cat => "cat",
        })
    }
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::Noon { .. } => ScenarioKind::Noon,
            Scenario::Coherent { .. } => ScenarioKind::Coherent,
            Scenario::Cat { .. } => ScenarioKind::Cat,
        }
    }

    /// N = 5 for NOON, α = β = 1.1 otherwise.
    pub fn reference(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Noon => Scenario::Noon { n: 5 },
            ScenarioKind::Coherent => Scenario::Coherent { alpha: 1.1, beta: 1.1 },
            ScenarioKind::Cat => Scenario::Cat { alpha: 1.1, beta: 1.1 },
        }
    }

    /// N + 1 for NOON; 12 for the coherent-state inputs.
    pub fn default_cutoff(&self) -> usize {
        match self {
            Scenario::Noon { n } => n + 1,
            _ => 12,
        }
    }

    /// D of the inhomogeneity panels: 16, 10 and 22.
    pub fn default_base_ratio(&self) -> f64 {
        match self {
            Scenario::Noon { .. } => 16.0,
            Scenario::Coherent { .. } => 10.0,
            Scenario::Cat { .. } => 22.0,
        }
    }

    pub fn memory_input(&self) -> MemoryInput {
        match *self {
            Scenario::Noon { n } => MemoryInput::Noon(n),
            Scenario::Coherent { alpha, beta } => MemoryInput::Coherent {
                alpha: C64::new(alpha, 0.0),
                beta: C64::new(beta, 0.0),
            },
            Scenario::Cat { alpha, beta } => MemoryInput::Cat { alpha, beta },
        }
    }

    pub fn initial_case(&self, control: ControlAmplitudes) -> InitialCase {
        InitialCase::new(self.memory_input(), control)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind().fmt(f)
    }
}

/// Gate duration used when the memories are inhomogeneous.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Timing {
    /// `π/(2λ)` of the symmetric parameters (c = d = 1).
    Nominal,
    /// `π/(2λ)` of the actual, asymmetric parameters.
    Actual,
}

impl FromStr for Timing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(Timing::Nominal),
            "actual" => Ok(Timing::Actual),
            _ => Err(format!("unknown timing `{s}` (expected nominal or actual)")),
        }
    }
}

impl fmt::Display for Timing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timing::Nominal => "nominal",
            Timing::Actual => "actual",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    /// Couplings, rates and cutoffs; δ₁, δ₂ and g₂ are set per grid point.
    pub base: PhysicalParams,
    /// D = δ₁/g₁ values for the detuning sweep.
    pub detuning_ratios: Vec<f64>,
    /// δ₂ = c·δ₁.
    pub c_grid: Vec<f64>,
    /// g₂ = d·g₁.
    pub d_grid: Vec<f64>,
    /// D held fixed during the inhomogeneity sweep.
    pub base_ratio: f64,
    pub timing: Timing,
    pub control: ControlAmplitudes,
    pub protocol: ProtocolSpec,
    /// Record the wall time of every point (makes the output run-dependent).
    pub wall_time: bool,
}

impl SweepSpec {
    /// Reference parameters and the default grids for a scenario.
    pub fn reference(scenario: Scenario) -> Self {
        let cutoff = scenario.default_cutoff();
        let base_ratio = scenario.default_base_ratio();
        Self {
            base: PhysicalParams::reference(base_ratio, cutoff),
            detuning_ratios: vec![5.0, 8.0, 10.0, 13.0, 16.0, 22.0, 30.0, 40.0],
            c_grid: linspace(0.9995, 1.0005, 11),
            d_grid: linspace(0.95, 1.05, 11),
            base_ratio,
            timing: Timing::Nominal,
            control: ControlAmplitudes::balanced(),
            protocol: ProtocolSpec::default(),
            wall_time: false,
            scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("D_grid", &self.detuning_ratios, DETUNING_RATIO_RANGE)?;
        check_grid("c_grid", &self.c_grid, INHOMOGENEITY_RANGE)?;
        check_grid("d_grid", &self.d_grid, INHOMOGENEITY_RANGE)?;
        check_grid("base_D", &[self.base_ratio], DETUNING_RATIO_RANGE)?;
        self.base.validate()?;
        Ok(())
    }

    /// Inhomogeneity of the base parameters, `(δ₂/δ₁, g₂/g₁)`.
    pub fn base_inhomogeneity(&self) -> (f64, f64) {
        (self.base.delta2 / self.base.delta1, self.base.g2 / self.base.g1)
    }

    /// Parameters at one grid point.
    pub fn point_params(&self, ratio: f64, c: f64, d: f64) -> PhysicalParams {
        PhysicalParams {
            delta1: ratio * self.base.g1,
            ..self.base.clone()
        }
        .with_inhomogeneity(c, d)
    }
}

fn check_grid(key: &str, grid: &[f64], (lo, hi): (f64, f64)) -> Result<()> {
    if grid.is_empty() {
        return Err(SimError::Config(format!("{key} is empty")));
    }
    for &x in grid {
        if !(lo..=hi).contains(&x) {
            return Err(SimError::Config(format!("{key} value {x} lies outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    /// D = δ₁/g₁.
    pub big_d: f64,
    pub c: f64,
    pub d: f64,
    pub delta_over_2pi_hz: f64,
    pub lambda_over_2pi_hz: f64,
    pub t_swap_s: f64,
    /// NaN when the point failed.
    pub fidelity: f64,
    pub leak_a: f64,
    pub trace_error: f64,
    pub wall_time_s: Option<f64>,
    /// Fidelity with a closed readout pulse, when it differs from the main run.
    pub fidelity_closed_pulse: Option<f64>,
    /// `ok`, or the error that stopped this point.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Runs the protocol at one grid point. Failures end up in `status`.
pub fn run_point(spec: &SweepSpec, ratio: f64, c: f64, d: f64) -> SweepRow {
    run_point_detailed(spec, ratio, c, d).0
}

/// Like [`run_point`], also returning the full protocol result or its error.
pub fn run_point_detailed(
    spec: &SweepSpec,
    ratio: f64,
    c: f64,
    d: f64,
) -> (SweepRow, fredkin_core::Result<ProtocolResult>) {
    let start = Instant::now();
    let params = spec.point_params(ratio, c, d);
    let mut row = SweepRow {
        scenario: spec.scenario.to_string(),
        big_d: ratio,
        c,
        d,
        delta_over_2pi_hz: params.delta1 / (2.0 * std::f64::consts::PI),
        lambda_over_2pi_hz: f64::NAN,
        t_swap_s: f64::NAN,
        fidelity: f64::NAN,
        leak_a: f64::NAN,
        trace_error: f64::NAN,
        wall_time_s: None,
        fidelity_closed_pulse: None,
        status: String::new(),
    };
    let outcome = (|| -> fredkin_core::Result<ProtocolResult> {
        let derived = derive(&params)?;
        row.lambda_over_2pi_hz = derived.lambda / (2.0 * std::f64::consts::PI);
        let gate_time = match spec.timing {
            Timing::Actual => derived.t_swap,
            Timing::Nominal => derive(&spec.point_params(ratio, 1.0, 1.0))?.t_swap,
        };
        let protocol = ProtocolSpec {
            gate_time: Some(gate_time),
            ..spec.protocol.clone()
        };
        let result = run_protocol(&params, &spec.scenario.initial_case(spec.control), &protocol)?;
        row.t_swap_s = result.gate_time;
        row.fidelity = result.fidelity;
        row.leak_a = result.leak_a;
        row.trace_error = result.trace_error;
        row.fidelity_closed_pulse = match (result.fidelity_lossy_pulse, result.fidelity_closed_pulse) {
            (Some(_), Some(closed)) => Some(closed),
            _ => None,
        };
        Ok(result)
    })();
    row.status = match &outcome {
        Ok(_) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    if spec.wall_time {
        row.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    (row, outcome)
}

fn run_grid(points: &[(f64, f64, f64)], spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Config(format!("cannot start {jobs} workers: {e}")))?;
    let total = points.len();
    Ok(pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &(ratio, c, d))| {
                let row = run_point(spec, ratio, c, d);
                eprintln!(
                    "[{}/{total}] {} D={ratio} c={c} d={d} fidelity={:.6} {}",
                    i + 1,
                    row.scenario,
                    row.fidelity,
                    row.status
                );
                row
            })
            .collect()
    }))
}

/// One row per D, in grid order.
pub fn sweep_detuning(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let (c, d) = spec.base_inhomogeneity();
    let points: Vec<_> = spec.detuning_ratios.iter().map(|&r| (r, c, d)).collect();
    run_grid(&points, spec, jobs)
}

/// Dense (c, d) grid at `base_ratio`, c varying slowest.
pub fn sweep_inhomogeneity(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points: Vec<_> = spec
        .c_grid
        .iter()
        .flat_map(|&c| spec.d_grid.iter().map(move |&d| (spec.base_ratio, c, d)))
        .collect();
    run_grid(&points, spec, jobs)
}

const COLUMNS: [&str; 13] = [
    "scenario",
    "D",
    "c",
    "d",
    "delta_over_2pi_hz",
    "lambda_over_2pi_hz",
    "t_swap_s",
    "fidelity",
    "leak_a",
    "trace_error",
    "wall_time_s",
    "fidelity_closed_pulse",
    "status",
];

fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Writes `# `-prefixed comment lines, a header and one row per entry. The
/// `wall_time_s` column is present only when `wall_time` is set.
pub fn write_results(rows: &[SweepRow], path: &Path, comments: &[String], wall_time: bool) -> Result<()> {
    let io_err = |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    };
    let csv_err = |source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    for line in comments {
        writeln!(file, "# {line}").map_err(io_err)?;
    }
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    let header: Vec<&str> = COLUMNS.iter().copied().filter(|c| wall_time || *c != "wall_time_s").collect();
    out.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut record = vec![
            r.scenario.clone(),
            sci(r.big_d),
            sci(r.c),
            sci(r.d),
            sci(r.delta_over_2pi_hz),
            sci(r.lambda_over_2pi_hz),
            sci(r.t_swap_s),
            sci(r.fidelity),
            sci(r.leak_a),
            sci(r.trace_error),
        ];
        if wall_time {
            record.push(opt_sci(r.wall_time_s));
        }
        record.push(opt_sci(r.fidelity_closed_pulse));
        record.push(r.status.clone());
        out.write_record(&record).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a file written by [`write_results`], skipping comment lines.
pub fn read_results(path: &Path) -> Result<Vec<SweepRow>> {
    let csv_err = |source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |what: String| SimError::Config(format!("{}: {what}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let wall_time = header.iter().any(|h| h == "wall_time_s");
    let expected: Vec<&str> = COLUMNS.iter().copied().filter(|c| wall_time || *c != "wall_time_s").collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(bad(format!("unexpected header {:?}", header)));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: `{}`: {e}", expected[i], &record[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let mut i = 10;
        let wall_time_s = if wall_time {
            i += 1;
            opt(10)?
        } else {
            None
        };
        rows.push(SweepRow {
            scenario: record[0].to_string(),
            big_d: num(1)?,
            c: num(2)?,
            d: num(3)?,
            delta_over_2pi_hz: num(4)?,
            lambda_over_2pi_hz: num(5)?,
            t_swap_s: num(6)?,
            fidelity: num(7)?,
            leak_a: num(8)?,
            trace_error: num(9)?,
            wall_time_s,
            fidelity_closed_pulse: opt(i)?,
            status: record[i + 1].to_string(),
        });
    }
    Ok(rows)
}
