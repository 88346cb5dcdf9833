//! Command-line front end. [`run`] maps every outcome to an exit code:
//! 0 on success, 2 for configuration errors, 3 for numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, CommandFactory, FromArgMatches, Parser, Subcommand};
use fredkin_core::analytics::{
    concurrence_divergence_table, concurrence_oracle, default_divergence_points, state_fidelity, Branch,
};
use fredkin_core::fredkin::{
    memory_kets, measure_control, simulate_swap_test, target_entangled_state, ControlAmplitudes, MemoryFrame, ProtocolResult, TargetKind, TargetState,
};
use fredkin_core::hilbert::{
    cat_state_with_tolerance, coherent_state_with_tolerance, embed, fock_state, parity, poisson_tail, CatParity,
    DEFAULT_TAIL_TOLERANCE,
};
use fredkin_core::model::{derive, describe, labelled_collapse_operators};
use fredkin_core::nv::{validate_low_excitation, SpinEnsembleSpec};
use fredkin_core::{Ket, SpaceLayout, C64};

use crate::config::{keys_help, parse_mode, Config, CONFIG_DIR_ENV, DEFAULT_CONFIG_FILE};
use crate::error::{Result, SimError};
use crate::experiments::{
    run_point_detailed, sweep_detuning, sweep_inhomogeneity, write_results, Scenario, SweepRow,
};

#[derive(Parser, Debug)]
#[command(name = "fredkin", version, about = "Hybrid Fredkin gate simulator: qutrit control, two bosonic memories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file (TOML with [params], [sweep], [integrator])
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// CSV output path
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Override one config key, e.g. `--set params.kappa1=1e5` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Worker threads for sweeps
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Input scenario: noon, coherent or cat
    #[arg(long, alias = "case", global = true)]
    pub scenario: Option<String>,

    /// Gate Hamiltonian: full or effective
    #[arg(long, global = true)]
    pub mode: Option<String>,

    /// Apply the loss channels (true/false)
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    pub lossy: Option<bool>,

    /// Gate time for inhomogeneous memories: nominal or actual
    #[arg(long, global = true)]
    pub timing: Option<String>,

    /// Apply the readout pulse after the gate (true/false)
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    pub include_pulse: Option<bool>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the gate protocol once and report its fidelity
    Gate,
    /// Run the protocol, measure the control and compare the memories with the entangled targets
    Entangle,
    /// Infer the overlap of two memory states from the control measurement
    SwapTest {
        /// fock:N, coherent:RE[,IM], cat-even:A or cat-odd:A
        #[arg(long)]
        state_a: String,
        /// Same syntax as --state-a
        #[arg(long)]
        state_b: String,
    },
    /// Fidelity versus D = delta/g
    SweepD,
    /// Fidelity over the (c, d) inhomogeneity grid at fixed D
    SweepCd,
    /// Compare a spin ensemble with its bosonic collective mode
    NvValidate {
        /// Number of spins
        #[arg(long, default_value_t = 4)]
        spins: usize,
        /// Initial excitation number
        #[arg(long, default_value_t = 1)]
        excitations: usize,
        /// Comparison instants
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Horizon in seconds; defaults to one vacuum Rabi period of the collective coupling
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Derived parameters, warnings, truncation audit and the concurrence divergence table
    Audit,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = Cli::command().after_long_help(keys_help()).after_help(keys_help());
    let matches = match command.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_config_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

/// File config, then `--set` overrides, then the dedicated flags.
pub fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(&resolve_config_path(path))?,
        None => match std::env::var_os(CONFIG_DIR_ENV).map(|d| Path::new(&d).join(DEFAULT_CONFIG_FILE)) {
            Some(default) if default.exists() => Config::from_file(&default)?,
            _ => Config::default(),
        },
    };
    for o in &cli.overrides {
        config.apply_override(o)?;
    }
    if let Some(s) = &cli.scenario {
        config.sweep.scenario = s.parse().map_err(SimError::Config)?;
    }
    if let Some(m) = &cli.mode {
        config.sweep.mode = parse_mode(m).map_err(SimError::Config)?;
    }
    if let Some(l) = cli.lossy {
        config.sweep.lossy = l;
    }
    if let Some(t) = &cli.timing {
        config.sweep.timing = t.parse().map_err(SimError::Config)?;
    }
    if let Some(p) = cli.include_pulse {
        config.sweep.include_pulse = p;
    }
    if cli.jobs == 0 {
        return Err(SimError::Config("--jobs must be at least 1".into()));
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Gate => gate(cli, &config),
        Command::Entangle => entangle(cli, &config),
        Command::SwapTest { state_a, state_b } => swap_test(&config, state_a, state_b),
        Command::SweepD => sweep(cli, &config, false),
        Command::SweepCd => sweep(cli, &config, true),
        Command::NvValidate {
            spins,
            excitations,
            samples,
            horizon,
        } => nv_validate(&config, *spins, *excitations, *samples, *horizon),
        Command::Audit => audit(cli, &config),
    }
}

fn metadata(config: &Config, extra: &[String]) -> Vec<String> {
    let mut lines = vec![format!("fredkin {}", env!("CARGO_PKG_VERSION"))];
    lines.extend(config.echo());
    lines.extend(extra.iter().cloned());
    lines
}

/// Runs the configured protocol at the configured detunings.
fn single_point(config: &Config) -> Result<(SweepRow, ProtocolResult)> {
    let spec = config.sweep_spec();
    let p = config.physical_params();
    let ratio = p.delta1 / p.g1;
    let (c, d) = spec.base_inhomogeneity();
    let (row, result) = run_point_detailed(&spec, ratio, c, d);
    Ok((row, result?))
}

fn print_result(r: &ProtocolResult) {
    println!("fidelity                {:.10}", r.fidelity);
    println!("fidelity vs Fredkin     {:.10}", r.fidelity_vs_fredkin);
    if let (Some(l), Some(c)) = (r.fidelity_lossy_pulse, r.fidelity_closed_pulse) {
        println!("  lossy pulse           {l:.10}");
        println!("  closed pulse          {c:.10}");
    }
    println!("gate time               {:.6e} s", r.gate_time);
    println!("pulse time              {:.6e} s", r.pulse_time);
    println!("population of |a>       {:.3e}", r.leak_a);
    println!("trace error             {:.3e}", r.trace_error);
    println!("top Fock populations    {:.3e}, {:.3e}", r.top_fock_mass[0], r.top_fock_mass[1]);
    if let Some(d) = &r.diagnostics {
        println!("min eigenvalue          {:.3e}", d.min_eigenvalue);
    }
}

fn gate(cli: &Cli, config: &Config) -> Result<()> {
    let params = config.physical_params();
    println!("{} scenario, {}", config.sweep.scenario, describe(&params));
    let (row, result) = single_point(config)?;
    print_result(&result);
    if let Some(out) = &cli.out {
        write_results(&[row], out, &metadata(config, &[]), config.sweep.wall_time)?;
    }
    Ok(())
}

fn target_kind(scenario: &Scenario) -> TargetKind {
    match *scenario {
        Scenario::Noon { n } => TargetKind::Noon(n),
        Scenario::Coherent { alpha, beta } => TargetKind::EntCoherent { alpha, beta },
        Scenario::Cat { alpha, beta } => TargetKind::EntCat { alpha, beta },
    }
}

fn entangle(cli: &Cli, config: &Config) -> Result<()> {
    let params = config.physical_params();
    if params.d1 != params.d2 {
        return Err(SimError::Config("entangle needs equal cutoffs d1 and d2".into()));
    }
    let scenario = config.scenario();
    println!("{scenario} scenario, {}", describe(&params));
    let (row, result) = single_point(config)?;
    print_result(&result);
    if !config.sweep.include_pulse {
        println!("no readout pulse: the control carries no branch information");
    } else {
        let measured = measure_control(&result.final_state.to_density())?;
        let memory = SpaceLayout::new(vec![params.d1, params.d2])?;
        let dressing = embed(&parity(params.d2)?, 1, &memory)?;
        for (label, p, state, branch) in [
            ("g", measured.p_g, &measured.memory_g, Branch::Minus),
            ("e", measured.p_e, &measured.memory_e, Branch::Plus),
        ] {
            let mut target = target_entangled_state(
                &TargetState {
                    kind: target_kind(&scenario),
                    branch,
                },
                &memory,
            )?;
            if config.sweep.frame == MemoryFrame::Lab {
                target = target.evolve(&dressing)?;
            }
            let concurrence = concurrence_oracle(&target)?;
            match state {
                Some(rho) => println!(
                    "outcome {label}: probability {p:.6}, memory fidelity {:.8}, target concurrence {concurrence:.6}",
                    state_fidelity(&target, rho)?
                ),
                None => println!("outcome {label}: probability {p:.3e}, no conditional state"),
            }
        }
        println!("population of |a> at readout {:.3e}", measured.p_a);
    }
    if let Some(out) = &cli.out {
        write_results(&[row], out, &metadata(config, &[]), config.sweep.wall_time)?;
    }
    Ok(())
}

/// Parses `fock:N`, `coherent:RE[,IM]`, `cat-even:A` or `cat-odd:A`.
pub fn parse_memory_state(text: &str, dim: usize) -> Result<Ket> {
    let bad = |why: &str| SimError::Config(format!("memory state `{text}`: {why}"));
    let (kind, arg) = text.split_once(':').ok_or_else(|| bad("expected kind:value"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let ket = match kind.to_ascii_lowercase().as_str() {
        "fock" => fock_state(arg.trim().parse::<usize>().map_err(|_| bad("not a photon number"))?, dim)?,
        "coherent" => {
            let alpha = match arg.split_once(',') {
                Some((re, im)) => C64::new(num(re)?, num(im)?),
                None => C64::new(num(arg)?, 0.0),
            };
            coherent_state_with_tolerance(alpha, dim, DEFAULT_TAIL_TOLERANCE)?
        }
        "cat-even" => cat_state_with_tolerance(num(arg)?, CatParity::Even, dim, DEFAULT_TAIL_TOLERANCE)?,
        "cat-odd" => cat_state_with_tolerance(num(arg)?, CatParity::Odd, dim, DEFAULT_TAIL_TOLERANCE)?,
        _ => return Err(bad("kind must be fock, coherent, cat-even or cat-odd")),
    };
    Ok(ket)
}

fn swap_test(config: &Config, a: &str, b: &str) -> Result<()> {
    let params = config.physical_params();
    let dim = config.params.d1.unwrap_or(12);
    let psi = parse_memory_state(a, dim)?;
    let phi = parse_memory_state(b, dim)?;
    let run = simulate_swap_test(
        &params,
        &psi,
        &phi,
        ControlAmplitudes::balanced(),
        MemoryFrame::ParityCompensated,
        &config.integrator,
    )?;
    println!("p_g                     {:.10}", run.p_g);
    println!("inferred F^2            {:.6}", run.inference.f_squared);
    println!("direct |<phi|psi>|^2    {:.6}", run.overlap_squared);
    if run.inference.out_of_range {
        println!("warning: raw estimate {:.6} was clamped into [0, 1]", run.inference.raw);
    }
    Ok(())
}

fn sweep(cli: &Cli, config: &Config, inhomogeneous: bool) -> Result<()> {
    let spec = config.sweep_spec();
    let (rows, name, extra) = if inhomogeneous {
        let note = format!(
            "inhomogeneity: delta2 = c*delta1, g2 = d*g1 at fixed D = delta1/g1 = {}",
            spec.base_ratio
        );
        (sweep_inhomogeneity(&spec, cli.jobs)?, "sweep-cd", vec![note])
    } else {
        (sweep_detuning(&spec, cli.jobs)?, "sweep-d", Vec::new())
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}-{}.csv", spec.scenario)));
    write_results(&rows, &out, &metadata(config, &extra), spec.wall_time)?;
    println!("{:>8} {:>10} {:>10} {:>14} {:>12}  status", "D", "c", "d", "fidelity", "leak_a");
    for r in &rows {
        println!(
            "{:>8.3} {:>10.6} {:>10.6} {:>14.10} {:>12.3e}  {}",
            r.big_d, r.c, r.d, r.fidelity, r.leak_a, r.status
        );
    }
    println!("wrote {}", out.display());
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(SimError::PointsFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn nv_validate(config: &Config, spins: usize, excitations: usize, samples: usize, horizon: Option<f64>) -> Result<()> {
    let params = config.physical_params();
    let collective = params.g1;
    let spec = SpinEnsembleSpec::uniform(spins, collective / (spins as f64).sqrt(), params.delta1);
    let horizon = horizon.unwrap_or(2.0 * std::f64::consts::PI / collective);
    let report = validate_low_excitation(&spec, excitations, horizon, samples, &config.integrator)?;
    println!(
        "{} spins, {} excitation(s), horizon {:.4e} s: max trace distance {:.3e}",
        report.n_spins, report.excitations, horizon, report.max_deviation
    );
    for (t, dev) in &report.samples {
        println!("  t = {t:.4e} s  distance {dev:.3e}");
    }
    Ok(())
}

fn audit(cli: &Cli, config: &Config) -> Result<()> {
    let params = config.physical_params();
    let scenario = config.scenario();
    let two_pi = 2.0 * std::f64::consts::PI;
    println!("{}", describe(&params));
    for w in params.validate()? {
        println!("warning: {w}");
    }
    let derived = derive(&params)?;
    println!("lambda/2pi              {:.6e} Hz", derived.lambda / two_pi);
    println!("Stark shift/2pi         {:.6e} Hz", derived.omega_stark / two_pi);
    println!("delta2 - delta1 (/2pi)  {:.6e} Hz", derived.delta_prime / two_pi);
    println!("t_swap                  {:.6e} s", derived.t_swap);
    println!("t_pulse                 {:.6e} s", derived.t_pulse);
    for (name, _) in labelled_collapse_operators(&params)? {
        println!("loss channel            {name}");
    }
    match &scenario {
        Scenario::Coherent { alpha, beta } | Scenario::Cat { alpha, beta } => {
            println!(
                "Poisson tails at cutoff  {:.3e} (memory 1), {:.3e} (memory 2)",
                poisson_tail(alpha * alpha, params.d1),
                poisson_tail(beta * beta, params.d2)
            );
        }
        Scenario::Noon { n } => println!("NOON N = {n}, cutoff {} (exact when N < cutoff)", params.d1),
    }
    match memory_kets(&scenario.memory_input(), params.d1, params.d2, DEFAULT_TAIL_TOLERANCE) {
        Ok(_) => println!("truncation audit        ok at tolerance {DEFAULT_TAIL_TOLERANCE:e}"),
        Err(e) => println!("truncation audit        FAILED: {e}"),
    }
    let table = concurrence_divergence_table(&default_divergence_points(), 1e-6)?;
    println!("concurrence: printed closed form vs oracle ({} divergent points)", table.len());
    println!("{:>10} {:>10} {:>6} {:>6} {:>12} {:>12} {:>12}", "gamma", "eta", "F", "branch", "printed", "oracle", "difference");
    for r in &table {
        println!(
            "{:>10.4} {:>10.4} {:>6.3} {:>6} {:>12.6} {:>12.6} {:>12.6}{}",
            r.gamma.re,
            r.eta.re,
            r.f,
            if r.branch == Branch::Plus { "+" } else { "-" },
            r.printed,
            r.oracle,
            r.difference,
            if r.negative_radicand { " (negative radicand)" } else { "" }
        );
    }
    if let Some(out) = &cli.out {
        write_divergence_table(&table, out, &metadata(config, &[]))?;
    }
    Ok(())
}

fn write_divergence_table(
    table: &[fredkin_core::analytics::DivergenceRow],
    path: &Path,
    comments: &[String],
) -> Result<()> {
    use std::io::Write;
    let io_err = |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::new();
    for c in comments {
        text.push_str(&format!("# {c}\n"));
    }
    text.push_str("gamma_re,gamma_im,eta_re,eta_im,F,branch,printed,oracle,difference,negative_radicand\n");
    for r in table {
        text.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e},{}\n",
            r.gamma.re,
            r.gamma.im,
            r.eta.re,
            r.eta.im,
            r.f,
            if r.branch == Branch::Plus { "plus" } else { "minus" },
            r.printed,
            r.oracle,
            r.difference,
            r.negative_radicand
        ));
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes()).map_err(io_err)
}
