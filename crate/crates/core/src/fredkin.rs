//! Gate unitaries and the gate → readout pulse → measurement protocol.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::analytics::{
    leakage_and_truncation, leakage_and_truncation_pure, state_fidelity, Branch, LeakageReport,
};
use crate::dynamics::{evolve_lindblad, propagate_pure, IntegratorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{
    cat_state_with_tolerance, coherent_state_with_tolerance, embed, fock_state, parity, projector, CMatrix, CVector,
    CatParity, DensityDiagnostics, DensityOp, Ket, Level, LinOp, SpaceLayout, C64, DEFAULT_TAIL_TOLERANCE, ONE, ZERO,
};
use crate::model::{
    collapse_operators, derive, effective_frame_hamiltonian, full_frame_hamiltonian, pulse_hamiltonian,
    pulse_propagator, FrameHamiltonian, PhysicalParams, MODE1, MODE2, QUTRIT,
};

/// Control qubit `γ|g⟩ + η|e⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlAmplitudes {
    gamma: C64,
    eta: C64,
}

impl ControlAmplitudes {
    pub fn new(gamma: C64, eta: C64) -> Result<Self> {
        let s = gamma.norm_sqr() + eta.norm_sqr();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm: s.sqrt() });
        }
        Ok(Self { gamma, eta })
    }

    /// γ = η = 1/√2.
    pub fn balanced() -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        Self {
            gamma: C64::new(s, 0.0),
            eta: C64::new(s, 0.0),
        }
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn eta(&self) -> C64 {
        self.eta
    }

    /// `γ*η + γη*`.
    pub fn cross_term(&self) -> f64 {
        2.0 * (self.gamma.conj() * self.eta).re
    }

    pub fn ket(&self) -> Ket {
        let v = CVector::from_vec(vec![self.gamma, ZERO, self.eta]);
        Ket::new(SpaceLayout::single(3).expect("nonzero"), v).expect("validated at construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MemoryInput {
    /// `|N⟩₁|0⟩₂`.
    Noon(usize),
    /// `|α⟩₁|−β⟩₂`.
    Coherent { alpha: C64, beta: C64 },
    /// Even cat `∝ |α⟩ + |−α⟩` on mode 1, odd cat `∝ |β⟩ − |−β⟩` on mode 2.
    Cat { alpha: f64, beta: f64 },
    Custom { mode1: Ket, mode2: Ket },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialCase {
    pub input: MemoryInput,
    pub control: ControlAmplitudes,
    /// Tail tolerance for coherent and cat truncation.
    pub tail_tolerance: f64,
}

impl InitialCase {
    pub fn new(input: MemoryInput, control: ControlAmplitudes) -> Self {
        Self {
            input,
            control,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

/// The two memory kets of a case, on cutoffs `d1` and `d2`.
pub fn memory_kets(input: &MemoryInput, d1: usize, d2: usize, tail_tolerance: f64) -> Result<(Ket, Ket)> {
    match input {
        MemoryInput::Noon(n) => Ok((fock_state(*n, d1)?, fock_state(0, d2)?)),
        MemoryInput::Coherent { alpha, beta } => Ok((
            coherent_state_with_tolerance(*alpha, d1, tail_tolerance)?,
            coherent_state_with_tolerance(-*beta, d2, tail_tolerance)?,
        )),
        MemoryInput::Cat { alpha, beta } => Ok((
            cat_state_with_tolerance(*alpha, CatParity::Even, d1, tail_tolerance)?,
            cat_state_with_tolerance(*beta, CatParity::Odd, d2, tail_tolerance)?,
        )),
        MemoryInput::Custom { mode1, mode2 } => {
            if mode1.layout().factor_dims() != [d1] || mode2.layout().factor_dims() != [d2] {
                return Err(Error::Layout(format!(
                    "custom memory states have dims {:?} and {:?}, expected [{d1}] and [{d2}]",
                    mode1.layout().factor_dims(),
                    mode2.layout().factor_dims()
                )));
            }
            Ok((mode1.clone(), mode2.clone()))
        }
    }
}

/// Product ket `(γ|g⟩ + η|e⟩) ⊗ |ψ⟩₁ ⊗ |φ⟩₂`.
pub fn initial_state(case: &InitialCase, layout: &SpaceLayout) -> Result<Ket> {
    let dims = layout.factor_dims();
    if dims.len() != 3 || dims[QUTRIT] != 3 {
        return Err(Error::Layout("expected a [3, d1, d2] layout".into()));
    }
    let (m1, m2) = memory_kets(&case.input, dims[MODE1], dims[MODE2], case.tail_tolerance)?;
    Ok(case.control.ket().tensor(&m1).tensor(&m2))
}

fn check_gate_layout(layout: &SpaceLayout) -> Result<usize> {
    let dims = layout.factor_dims();
    if dims.len() != 3 || dims[QUTRIT] != 3 {
        return Err(Error::Layout("expected a [3, d1, d2] layout".into()));
    }
    if dims[MODE1] != dims[MODE2] {
        return Err(Error::Layout(format!(
            "swap needs equal cutoffs, got d1 = {} and d2 = {}",
            dims[MODE1], dims[MODE2]
        )));
    }
    Ok(dims[MODE1])
}

/// Permutation-and-phase gate: on |g⟩ the memories are swapped and
/// multiplied by `phase(n₁, n₂)`; on |a⟩ and |e⟩ nothing happens.
fn controlled_swap(layout: &SpaceLayout, phase: impl Fn(usize, usize) -> f64) -> Result<LinOp> {
    check_gate_layout(layout)?;
    let n = layout.total_dim();
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        let (q, n1, n2) = (layout.digit(j, QUTRIT), layout.digit(j, MODE1), layout.digit(j, MODE2));
        if q == Level::G.index() {
            let i = layout.flat_index(&[q, n2, n1])?;
            m[(i, j)] = C64::new(phase(n1, n2), 0.0);
        } else {
            m[(j, j)] = ONE;
        }
    }
    LinOp::new(layout.clone(), m)
}

/// `U = |g⟩⟨g| ⊗ SWAP₁₂ + (I₃ − |g⟩⟨g|) ⊗ I`.
pub fn ideal_fredkin(layout: &SpaceLayout) -> Result<LinOp> {
    controlled_swap(layout, |_, _| 1.0)
}

/// The map realized by the dispersive exchange at `t = π/(2λ)`:
/// `|g⟩⟨g| ⊗ SWAP₁₂·(−1)^{n₁+n₂} + (I₃ − |g⟩⟨g|) ⊗ I`.
pub fn dispersive_fredkin(layout: &SpaceLayout) -> Result<LinOp> {
    controlled_swap(layout, |n1, n2| if (n1 + n2) % 2 == 0 { 1.0 } else { -1.0 })
}

/// `(−1)^{n₂}` on memory 2. Conjugating the dispersive gate by it yields the plain Fredkin gate.
pub fn memory2_parity(layout: &SpaceLayout) -> Result<LinOp> {
    embed(&parity(layout.factor_dims()[MODE2])?, MODE2, layout)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HamiltonianMode {
    /// Time-dependent qutrit-memory coupling.
    Full,
    /// Second-order dispersive Hamiltonian (reduced form when symmetric).
    Effective,
}

/// How the memories are referenced around the gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MemoryFrame {
    /// Bare dispersive evolution; the reference output is [`dispersive_fredkin`].
    Lab,
    /// A π phase flip of memory 2 before and after the gate; the reference is [`ideal_fredkin`].
    ParityCompensated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub mode: HamiltonianMode,
    pub lossy: bool,
    pub include_pulse: bool,
    /// Apply the dissipators during the readout pulse too (only when `lossy`).
    pub pulse_lossy: bool,
    pub frame: MemoryFrame,
    /// Gate duration; `None` uses `π/(2λ)` of the given parameters.
    pub gate_time: Option<f64>,
    pub integrator: IntegratorConfig,
    /// Allowed growth of the top-Fock population during the gate.
    pub cutoff_tolerance: f64,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            mode: HamiltonianMode::Full,
            lossy: true,
            include_pulse: true,
            pulse_lossy: true,
            frame: MemoryFrame::Lab,
            gate_time: None,
            integrator: IntegratorConfig::default(),
            cutoff_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FinalState {
    Pure(Ket),
    Mixed(DensityOp),
}

impl FinalState {
    pub fn to_density(&self) -> DensityOp {
        match self {
            FinalState::Pure(k) => k.to_density(),
            FinalState::Mixed(r) => r.clone(),
        }
    }

    fn fidelity(&self, target: &Ket) -> Result<f64> {
        match self {
            FinalState::Pure(k) => Ok(target.inner(k)?.norm()),
            FinalState::Mixed(r) => state_fidelity(target, r),
        }
    }

    fn leakage(&self) -> Result<LeakageReport> {
        match self {
            FinalState::Pure(k) => leakage_and_truncation_pure(k),
            FinalState::Mixed(r) => leakage_and_truncation(r),
        }
    }

    fn trace_error(&self) -> f64 {
        match self {
            FinalState::Pure(k) => (k.norm() * k.norm() - 1.0).abs(),
            FinalState::Mixed(r) => (r.trace() - ONE).norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult {
    pub initial: Ket,
    pub final_state: FinalState,
    /// Ideal output the fidelity is measured against.
    pub reference: Ket,
    pub fidelity: f64,
    /// Fidelity against the plain Fredkin output (then ideal pulse).
    pub fidelity_vs_fredkin: f64,
    /// Fidelities for a dissipative and a closed readout pulse, when both apply.
    pub fidelity_lossy_pulse: Option<f64>,
    pub fidelity_closed_pulse: Option<f64>,
    pub gate_time: f64,
    pub pulse_time: f64,
    pub leak_a: f64,
    pub trace_error: f64,
    pub top_fock_mass: [f64; 2],
    pub diagnostics: Option<DensityDiagnostics>,
}

fn gate_hamiltonian(params: &PhysicalParams, mode: HamiltonianMode) -> Result<FrameHamiltonian> {
    match mode {
        HamiltonianMode::Full => full_frame_hamiltonian(params),
        HamiltonianMode::Effective => effective_frame_hamiltonian(params, params.is_symmetric()),
    }
}

/// Ideal output for `psi0`: the frame's reference gate, then the ideal pulse when requested.
pub fn reference_output(params: &PhysicalParams, psi0: &Ket, frame: MemoryFrame, include_pulse: bool) -> Result<Ket> {
    let layout = psi0.layout();
    let gate = match frame {
        MemoryFrame::Lab => dispersive_fredkin(layout)?,
        MemoryFrame::ParityCompensated => ideal_fredkin(layout)?,
    };
    apply_with_pulse(params, psi0, &gate, include_pulse)
}

fn apply_with_pulse(params: &PhysicalParams, psi0: &Ket, gate: &LinOp, include_pulse: bool) -> Result<Ket> {
    let mut out = psi0.evolve(gate)?;
    if include_pulse {
        let t = derive(params)?.t_pulse;
        out = out.evolve(&pulse_propagator(params.omega_rabi, params.theta, t, psi0.layout())?)?;
    }
    Ok(out)
}

fn apply_unitary(state: FinalState, u: &LinOp) -> Result<FinalState> {
    Ok(match state {
        FinalState::Pure(k) => FinalState::Pure(k.evolve(u)?),
        FinalState::Mixed(r) => FinalState::Mixed(r.conjugate(u)?),
    })
}

/// Runs the gate stage, the optional readout pulse, and scores the result.
pub fn run_protocol(params: &PhysicalParams, case: &InitialCase, spec: &ProtocolSpec) -> Result<ProtocolResult> {
    params.validate()?;
    let layout = params.layout()?;
    let derived = derive(params)?;
    let psi0 = initial_state(case, &layout)?;
    let gate_time = spec.gate_time.unwrap_or(derived.t_swap);
    if !(gate_time >= 0.0) || !gate_time.is_finite() {
        return Err(Error::InvalidParameter {
            key: "gate_time",
            value: gate_time,
            reason: "must be finite and non-negative",
        });
    }
    let comp = match spec.frame {
        MemoryFrame::Lab => None,
        MemoryFrame::ParityCompensated => Some(memory2_parity(&layout)?),
    };
    let ops = if spec.lossy { collapse_operators(params)? } else { Vec::new() };
    let lossy = spec.lossy && !ops.is_empty();

    let start = match &comp {
        Some(p) => psi0.evolve(p)?,
        None => psi0.clone(),
    };
    let before = leakage_and_truncation_pure(&start)?;
    let h = gate_hamiltonian(params, spec.mode)?;
    let mut state = if lossy {
        FinalState::Mixed(evolve_lindblad(&h, &ops, &start.to_density(), 0.0, gate_time, &spec.integrator)?)
    } else {
        FinalState::Pure(propagate_pure(&h, &start, 0.0, gate_time, &spec.integrator)?)
    };
    if let Some(p) = &comp {
        state = apply_unitary(state, p)?;
    }
    let after = state.leakage()?;
    let growth = after.combined_top_mass() - before.combined_top_mass();
    if growth > spec.cutoff_tolerance {
        return Err(Error::CutoffReached {
            population: growth,
            tolerance: spec.cutoff_tolerance,
        });
    }

    let reference = reference_output(params, &psi0, spec.frame, spec.include_pulse)?;
    let bare = apply_with_pulse(params, &psi0, &ideal_fredkin(&layout)?, spec.include_pulse)?;

    let (pulse_time, mut fid_lossy, mut fid_closed) = (if spec.include_pulse { derived.t_pulse } else { 0.0 }, None, None);
    if spec.include_pulse {
        let hp = FrameHamiltonian::time_independent(&pulse_hamiltonian(params.omega_rabi, params.theta, &layout)?)?;
        let t0 = gate_time;
        let t1 = gate_time + derived.t_pulse;
        state = match state {
            FinalState::Pure(k) => FinalState::Pure(propagate_pure(&hp, &k, t0, t1, &spec.integrator)?),
            FinalState::Mixed(r) => {
                let closed = evolve_lindblad(&hp, &[], &r, t0, t1, &spec.integrator)?;
                let open = evolve_lindblad(&hp, &ops, &r, t0, t1, &spec.integrator)?;
                fid_closed = Some(state_fidelity(&reference, &closed)?);
                fid_lossy = Some(state_fidelity(&reference, &open)?);
                FinalState::Mixed(if spec.pulse_lossy { open } else { closed })
            }
        };
    }

    let leak = state.leakage()?;
    let diagnostics = match &state {
        FinalState::Mixed(r) => Some(r.diagnostics()),
        FinalState::Pure(_) => None,
    };
    Ok(ProtocolResult {
        fidelity: state.fidelity(&reference)?,
        fidelity_vs_fredkin: state.fidelity(&bare)?,
        fidelity_lossy_pulse: fid_lossy,
        fidelity_closed_pulse: fid_closed,
        gate_time,
        pulse_time,
        leak_a: leak.leak_a,
        trace_error: state.trace_error(),
        top_fock_mass: leak.top_fock_mass,
        diagnostics,
        initial: psi0,
        reference,
        final_state: state,
    })
}

/// Outcome of a projective g/e measurement of the control.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlMeasurement {
    pub p_g: f64,
    pub p_e: f64,
    /// Population left on |a⟩; not part of either outcome.
    pub p_a: f64,
    /// Memory state after each outcome; `None` when the branch has zero weight.
    pub memory_g: Option<DensityOp>,
    pub memory_e: Option<DensityOp>,
}

const BRANCH_FLOOR: f64 = 1e-14;

fn memory_layout(layout: &SpaceLayout) -> Result<SpaceLayout> {
    layout.subset(&[MODE1, MODE2])
}

/// Projects the control onto |g⟩ and |e⟩ and returns the conditional memory states.
pub fn measure_control(rho: &DensityOp) -> Result<ControlMeasurement> {
    let layout = rho.layout();
    check_layout3(layout)?;
    let mem = memory_layout(layout)?;
    let m = mem.total_dim();
    let block = |q: Level| {
        let off = q.index() * m;
        rho.matrix().view((off, off), (m, m)).into_owned()
    };
    let branch = |q: Level| -> Result<(f64, Option<DensityOp>)> {
        let b = block(q);
        let p = b.trace().re;
        if p <= BRANCH_FLOOR {
            return Ok((p.max(0.0), None));
        }
        Ok((p, Some(DensityOp::new(mem.clone(), b / C64::new(p, 0.0))?)))
    };
    let (p_g, memory_g) = branch(Level::G)?;
    let (p_e, memory_e) = branch(Level::E)?;
    let p_a = block(Level::A).trace().re;
    Ok(ControlMeasurement {
        p_g,
        p_e,
        p_a,
        memory_g,
        memory_e,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureControlMeasurement {
    pub p_g: f64,
    pub p_e: f64,
    pub p_a: f64,
    pub memory_g: Option<Ket>,
    pub memory_e: Option<Ket>,
}

/// Pure-state version of [`measure_control`], returning conditional kets.
pub fn measure_control_pure(psi: &Ket) -> Result<PureControlMeasurement> {
    let layout = psi.layout();
    check_layout3(layout)?;
    let mem = memory_layout(layout)?;
    let m = mem.total_dim();
    let branch = |q: Level| -> Result<(f64, Option<Ket>)> {
        let v = psi.amplitudes().rows(q.index() * m, m).into_owned();
        let p = v.norm_squared();
        if p <= BRANCH_FLOOR {
            return Ok((p, None));
        }
        Ok((p, Some(Ket::normalized(mem.clone(), v)?)))
    };
    let (p_g, memory_g) = branch(Level::G)?;
    let (p_e, memory_e) = branch(Level::E)?;
    let (p_a, _) = branch(Level::A)?;
    Ok(PureControlMeasurement {
        p_g,
        p_e,
        p_a,
        memory_g,
        memory_e,
    })
}

fn check_layout3(layout: &SpaceLayout) -> Result<()> {
    let dims = layout.factor_dims();
    if dims.len() != 3 || dims[QUTRIT] != 3 {
        return Err(Error::Layout("expected a [3, d1, d2] layout".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapInference {
    /// Inferred `F²`, clamped into `[0, 1]`.
    pub f_squared: f64,
    /// Unclamped value of `(1 − 2p_g)/(γ*η + γη*)`.
    pub raw: f64,
    pub out_of_range: bool,
}

/// Inverts `p_g = ½[1 − (γ*η + γη*)F²]`.
pub fn swap_test_infer(p_g: f64, control: &ControlAmplitudes) -> Result<SwapInference> {
    let cross = control.cross_term();
    if cross.abs() < 1e-12 {
        return Err(Error::NonInvertible("γ*η + γη* vanishes; the swap test carries no overlap information"));
    }
    let raw = (1.0 - 2.0 * p_g) / cross;
    let f_squared = raw.clamp(0.0, 1.0);
    Ok(SwapInference {
        f_squared,
        raw,
        out_of_range: f_squared != raw,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapTestRun {
    pub p_g: f64,
    pub inference: SwapInference,
    /// `|⟨φ|ψ⟩|²` computed directly.
    pub overlap_squared: f64,
}

/// Runs the closed effective gate and pulse on `|φ_q⟩|ψ⟩₁|φ⟩₂` and infers the overlap from `p_g`.
pub fn simulate_swap_test(
    params: &PhysicalParams,
    mode1: &Ket,
    mode2: &Ket,
    control: ControlAmplitudes,
    frame: MemoryFrame,
    integrator: &IntegratorConfig,
) -> Result<SwapTestRun> {
    if mode1.layout() != mode2.layout() {
        return Err(Error::Layout("swap test needs both memory states on the same cutoff".into()));
    }
    let d = mode1.dim();
    let p = PhysicalParams { d1: d, d2: d, ..params.clone() };
    let case = InitialCase::new(
        MemoryInput::Custom {
            mode1: mode1.clone(),
            mode2: mode2.clone(),
        },
        control,
    );
    let spec = ProtocolSpec {
        mode: HamiltonianMode::Effective,
        lossy: false,
        include_pulse: true,
        pulse_lossy: false,
        frame,
        gate_time: None,
        integrator: integrator.clone(),
        cutoff_tolerance: 1.0,
    };
    let result = run_protocol(&p, &case, &spec)?;
    let p_g = match &result.final_state {
        FinalState::Pure(k) => measure_control_pure(k)?.p_g,
        FinalState::Mixed(r) => measure_control(r)?.p_g,
    };
    let overlap = mode2.inner(mode1)?.norm_sqr();
    Ok(SwapTestRun {
        p_g,
        inference: swap_test_infer(p_g, &control)?,
        overlap_squared: overlap,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// `|N,0⟩ ± |0,N⟩`.
    Noon(usize),
    /// `|α,−β⟩ ± |−β,α⟩`.
    EntCoherent { alpha: f64, beta: f64 },
    /// `|ψ_e,φ_o⟩ ± |φ_o,ψ_e⟩` with even cat `ψ_e(α)` and odd cat `φ_o(β)`.
    EntCat { alpha: f64, beta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    pub kind: TargetKind,
    pub branch: Branch,
}

/// Normalized entangled memory state on a `[d1, d2]` layout.
pub fn target_entangled_state(target: &TargetState, layout: &SpaceLayout) -> Result<Ket> {
    let dims = layout.factor_dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::Layout("entangled targets need two memories with equal cutoffs".into()));
    }
    let d = dims[0];
    let (u, v) = match target.kind {
        TargetKind::Noon(n) => (fock_state(n, d)?, fock_state(0, d)?),
        TargetKind::EntCoherent { alpha, beta } => (
            coherent_state_with_tolerance(C64::new(alpha, 0.0), d, DEFAULT_TAIL_TOLERANCE)?,
            coherent_state_with_tolerance(C64::new(-beta, 0.0), d, DEFAULT_TAIL_TOLERANCE)?,
        ),
        TargetKind::EntCat { alpha, beta } => (
            cat_state_with_tolerance(alpha, CatParity::Even, d, DEFAULT_TAIL_TOLERANCE)?,
            cat_state_with_tolerance(beta, CatParity::Odd, d, DEFAULT_TAIL_TOLERANCE)?,
        ),
    };
    let sign = C64::new(target.branch.sign(), 0.0);
    let amps = u.tensor(&v).amplitudes() + v.tensor(&u).amplitudes() * sign;
    if amps.norm() < 1e-10 {
        return Err(Error::Degenerate("minus branch of identical memory states vanishes"));
    }
    Ket::normalized(layout.clone(), amps)
}

/// Squared norm of the unnormalized target before truncation, from exact overlaps.
pub fn target_norm_squared(target: &TargetState) -> f64 {
    let s = target.branch.sign();
    match target.kind {
        TargetKind::Noon(n) => 2.0 + if n == 0 { 2.0 * s } else { 0.0 },
        TargetKind::EntCoherent { alpha, beta } => {
            // |⟨α|−β⟩|² for real amplitudes.
            let o = (-(alpha + beta) * (alpha + beta)).exp();
            2.0 * (1.0 + s * o)
        }
        TargetKind::EntCat { .. } => 2.0,
    }
}

/// Memory states `|ψ±⟩ ∝ γ|φ⟩₁|ψ⟩₂ ± η|ψ⟩₁|φ⟩₂` for inputs `|ψ⟩₁|φ⟩₂`.
pub fn branch_states(case: &InitialCase, d: usize) -> Result<(Ket, Ket)> {
    let (psi, phi) = memory_kets(&case.input, d, d, case.tail_tolerance)?;
    let (g, e) = (case.control.gamma(), case.control.eta());
    let a = phi.tensor(&psi).amplitudes() * g;
    let b = psi.tensor(&phi).amplitudes() * e;
    let layout = SpaceLayout::new(vec![d, d])?;
    Ok((Ket::normalized(layout.clone(), &a + &b)?, Ket::normalized(layout, &a - &b)?))
}

/// `|g⟩⟨g|` on the gate layout.
pub fn ground_projector(layout: &SpaceLayout) -> Result<LinOp> {
    embed(&projector(Level::G), QUTRIT, layout)
}
