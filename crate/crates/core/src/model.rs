//! Parameters, Hamiltonians and collapse operators of the qutrit + two-memory system.
//!
//! All frequencies are angular (rad/s) and all rates are in 1/s. Hamiltonians
//! are in the interaction picture, where only detunings appear.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, embed, number, transition_operator, CMatrix, Level, LinOp, SpaceLayout, C64,
};
use crate::sparse::CsrMatrix;

/// Ratio δ/g below which the dispersive treatment is flagged as questionable.
pub const DISPERSIVE_WARNING_RATIO: f64 = 5.0;
/// Relative tolerance for the symmetric-parameter condition.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Slots of the gate layout.
pub const QUTRIT: usize = 0;
pub const MODE1: usize = 1;
pub const MODE2: usize = 2;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalParams {
    pub g1: f64,
    pub g2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub omega_rabi: f64,
    pub theta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma_ag: f64,
    pub gamma_ea: f64,
    pub gamma_eg: f64,
    pub gamma_phi_a: f64,
    pub gamma_phi_e: f64,
    pub d1: usize,
    pub d2: usize,
}

/// Non-fatal findings from [`PhysicalParams::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum ParamWarning {
    WeakDispersion { mode: usize, ratio: f64 },
}

impl core::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamWarning::WeakDispersion { mode, ratio } => write!(
                f,
                "mode {mode}: delta/g = {ratio:.3} is below {DISPERSIVE_WARNING_RATIO}; the dispersive picture is marginal"
            ),
        }
    }
}

impl PhysicalParams {
    pub const COUPLING_OVER_2PI: f64 = 70e6;
    pub const RABI_OVER_2PI: f64 = 100e6;
    pub const MEMORY_LIFETIME: f64 = 5e-6;
    pub const RELAXATION_TIME: f64 = 5e-6;
    pub const DEPHASING_TIME: f64 = 2e-6;

    /// Reference operating point: g/2π = 70 MHz, δ = D·g on both memories,
    /// Ω/2π = 100 MHz, θ = −π/2, 5 μs memory and relaxation lifetimes,
    /// 2 μs dephasing times.
    pub fn reference(d_ratio: f64, cutoff: usize) -> Self {
        let g = TWO_PI * Self::COUPLING_OVER_2PI;
        Self {
            g1: g,
            g2: g,
            delta1: d_ratio * g,
            delta2: d_ratio * g,
            omega_rabi: TWO_PI * Self::RABI_OVER_2PI,
            theta: -PI / 2.0,
            kappa1: 1.0 / Self::MEMORY_LIFETIME,
            kappa2: 1.0 / Self::MEMORY_LIFETIME,
            gamma_ag: 1.0 / Self::RELAXATION_TIME,
            gamma_ea: 1.0 / Self::RELAXATION_TIME,
            gamma_eg: 1.0 / Self::RELAXATION_TIME,
            gamma_phi_a: 1.0 / Self::DEPHASING_TIME,
            gamma_phi_e: 1.0 / Self::DEPHASING_TIME,
            d1: cutoff,
            d2: cutoff,
        }
    }

    /// Same couplings and detunings with every loss channel switched off.
    pub fn closed(&self) -> Self {
        Self {
            kappa1: 0.0,
            kappa2: 0.0,
            gamma_ag: 0.0,
            gamma_ea: 0.0,
            gamma_eg: 0.0,
            gamma_phi_a: 0.0,
            gamma_phi_e: 0.0,
            ..self.clone()
        }
    }

    /// Applies δ₂ = c·δ₁ and g₂ = d·g₁.
    pub fn with_inhomogeneity(&self, c: f64, d: f64) -> Self {
        Self {
            delta2: c * self.delta1,
            g2: d * self.g1,
            ..self.clone()
        }
    }

    pub fn layout(&self) -> Result<SpaceLayout> {
        SpaceLayout::qutrit_modes(self.d1, self.d2)
    }

    pub fn is_symmetric(&self) -> bool {
        rel_close(self.delta1, self.delta2) && rel_close(self.g1, self.g2)
    }

    pub fn rates(&self) -> [(&'static str, f64); 7] {
        [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma_ag", self.gamma_ag),
            ("gamma_ea", self.gamma_ea),
            ("gamma_eg", self.gamma_eg),
            ("gamma_phi_a", self.gamma_phi_a),
            ("gamma_phi_e", self.gamma_phi_e),
        ]
    }

    pub fn validate(&self) -> Result<Vec<ParamWarning>> {
        let positive = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("omega_rabi", self.omega_rabi),
        ];
        for (key, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter {
                    key,
                    value,
                    reason: "must be finite and positive",
                });
            }
        }
        for (key, value) in self.rates() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter {
                    key,
                    value,
                    reason: "rates must be finite and non-negative",
                });
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter {
                key: "theta",
                value: self.theta,
                reason: "must be finite",
            });
        }
        for (key, d) in [("d1", self.d1), ("d2", self.d2)] {
            if d < 2 {
                return Err(Error::InvalidParameter {
                    key,
                    value: d as f64,
                    reason: "cutoff must be at least 2",
                });
            }
        }
        let mut warnings = Vec::new();
        for (mode, g, delta) in [(1, self.g1, self.delta1), (2, self.g2, self.delta2)] {
            let ratio = delta / g;
            if ratio < DISPERSIVE_WARNING_RATIO {
                warnings.push(ParamWarning::WeakDispersion { mode, ratio });
            }
        }
        Ok(warnings)
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMMETRY_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedParams {
    pub lambda: f64,
    pub omega_stark: f64,
    pub delta_prime: f64,
    pub t_swap: f64,
    pub t_pulse: f64,
}

pub fn derive(params: &PhysicalParams) -> Result<DerivedParams> {
    params.validate()?;
    let lambda = 0.5 * params.g1 * params.g2 * (1.0 / params.delta1 + 1.0 / params.delta2);
    Ok(DerivedParams {
        lambda,
        omega_stark: params.g1 * params.g1 / params.delta1,
        delta_prime: params.delta2 - params.delta1,
        t_swap: PI / (2.0 * lambda),
        t_pulse: PI / (4.0 * params.omega_rabi),
    })
}

/// Operator with the time dependence `H(t)_ij = S_ij · e^{i(k_i − k_j)t}` of a
/// frame rotating under the diagonal generator `K = diag(k)`.
#[derive(Clone, Debug)]
pub struct FrameHamiltonian {
    layout: SpaceLayout,
    pattern: CsrMatrix,
    freq_index: Vec<u16>,
    freqs: Vec<f64>,
    frame: Vec<f64>,
}

impl FrameHamiltonian {
    /// Drops entries with modulus at or below `1e-300`.
    pub fn new(static_part: &LinOp, frame: Vec<f64>) -> Result<Self> {
        let n = static_part.dim();
        if frame.len() != n {
            return Err(Error::Layout(format!("frame has {} entries for dimension {n}", frame.len())));
        }
        let pattern = CsrMatrix::from_dense(static_part.matrix(), 1e-300);
        let mut freqs: Vec<f64> = Vec::new();
        let mut freq_index = Vec::with_capacity(pattern.nnz());
        for (i, j, _) in pattern.iter() {
            let nu = frame[i] - frame[j];
            let k = match freqs.iter().position(|&f| f == nu) {
                Some(k) => k,
                None => {
                    freqs.push(nu);
                    freqs.len() - 1
                }
            };
            freq_index.push(k as u16);
        }
        if freqs.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument("too many distinct frame frequencies".into()));
        }
        Ok(Self {
            layout: static_part.layout().clone(),
            pattern,
            freq_index,
            freqs,
            frame,
        })
    }

    pub fn time_independent(op: &LinOp) -> Result<Self> {
        Self::new(op, vec![0.0; op.dim()])
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    pub fn frame(&self) -> &[f64] {
        &self.frame
    }

    /// Largest |k_i − k_j| over the stored entries.
    pub fn max_frequency(&self) -> f64 {
        self.freqs.iter().map(|f| f.abs()).fold(0.0, f64::max)
    }

    pub fn fill_values(&self, t: f64, out: &mut [C64]) {
        let phases: Vec<C64> = self.freqs.iter().map(|&f| C64::new(0.0, f * t).exp()).collect();
        for ((o, &s), &k) in out.iter_mut().zip(self.pattern.values()).zip(&self.freq_index) {
            *o = s * phases[k as usize];
        }
    }

    pub fn at(&self, t: f64) -> LinOp {
        let mut csr = self.pattern.clone();
        self.fill_values(t, csr.values_mut());
        LinOp::new(self.layout.clone(), csr.to_dense())
            .expect("pattern matches layout")
            .with_hermitian_hint(true)
    }
}

fn qutrit_op(layout: &SpaceLayout, from: Level, to: Level) -> Result<LinOp> {
    embed(&transition_operator(from, to), QUTRIT, layout)
}

fn mode_annihilation(layout: &SpaceLayout, slot: usize) -> Result<LinOp> {
    embed(&annihilation(layout.factor_dims()[slot])?, slot, layout)
}

fn mode_number(layout: &SpaceLayout, slot: usize) -> Result<LinOp> {
    embed(&number(layout.factor_dims()[slot])?, slot, layout)
}

/// Diagonal of `K = −(δ₁n₁ + δ₂n₂)`.
pub fn memory_frame(params: &PhysicalParams, layout: &SpaceLayout) -> Vec<f64> {
    (0..layout.total_dim())
        .map(|i| {
            let n1 = layout.digit(i, MODE1) as f64;
            let n2 = layout.digit(i, MODE2) as f64;
            -(params.delta1 * n1 + params.delta2 * n2)
        })
        .collect()
}

fn hermitian_part_sum(op: &LinOp) -> Result<LinOp> {
    Ok(op.add(&op.adjoint())?.with_hermitian_hint(true))
}

/// Static part of the full coupling, `g₁a₁σ⁺_ag + g₂a₂σ⁺_ag + h.c.`.
fn full_static(params: &PhysicalParams, layout: &SpaceLayout) -> Result<LinOp> {
    let sigma = qutrit_op(layout, Level::G, Level::A)?;
    let a1 = mode_annihilation(layout, MODE1)?;
    let a2 = mode_annihilation(layout, MODE2)?;
    let up = a1
        .compose(&sigma)?
        .scale(C64::new(params.g1, 0.0))
        .add(&a2.compose(&sigma)?.scale(C64::new(params.g2, 0.0)))?;
    hermitian_part_sum(&up)
}

pub fn full_frame_hamiltonian(params: &PhysicalParams) -> Result<FrameHamiltonian> {
    params.validate()?;
    let layout = params.layout()?;
    FrameHamiltonian::new(&full_static(params, &layout)?, memory_frame(params, &layout))
}

/// `H(t) = g₁(e^{iδ₁t}a₁σ⁺_ag + h.c.) + g₂(e^{iδ₂t}a₂σ⁺_ag + h.c.)`.
pub fn full_hamiltonian(params: &PhysicalParams, t: f64) -> Result<LinOp> {
    Ok(full_frame_hamiltonian(params)?.at(t))
}

/// Stark part `H₀ = −ω(n₁+n₂)|g⟩⟨g|` and exchange part `Hᵢ = −λ(a₁†a₂ + a₁a₂†)|g⟩⟨g|`.
pub fn reduced_effective_parts(params: &PhysicalParams) -> Result<(LinOp, LinOp)> {
    params.validate()?;
    if !params.is_symmetric() {
        return Err(Error::ConditionViolated(format!(
            "reduced effective Hamiltonian needs delta1 = delta2 and g1 = g2 (got delta {:e}/{:e}, g {:e}/{:e})",
            params.delta1, params.delta2, params.g1, params.g2
        )));
    }
    let layout = params.layout()?;
    let derived = derive(params)?;
    let pg = qutrit_op(&layout, Level::G, Level::G)?;
    let n_tot = mode_number(&layout, MODE1)?.add(&mode_number(&layout, MODE2)?)?;
    let h0 = n_tot.compose(&pg)?.scale(C64::new(-derived.omega_stark, 0.0));
    let a1 = mode_annihilation(&layout, MODE1)?;
    let a2 = mode_annihilation(&layout, MODE2)?;
    let hop = hermitian_part_sum(&a1.adjoint().compose(&a2)?)?;
    let hi = hop.compose(&pg)?.scale(C64::new(-derived.lambda, 0.0));
    Ok((h0.with_hermitian_hint(true), hi.with_hermitian_hint(true)))
}

/// Second-order dispersive Hamiltonian. The exchange terms carry
/// `e^{iδ′t}a₁†a₂ + e^{−iδ′t}a₁a₂†` on both the |a⟩ and |g⟩ branches, the
/// phases set by the memory frame.
fn general_effective_static(params: &PhysicalParams, layout: &SpaceLayout) -> Result<LinOp> {
    let derived = derive(params)?;
    let chi1 = params.g1 * params.g1 / params.delta1;
    let chi2 = params.g2 * params.g2 / params.delta2;
    let pa = qutrit_op(layout, Level::A, Level::A)?;
    let pg = qutrit_op(layout, Level::G, Level::G)?;
    let n1 = mode_number(layout, MODE1)?;
    let n2 = mode_number(layout, MODE2)?;
    let id = LinOp::identity(layout);
    let stark_a = n1
        .add(&id)?
        .scale(C64::new(chi1, 0.0))
        .add(&n2.add(&id)?.scale(C64::new(chi2, 0.0)))?
        .compose(&pa)?;
    let stark_g = n1
        .scale(C64::new(chi1, 0.0))
        .add(&n2.scale(C64::new(chi2, 0.0)))?
        .compose(&pg)?;
    let a1 = mode_annihilation(layout, MODE1)?;
    let a2 = mode_annihilation(layout, MODE2)?;
    let hop = hermitian_part_sum(&a1.adjoint().compose(&a2)?)?;
    let exchange = hop.compose(&pa.sub(&pg)?)?.scale(C64::new(derived.lambda, 0.0));
    Ok(stark_a.sub(&stark_g)?.add(&exchange)?.with_hermitian_hint(true))
}

pub fn effective_frame_hamiltonian(params: &PhysicalParams, reduced: bool) -> Result<FrameHamiltonian> {
    params.validate()?;
    let layout = params.layout()?;
    if reduced {
        let (h0, hi) = reduced_effective_parts(params)?;
        FrameHamiltonian::time_independent(&h0.add(&hi)?)
    } else {
        FrameHamiltonian::new(&general_effective_static(params, &layout)?, memory_frame(params, &layout))
    }
}

pub fn effective_hamiltonian(params: &PhysicalParams, t: f64, reduced: bool) -> Result<LinOp> {
    Ok(effective_frame_hamiltonian(params, reduced)?.at(t))
}

/// `Ω(e^{iθ}|g⟩⟨e| + e^{−iθ}|e⟩⟨g|)` on the qutrit factor alone.
pub fn pulse_qutrit(omega_rabi: f64, theta: f64) -> Result<LinOp> {
    if !(omega_rabi > 0.0) || !omega_rabi.is_finite() {
        return Err(Error::InvalidParameter {
            key: "omega_rabi",
            value: omega_rabi,
            reason: "must be finite and positive",
        });
    }
    let mut m = CMatrix::zeros(3, 3);
    let c = C64::from_polar(omega_rabi, theta);
    m[(Level::G.index(), Level::E.index())] = c;
    m[(Level::E.index(), Level::G.index())] = c.conj();
    Ok(LinOp::new(SpaceLayout::single(3)?, m)?.with_hermitian_hint(true))
}

/// Readout pulse embedded in the full layout; identity on both memories.
pub fn pulse_hamiltonian(omega_rabi: f64, theta: f64, layout: &SpaceLayout) -> Result<LinOp> {
    embed(&pulse_qutrit(omega_rabi, theta)?, QUTRIT, layout)
}

/// Closed-form pulse propagator `exp(−iH t)` on the qutrit:
/// `cos(Ωt)` on the g/e block, `−i sin(Ωt)·e^{±iθ}` off-diagonal, |a⟩ untouched.
pub fn pulse_propagator(omega_rabi: f64, theta: f64, t: f64, layout: &SpaceLayout) -> Result<LinOp> {
    let (s, c) = (omega_rabi * t).sin_cos();
    let mut m = CMatrix::zeros(3, 3);
    let (g, a, e) = (Level::G.index(), Level::A.index(), Level::E.index());
    m[(g, g)] = C64::new(c, 0.0);
    m[(e, e)] = C64::new(c, 0.0);
    m[(a, a)] = C64::new(1.0, 0.0);
    m[(g, e)] = C64::new(0.0, -s) * C64::from_polar(1.0, theta);
    m[(e, g)] = C64::new(0.0, -s) * C64::from_polar(1.0, -theta);
    embed(&LinOp::new(SpaceLayout::single(3)?, m)?, QUTRIT, layout)
}

/// Rate-scaled jump operators in the fixed order
/// `√κ₁a₁, √κ₂a₂, √γ_ag|g⟩⟨a|, √γ_ea|a⟩⟨e|, √γ_eg|g⟩⟨e|, √γ_φa|a⟩⟨a|, √γ_φe|e⟩⟨e|`.
/// Channels with zero rate are left out.
pub fn collapse_operators(params: &PhysicalParams) -> Result<Vec<LinOp>> {
    Ok(labelled_collapse_operators(params)?.into_iter().map(|(_, op)| op).collect())
}

pub fn labelled_collapse_operators(params: &PhysicalParams) -> Result<Vec<(&'static str, LinOp)>> {
    params.validate()?;
    let layout = params.layout()?;
    let channels: [(&'static str, f64, LinOp); 7] = [
        ("kappa1", params.kappa1, mode_annihilation(&layout, MODE1)?),
        ("kappa2", params.kappa2, mode_annihilation(&layout, MODE2)?),
        ("gamma_ag", params.gamma_ag, qutrit_op(&layout, Level::A, Level::G)?),
        ("gamma_ea", params.gamma_ea, qutrit_op(&layout, Level::E, Level::A)?),
        ("gamma_eg", params.gamma_eg, qutrit_op(&layout, Level::E, Level::G)?),
        ("gamma_phi_a", params.gamma_phi_a, qutrit_op(&layout, Level::A, Level::A)?),
        ("gamma_phi_e", params.gamma_phi_e, qutrit_op(&layout, Level::E, Level::E)?),
    ];
    Ok(channels
        .into_iter()
        .filter(|(_, rate, _)| *rate > 0.0)
        .map(|(name, rate, op)| (name, op.scale(C64::new(rate.sqrt(), 0.0))))
        .collect())
}

/// Total excitation `n₁ + n₂ + |a⟩⟨a|`, conserved by the full coupling.
pub fn excitation_number(layout: &SpaceLayout) -> Result<LinOp> {
    mode_number(layout, MODE1)?
        .add(&mode_number(layout, MODE2)?)?
        .add(&qutrit_op(layout, Level::A, Level::A)?)
}

/// Human-readable description of the operating point.
pub fn describe(params: &PhysicalParams) -> String {
    format!(
        "g1/2pi={:.6e} Hz g2/2pi={:.6e} Hz delta1/2pi={:.6e} Hz delta2/2pi={:.6e} Hz cutoffs=({}, {})",
        params.g1 / TWO_PI,
        params.g2 / TWO_PI,
        params.delta1 / TWO_PI,
        params.delta2 / TWO_PI,
        params.d1,
        params.d2
    )
}
