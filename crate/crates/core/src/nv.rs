//! NV-ensemble memories: a qutrit coupled to `N` two-level spins, the
//! collective bosonic mode, and a check that the two agree at low excitation.
//!
//! Spin factor index 0 is `m_s = 0`, index 1 is `m_s = +1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{propagate_pure, IntegratorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, embed, transition_operator, CMatrix, CVector, Ket, Level, LinOp, SpaceLayout, C64, ONE, ZERO,
};
use crate::model::{FrameHamiltonian, PhysicalParams};

/// Largest spin count simulated microscopically (dimension `3·2^N`).
pub const MICROSCOPIC_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinEnsembleSpec {
    /// Per-spin couplings μ_k in rad/s.
    pub mu: Vec<f64>,
    /// Detuning Δ in rad/s.
    pub delta: f64,
}

impl SpinEnsembleSpec {
    pub fn uniform(n: usize, mu: f64, delta: f64) -> Self {
        Self { mu: vec![mu; n], delta }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.is_empty() {
            return Err(Error::InvalidArgument("ensemble needs at least one spin".into()));
        }
        if let Some(&m) = self.mu.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter {
                key: "mu",
                value: m,
                reason: "couplings must be finite",
            });
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter {
                key: "delta",
                value: self.delta,
                reason: "must be finite",
            });
        }
        Ok(())
    }
}

/// `(μ̄, μ)` with `μ̄² = Σμ_k²/N` and `μ = √N·μ̄`.
pub fn collective_coupling(spec: &SpinEnsembleSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let n = spec.n() as f64;
    let mu_bar = (spec.mu.iter().map(|m| m * m).sum::<f64>() / n).sqrt();
    Ok((mu_bar, n.sqrt() * mu_bar))
}

fn check_micro(spec: &SpinEnsembleSpec) -> Result<()> {
    spec.validate()?;
    if spec.n() > MICROSCOPIC_LIMIT {
        return Err(Error::InvalidDimension {
            dim: spec.n(),
            reason: "spin count exceeds the microscopic limit",
        });
    }
    Ok(())
}

/// `[3, 2, …, 2]`.
pub fn spin_layout(n: usize) -> Result<SpaceLayout> {
    let mut dims = vec![3];
    dims.extend(core::iter::repeat(2).take(n));
    SpaceLayout::new(dims)
}

fn spin_lowering(k: usize, layout: &SpaceLayout) -> Result<LinOp> {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = ONE;
    embed(&LinOp::new(SpaceLayout::single(2)?, m)?, k + 1, layout)
}

fn ups(layout: &SpaceLayout, i: usize) -> usize {
    (1..layout.num_factors()).map(|s| layout.digit(i, s)).sum()
}

/// Static part and frame `K = −Δ·(number of spins up)`.
pub fn spin_frame_hamiltonian(spec: &SpinEnsembleSpec) -> Result<FrameHamiltonian> {
    check_micro(spec)?;
    let layout = spin_layout(spec.n())?;
    let sigma = embed(&transition_operator(Level::G, Level::A), 0, &layout)?;
    let mut up = LinOp::zeros(&layout);
    for (k, &mu) in spec.mu.iter().enumerate() {
        let term = sigma.compose(&spin_lowering(k, &layout)?)?.scale(C64::new(mu, 0.0));
        up = up.add(&term)?;
    }
    let h = up.add(&up.adjoint())?.with_hermitian_hint(true);
    let frame = (0..layout.total_dim()).map(|i| -spec.delta * ups(&layout, i) as f64).collect();
    FrameHamiltonian::new(&h, frame)
}

/// `H(t) = Σ_k μ_k(σ⁺_ag τ⁻_k e^{iΔt} + h.c.)`.
pub fn spin_hamiltonian(spec: &SpinEnsembleSpec, t: f64) -> Result<LinOp> {
    Ok(spin_frame_hamiltonian(spec)?.at(t))
}

/// Spins up plus the |a⟩ population.
pub fn spin_excitation_number(n: usize) -> Result<LinOp> {
    let layout = spin_layout(n)?;
    let dim = layout.total_dim();
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |i, _| {
        let a = usize::from(layout.digit(i, 0) == Level::A.index());
        C64::new((ups(&layout, i) + a) as f64, 0.0)
    }));
    LinOp::new(layout, m)
}

/// `b† = (1/μ) Σ_k μ_k τ⁺_k` on the spin layout.
pub fn collective_creation(spec: &SpinEnsembleSpec) -> Result<LinOp> {
    check_micro(spec)?;
    let (_, mu) = collective_coupling(spec)?;
    if mu == 0.0 {
        return Err(Error::Degenerate("all couplings vanish; no collective mode"));
    }
    let layout = spin_layout(spec.n())?;
    let mut b = LinOp::zeros(&layout);
    for (k, &m) in spec.mu.iter().enumerate() {
        b = b.add(&spin_lowering(k, &layout)?.adjoint().scale(C64::new(m / mu, 0.0)))?;
    }
    Ok(b)
}

/// Gate parameters with `g_i ↦ μ⁽ⁱ⁾ = √N μ̄` and `δ_i ↦ Δ_i`; everything
/// else (pulse, rates, cutoffs) is taken from `template`.
pub fn bosonic_equivalent(
    first: &SpinEnsembleSpec,
    second: &SpinEnsembleSpec,
    template: &PhysicalParams,
) -> Result<PhysicalParams> {
    let (_, mu1) = collective_coupling(first)?;
    let (_, mu2) = collective_coupling(second)?;
    Ok(PhysicalParams {
        g1: mu1,
        g2: mu2,
        delta1: first.delta,
        delta2: second.delta,
        ..template.clone()
    })
}

/// Qutrit + one bosonic mode with `H = μ(e^{iΔt} b σ⁺_ag + h.c.)`.
fn bosonic_frame_hamiltonian(mu: f64, delta: f64, cutoff: usize) -> Result<FrameHamiltonian> {
    let layout = SpaceLayout::new(vec![3, cutoff])?;
    let sigma = embed(&transition_operator(Level::G, Level::A), 0, &layout)?;
    let b = embed(&annihilation(cutoff)?, 1, &layout)?;
    let up = b.compose(&sigma)?.scale(C64::new(mu, 0.0));
    let h = up.add(&up.adjoint())?;
    let frame = (0..layout.total_dim()).map(|i| -delta * layout.digit(i, 1) as f64).collect();
    FrameHamiltonian::new(&h, frame)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowExcitationReport {
    pub n_spins: usize,
    pub excitations: usize,
    /// Largest trace distance over the sampled times.
    pub max_deviation: f64,
    /// `(t, trace distance)` at each sample.
    pub samples: Vec<(f64, f64)>,
}

/// Compares spin-ensemble dynamics started from `|g⟩⊗(b†)ⁿ|0…0⟩` against the
/// bosonized model started from `|g, n⟩`, mapping the boson into the spin
/// space through `|m⟩ ↦ (b†)^m|0…0⟩/‖·‖`.
pub fn validate_low_excitation(
    spec: &SpinEnsembleSpec,
    max_excitation: usize,
    horizon: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
) -> Result<LowExcitationReport> {
    check_micro(spec)?;
    if max_excitation == 0 || max_excitation > spec.n() {
        return Err(Error::InvalidArgument(format!(
            "excitation number {max_excitation} must lie in 1..={}",
            spec.n()
        )));
    }
    if n_samples == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument("need a positive horizon and at least one sample".into()));
    }
    let (_, mu) = collective_coupling(spec)?;
    let micro_h = spin_frame_hamiltonian(spec)?;
    let cutoff = max_excitation + 1;
    let boson_h = bosonic_frame_hamiltonian(mu, spec.delta, cutoff)?;
    let layout = spin_layout(spec.n())?;
    let spin_dim = layout.total_dim() / 3;

    let b_dag = collective_creation(spec)?;
    let mut dicke: Vec<CVector> = Vec::with_capacity(cutoff);
    let mut v = CVector::zeros(layout.total_dim());
    v[0] = ONE;
    for _ in 0..cutoff {
        let norm = v.norm();
        dicke.push(v.rows(0, spin_dim).into_owned() / C64::new(norm, 0.0));
        v = b_dag.matrix() * &v;
    }
    let embed_boson = |psi: &Ket| -> CVector {
        let mut out = CVector::zeros(layout.total_dim());
        for q in 0..3 {
            for (m, d) in dicke.iter().enumerate() {
                let amp = psi.amplitude(q * cutoff + m);
                if amp != ZERO {
                    let mut block = out.rows_mut(q * spin_dim, spin_dim);
                    block += d * amp;
                }
            }
        }
        out
    };

    let mut micro = Ket::normalized(layout.clone(), {
        let mut x = CVector::zeros(layout.total_dim());
        x.rows_mut(0, spin_dim).copy_from(&dicke[max_excitation]);
        x
    })?;
    let boson_layout = SpaceLayout::new(vec![3, cutoff])?;
    let mut boson = Ket::basis(&boson_layout, &[Level::G.index(), max_excitation])?;

    let mut samples = Vec::with_capacity(n_samples);
    let mut max_dev: f64 = 0.0;
    for k in 0..n_samples {
        let t0 = horizon * k as f64 / n_samples as f64;
        let t1 = horizon * (k + 1) as f64 / n_samples as f64;
        micro = propagate_pure(&micro_h, &micro, t0, t1, cfg)?;
        boson = propagate_pure(&boson_h, &boson, t0, t1, cfg)?;
        let mapped = embed_boson(&boson);
        let a = &mapped / C64::new(mapped.norm(), 0.0);
        let b = micro.amplitudes() / C64::new(micro.norm(), 0.0);
        // Pure-state trace distance, as the norm of the component of b orthogonal to a.
        let dev = (&b - &a * a.dotc(&b)).norm();
        max_dev = max_dev.max(dev);
        samples.push((t1, dev));
    }
    Ok(LowExcitationReport {
        n_spins: spec.n(),
        excitations: max_excitation,
        max_deviation: max_dev,
        samples,
    })
}
