//! Fidelities, pure-state concurrence, and leakage/truncation audits.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, CVector, DensityOp, Ket, Level, SpaceLayout, C64, NORM_TOLERANCE, ZERO};
use crate::model::{MODE1, MODE2, QUTRIT};

/// `√⟨ψ|ρ|ψ⟩`, with round-off below zero clamped away.
pub fn state_fidelity(psi_id: &Ket, rho: &DensityOp) -> Result<f64> {
    if psi_id.layout() != rho.layout() {
        return Err(Error::Layout("target and state layouts differ".into()));
    }
    let v = psi_id.amplitudes();
    let q = v.dotc(&(rho.matrix() * v)).re;
    Ok(q.max(0.0).sqrt())
}

/// Same as [`state_fidelity`] for a pure state: `|⟨ψ_id|φ⟩|`.
pub fn pure_state_fidelity(psi_id: &Ket, phi: &Ket) -> Result<f64> {
    Ok(psi_id.inner(phi)?.norm())
}

/// `|⟨φ|ψ⟩|`, clamped into `[0, 1]`.
pub fn overlap_fidelity(psi: &Ket, phi: &Ket) -> Result<f64> {
    Ok(phi.inner(psi)?.norm().min(1.0))
}

/// Concurrence `√(2[1 − Tr ρ_r²])` of a normalized ket on two factors.
pub fn concurrence_oracle(psi: &Ket) -> Result<f64> {
    if psi.layout().num_factors() != 2 {
        return Err(Error::Layout("concurrence needs a state on exactly two factors".into()));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    let reduced = partial_trace(&psi.to_density(), &[0])?;
    Ok((2.0 * (1.0 - reduced.purity())).max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Closed-form concurrence as printed, with its radicand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    pub radicand: f64,
    /// Set when the radicand was negative and `value` was forced to 0.
    pub negative_radicand: bool,
}

/// `√(2 − ½{|γ|⁴ + |η|⁴ + 2[2|γ|²|η|² ± (γη* + γ*η)]F² + (γ²η*² + γ*²η²)F⁴})`,
/// evaluated exactly as written.
pub fn concurrence_closed_form(gamma: C64, eta: C64, f: f64, branch: Branch) -> Result<ClosedForm> {
    check_control(gamma, eta)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(alloc::format!("overlap F = {f} outside [0, 1]")));
    }
    let (g2, e2) = (gamma.norm_sqr(), eta.norm_sqr());
    let cross = (gamma * eta.conj() + gamma.conj() * eta).re;
    let quartic = (gamma * gamma * eta.conj() * eta.conj() + gamma.conj() * gamma.conj() * eta * eta).re;
    let bracket = g2 * g2 + e2 * e2 + 2.0 * (2.0 * g2 * e2 + branch.sign() * cross) * f * f + quartic * f.powi(4);
    let radicand = 2.0 - 0.5 * bracket;
    Ok(if radicand < 0.0 {
        ClosedForm {
            value: 0.0,
            radicand,
            negative_radicand: true,
        }
    } else {
        ClosedForm {
            value: radicand.sqrt(),
            radicand,
            negative_radicand: false,
        }
    })
}

fn check_control(gamma: C64, eta: C64) -> Result<()> {
    let s = gamma.norm_sqr() + eta.norm_sqr();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: s.sqrt() });
    }
    Ok(())
}

/// Normalized `γ|φ⟩|ψ⟩ ± η|ψ⟩|φ⟩` for qubit-sized memory states with real
/// overlap `⟨φ|ψ⟩ = F`.
pub fn branch_state_with_overlap(gamma: C64, eta: C64, f: f64, branch: Branch) -> Result<Ket> {
    check_control(gamma, eta)?;
    let layout = SpaceLayout::new(vec![2, 2])?;
    let phi = [C64::new(1.0, 0.0), ZERO];
    let psi = [C64::new(f, 0.0), C64::new((1.0 - f * f).max(0.0).sqrt(), 0.0)];
    let sign = C64::new(branch.sign(), 0.0);
    let amps = CVector::from_fn(4, |k, _| {
        let (i, j) = (k / 2, k % 2);
        gamma * phi[i] * psi[j] + sign * eta * psi[i] * phi[j]
    });
    if amps.norm() < 1e-12 {
        return Err(Error::Degenerate("branch state vanishes"));
    }
    Ket::normalized(layout, amps)
}

/// `Tr ρ_r²` of the normalized plus branch for γ = η = 1/√2 and real overlap `F`.
pub fn equal_weight_plus_purity(f: f64) -> f64 {
    let f2 = f * f;
    (2.0 + 12.0 * f2 + 2.0 * f2 * f2) / (4.0 * (1.0 + f2) * (1.0 + f2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceRow {
    pub gamma: C64,
    pub eta: C64,
    pub f: f64,
    pub branch: Branch,
    pub printed: f64,
    pub oracle: f64,
    pub difference: f64,
    pub negative_radicand: bool,
}

/// Compares the printed closed form against the partial-trace oracle and
/// keeps the rows where they differ by more than `threshold`.
pub fn concurrence_divergence_table(
    points: &[(C64, C64, f64, Branch)],
    threshold: f64,
) -> Result<Vec<DivergenceRow>> {
    let mut rows = Vec::new();
    for &(gamma, eta, f, branch) in points {
        let printed = concurrence_closed_form(gamma, eta, f, branch)?;
        let oracle = match branch_state_with_overlap(gamma, eta, f, branch) {
            Ok(psi) => concurrence_oracle(&psi)?,
            Err(Error::Degenerate(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        let difference = printed.value - oracle;
        if !(difference.abs() <= threshold) {
            rows.push(DivergenceRow {
                gamma,
                eta,
                f,
                branch,
                printed: printed.value,
                oracle,
                difference,
                negative_radicand: printed.negative_radicand,
            });
        }
    }
    Ok(rows)
}

/// Default comparison grid: a few control splits, overlaps and both branches.
pub fn default_divergence_points() -> Vec<(C64, C64, f64, Branch)> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let controls = [
        (C64::new(s, 0.0), C64::new(s, 0.0)),
        (C64::new(1.0, 0.0), ZERO),
        (C64::new(0.6, 0.0), C64::new(0.8, 0.0)),
        (C64::new(s, 0.0), C64::new(0.0, s)),
    ];
    let mut out = Vec::new();
    for (g, e) in controls {
        for f in [0.0, 0.3, 0.5, 0.7, 0.9, 1.0] {
            for b in [Branch::Plus, Branch::Minus] {
                out.push((g, e, f, b));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeakageReport {
    /// Population of the auxiliary level |a⟩.
    pub leak_a: f64,
    /// Population at `n = d − 1` of mode 1 and mode 2.
    pub top_fock_mass: [f64; 2],
}

impl LeakageReport {
    pub fn combined_top_mass(&self) -> f64 {
        self.top_fock_mass[0] + self.top_fock_mass[1]
    }
}

/// Reads the |a⟩ and top-Fock populations off the diagonal of a gate-layout state.
pub fn leakage_and_truncation(rho: &DensityOp) -> Result<LeakageReport> {
    populations_report(rho.layout(), |i| rho.population(i))
}

pub fn leakage_and_truncation_pure(psi: &Ket) -> Result<LeakageReport> {
    populations_report(psi.layout(), |i| psi.amplitude(i).norm_sqr())
}

fn populations_report(layout: &SpaceLayout, pop: impl Fn(usize) -> f64) -> Result<LeakageReport> {
    let dims = layout.factor_dims();
    if dims.len() != 3 || dims[QUTRIT] != 3 {
        return Err(Error::Layout("expected a [3, d1, d2] layout".into()));
    }
    let mut leak = 0.0;
    let mut top = [0.0; 2];
    for i in 0..layout.total_dim() {
        let p = pop(i);
        if layout.digit(i, QUTRIT) == Level::A.index() {
            leak += p;
        }
        if layout.digit(i, MODE1) == dims[MODE1] - 1 {
            top[0] += p;
        }
        if layout.digit(i, MODE2) == dims[MODE2] - 1 {
            top[1] += p;
        }
    }
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    Ok(LeakageReport {
        leak_a: clamp(leak),
        top_fock_mass: [clamp(top[0]), clamp(top[1])],
    })
}
