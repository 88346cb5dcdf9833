//! Time evolution of kets and density operators.
//!
//! Both the Schrödinger and the Lindblad equations are integrated in the
//! interaction picture. Time-dependent operators expose a fixed sparsity
//! pattern whose values are refreshed at every stage, so the inner loops
//! never allocate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, DensityOp, Ket, LinOp, SpaceLayout, C64, ZERO};
use crate::model::FrameHamiltonian;
use crate::sparse::CsrMatrix;

const MINUS_I: C64 = C64::new(0.0, -1.0);

/// An operator-valued function of time on a fixed sparsity pattern.
pub trait TimeDependentOp: Sync {
    fn layout(&self) -> &SpaceLayout;
    /// Sparsity pattern; the stored values are not used by the integrators.
    fn pattern(&self) -> &CsrMatrix;
    /// Writes the pattern's values at time `t` into `out`.
    fn fill_values(&self, t: f64, out: &mut [C64]);
    /// Fastest explicit oscillation in rad/s.
    fn max_frequency(&self) -> f64;

    fn at(&self, t: f64) -> LinOp {
        let mut csr = self.pattern().clone();
        self.fill_values(t, csr.values_mut());
        LinOp::new(self.layout().clone(), csr.to_dense()).expect("pattern matches layout")
    }
}

impl TimeDependentOp for FrameHamiltonian {
    fn layout(&self) -> &SpaceLayout {
        FrameHamiltonian::layout(self)
    }

    fn pattern(&self) -> &CsrMatrix {
        FrameHamiltonian::pattern(self)
    }

    fn fill_values(&self, t: f64, out: &mut [C64]) {
        FrameHamiltonian::fill_values(self, t, out)
    }

    fn max_frequency(&self) -> f64 {
        FrameHamiltonian::max_frequency(self)
    }
}

/// Wraps a closure returning dense operators. Every entry is part of the
/// pattern, so this is only meant for small systems.
pub struct ClosureOp<F> {
    layout: SpaceLayout,
    pattern: CsrMatrix,
    max_frequency: f64,
    f: F,
}

impl<F: Fn(f64) -> CMatrix + Sync> ClosureOp<F> {
    pub fn new(layout: SpaceLayout, max_frequency: f64, f: F) -> Self {
        let n = layout.total_dim();
        let pattern = CsrMatrix::from_dense(&CMatrix::from_element(n, n, C64::new(1.0, 0.0)), 0.0);
        Self {
            layout,
            pattern,
            max_frequency,
            f,
        }
    }
}

impl<F: Fn(f64) -> CMatrix + Sync> TimeDependentOp for ClosureOp<F> {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn fill_values(&self, t: f64, out: &mut [C64]) {
        let m = (self.f)(t);
        let n = self.layout.total_dim();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = m[(i, j)];
            }
        }
    }

    fn max_frequency(&self) -> f64 {
        self.max_frequency
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta on a uniform grid.
    Rk4,
    /// Dormand–Prince 5(4) with embedded error control.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Step in seconds; `None` picks one from the fastest time scale.
    pub dt: Option<f64>,
    pub method: Method,
    /// Allowed drift of the norm (kets) or trace (density operators).
    pub tolerance: f64,
    pub max_steps: usize,
    /// Steps per period of the fastest time scale when `dt` is `None`.
    pub steps_per_period: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Diagonalize the final density operator and reject negative eigenvalues.
    pub check_positivity: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: None,
            method: Method::Rk4,
            tolerance: 1e-8,
            max_steps: 50_000_000,
            steps_per_period: 40,
            rtol: 1e-10,
            atol: 1e-12,
            check_positivity: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt: Some(dt),
            ..Self::default()
        }
    }

    /// Step for a problem whose fastest angular frequency is `rate`.
    pub fn resolve_dt(&self, rate: f64) -> Result<f64> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidParameter {
                    key: "dt",
                    value: dt,
                    reason: "must be finite and positive",
                });
            }
            return Ok(dt);
        }
        if self.steps_per_period == 0 {
            return Err(Error::InvalidParameter {
                key: "steps_per_period",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if rate > 0.0 {
            Ok(2.0 * PI / (rate * self.steps_per_period as f64))
        } else {
            Ok(f64::INFINITY)
        }
    }

    /// Step for pure-state propagation. Without an explicit `dt` the default
    /// grid is refined until the RK4 amplitude error over `span`, roughly
    /// `span·rate·z⁴/120` for `z = rate·dt`, stays a decade below `tolerance`.
    pub fn resolve_pure_dt(&self, rate: f64, span: f64) -> Result<f64> {
        let dt = self.resolve_dt(rate)?;
        if self.dt.is_some() || !(rate > 0.0) || !(span > 0.0) || self.method != Method::Rk4 {
            return Ok(dt);
        }
        let z = (12.0 * self.tolerance / (rate * span)).powf(0.25);
        Ok(dt.min(z / rate))
    }

    fn steps(&self, span: f64, dt: f64) -> Result<usize> {
        let n = if dt.is_infinite() {
            1
        } else {
            ((span / dt) - 1e-9).ceil().max(1.0) as usize
        };
        if n > self.max_steps {
            return Err(Error::StepLimit(self.max_steps));
        }
        Ok(n)
    }
}

/// Upper bound on the rate at which an operator can rotate a state.
fn generator_rate(h: &dyn TimeDependentOp) -> f64 {
    let pattern = h.pattern();
    let mut values = vec![ZERO; pattern.nnz()];
    h.fill_values(0.0, &mut values);
    let mut rows = pattern.clone();
    rows.values_mut().copy_from_slice(&values);
    h.max_frequency().max(rows.max_row_sum())
}

/// Fixed-step RK4. `f(t, y, dy)` writes the derivative; `check` runs after every step.
fn rk4<F, G>(mut f: F, y: &mut [C64], t0: f64, t1: f64, n: usize, mut check: G) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: FnMut(&[C64]) -> Result<()>,
{
    let len = y.len();
    let mut k = vec![ZERO; len];
    let mut acc = vec![ZERO; len];
    let mut tmp = vec![ZERO; len];
    let h = (t1 - t0) / n as f64;
    let (h2, h3, h6) = (h / 2.0, h / 3.0, h / 6.0);
    for step in 0..n {
        let t = t0 + step as f64 * h;
        f(t, y, &mut k);
        for i in 0..len {
            acc[i] = y[i] + k[i] * h6;
            tmp[i] = y[i] + k[i] * h2;
        }
        f(t + h2, &tmp, &mut k);
        for i in 0..len {
            acc[i] += k[i] * h3;
            tmp[i] = y[i] + k[i] * h2;
        }
        f(t + h2, &tmp, &mut k);
        for i in 0..len {
            acc[i] += k[i] * h3;
            tmp[i] = y[i] + k[i] * h;
        }
        f(t + h, &tmp, &mut k);
        for i in 0..len {
            y[i] = acc[i] + k[i] * h6;
        }
        check(y)?;
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri<F, G>(mut f: F, y: &mut [C64], t0: f64, t1: f64, h0: f64, cfg: &IntegratorConfig, mut check: G) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: FnMut(&[C64]) -> Result<()>,
{
    let len = y.len();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![ZERO; len]).collect();
    let mut stage = vec![ZERO; len];
    let mut y_new = vec![ZERO; len];
    let span = t1 - t0;
    let mut h = h0.min(span);
    let mut t = t0;
    let mut steps = 0usize;
    f(t, y, &mut k[0]);
    while t < t1 - 1e-15 * span.abs() {
        if steps >= cfg.max_steps {
            return Err(Error::StepLimit(cfg.max_steps));
        }
        steps += 1;
        h = h.min(t1 - t);
        for s in 1..7 {
            for i in 0..len {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + DP_C[s] * h, &stage, &mut tail[0]);
        }
        let mut err: f64 = 0.0;
        for i in 0..len {
            let mut hi = y[i];
            let mut lo = y[i];
            for s in 0..7 {
                hi += k[s][i] * (h * DP_B5[s]);
                lo += k[s][i] * (h * DP_B4[s]);
            }
            y_new[i] = hi;
            let scale = cfg.atol + cfg.rtol * y[i].norm().max(hi.norm());
            err = err.max((hi - lo).norm() / scale);
        }
        if err <= 1.0 || h < 1e-14 * span.abs() {
            t += h;
            y.copy_from_slice(&y_new);
            check(y)?;
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(())
}

fn integrate<F, G>(f: F, y: &mut [C64], t0: f64, t1: f64, dt: f64, cfg: &IntegratorConfig, check: G) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: FnMut(&[C64]) -> Result<()>,
{
    if t1 == t0 {
        return Ok(());
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("evolution interval [{t0}, {t1}] is reversed")));
    }
    match cfg.method {
        Method::Rk4 => {
            let n = cfg.steps(t1 - t0, dt)?;
            rk4(f, y, t0, t1, n, check)
        }
        Method::Adaptive => dopri(f, y, t0, t1, dt.min(t1 - t0), cfg, check),
    }
}

/// Step `evolve_lindblad` uses on `[t0, t1]` with the fixed-step method.
pub fn step_size(h: &dyn TimeDependentOp, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let dt = cfg.resolve_dt(generator_rate(h))?;
    let n = cfg.steps(t1 - t0, dt)?;
    Ok((t1 - t0) / n as f64)
}

/// Integrates `i dψ/dt = H(t)ψ`. The norm is never corrected; a drift above
/// `cfg.tolerance` is reported as divergence.
pub fn propagate_pure(h: &dyn TimeDependentOp, psi0: &Ket, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Ket> {
    if h.layout() != psi0.layout() {
        return Err(Error::Layout("Hamiltonian and ket layouts differ".into()));
    }
    let dt = cfg.resolve_pure_dt(generator_rate(h), t1 - t0)?;
    let pattern = h.pattern();
    let mut values = vec![ZERO; pattern.nnz()];
    let mut y: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let norm0 = psi0.norm();
    let rhs = |t: f64, x: &[C64], dx: &mut [C64]| {
        h.fill_values(t, &mut values);
        let rp = pattern.row_ptr();
        let ci = pattern.col_idx();
        for (i, d) in dx.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in rp[i]..rp[i + 1] {
                acc += values[k] * x[ci[k]];
            }
            *d = MINUS_I * acc;
        }
    };
    let suggested = if dt.is_finite() { dt / 2.0 } else { (t1 - t0) / 2.0 };
    let check = |x: &[C64]| {
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let dev = (norm - norm0).abs();
        if dev > cfg.tolerance || !norm.is_finite() {
            return Err(Error::Divergence {
                invariant: "norm",
                deviation: dev,
                suggested_dt: suggested,
            });
        }
        Ok(())
    };
    integrate(rhs, &mut y, t0, t1, dt, cfg, check)?;
    Ket::from_unnormalized(psi0.layout().clone(), CVector::from_vec(y))
}

enum Jump {
    /// At most one entry per row and column: `(row, col, value)`.
    Monomial(Vec<(usize, usize, C64)>),
    General(CsrMatrix),
}

enum Decay {
    None,
    Diagonal(Vec<f64>),
    General(CsrMatrix),
}

/// Right-hand side of `dρ/dt = −i[H(t), ρ] + Σ (LρL† − ½{L†L, ρ})`.
///
/// The coherent and anticommutator parts are evaluated as `M + M†` with
/// `M = (−iH − ½G)ρ`, so the output is Hermitian to the last bit whenever
/// the input is.
pub struct LindbladGenerator<'a> {
    h: &'a dyn TimeDependentOp,
    n: usize,
    values: Vec<C64>,
    decay: Decay,
    jumps: Vec<Jump>,
    m: Vec<C64>,
    scratch: Vec<C64>,
    decay_rate: f64,
}

impl<'a> LindbladGenerator<'a> {
    pub fn new(h: &'a dyn TimeDependentOp, collapse_ops: &[LinOp]) -> Result<Self> {
        let n = h.layout().total_dim();
        let mut g_triplets: Vec<(usize, usize, C64)> = Vec::new();
        let mut jumps = Vec::with_capacity(collapse_ops.len());
        for op in collapse_ops {
            if op.layout() != h.layout() {
                return Err(Error::Layout("collapse operator layout differs from Hamiltonian".into()));
            }
            let csr = CsrMatrix::from_dense(op.matrix(), 0.0);
            let gram = csr.adjoint().matmul(&csr);
            g_triplets.extend(gram.iter());
            jumps.push(match csr.as_monomial() {
                Some(entries) => Jump::Monomial(entries),
                None => Jump::General(csr),
            });
        }
        let g = CsrMatrix::from_triplets(n, n, &g_triplets);
        let decay_rate = g.max_row_sum();
        let decay = if g.nnz() == 0 {
            Decay::None
        } else if g.is_diagonal() {
            let mut d = vec![0.0; n];
            for (i, _, v) in g.iter() {
                d[i] = 0.5 * v.re;
            }
            Decay::Diagonal(d)
        } else {
            let half: Vec<_> = g.iter().map(|(i, j, v)| (i, j, v * 0.5)).collect();
            Decay::General(CsrMatrix::from_triplets(n, n, &half))
        };
        let needs_scratch = jumps.iter().any(|j| matches!(j, Jump::General(_)));
        Ok(Self {
            h,
            n,
            values: vec![ZERO; h.pattern().nnz()],
            decay,
            jumps,
            m: vec![ZERO; n * n],
            scratch: if needs_scratch { vec![ZERO; 2 * n * n] } else { Vec::new() },
            decay_rate,
        })
    }

    /// Fastest rate in the generator, used to pick a default step.
    pub fn rate(&self) -> f64 {
        generator_rate(self.h) + self.decay_rate
    }

    /// `out = L(t)[rho]` for column-major `rho`.
    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        self.h.fill_values(t, &mut self.values);
        let pattern = self.h.pattern();
        let rp = pattern.row_ptr();
        let ci = pattern.col_idx();
        for c in 0..n {
            let col = &rho[c * n..(c + 1) * n];
            let mcol = &mut self.m[c * n..(c + 1) * n];
            for i in 0..n {
                let mut acc = ZERO;
                for k in rp[i]..rp[i + 1] {
                    acc += self.values[k] * col[ci[k]];
                }
                mcol[i] = MINUS_I * acc;
            }
            match &self.decay {
                Decay::None => {}
                Decay::Diagonal(d) => {
                    for i in 0..n {
                        mcol[i] -= col[i] * d[i];
                    }
                }
                Decay::General(g) => {
                    for i in 0..n {
                        let mut acc = ZERO;
                        for k in g.row_ptr()[i]..g.row_ptr()[i + 1] {
                            acc += g.values()[k] * col[g.col_idx()[k]];
                        }
                        mcol[i] -= acc;
                    }
                }
            }
        }
        const BLOCK: usize = 32;
        for jb in (0..n).step_by(BLOCK) {
            for ib in (0..n).step_by(BLOCK) {
                for j in jb..(jb + BLOCK).min(n) {
                    for i in ib..(ib + BLOCK).min(n) {
                        out[i + j * n] = self.m[i + j * n] + self.m[j + i * n].conj();
                    }
                }
            }
        }
        for jump in &self.jumps {
            match jump {
                Jump::Monomial(entries) => {
                    for &(rb, cb, vb) in entries {
                        let src = &rho[cb * n..(cb + 1) * n];
                        let vbc = vb.conj();
                        let dst = &mut out[rb * n..(rb + 1) * n];
                        for &(ra, ca, va) in entries {
                            dst[ra] += (va * vbc) * src[ca];
                        }
                    }
                }
                Jump::General(l) => {
                    let (x, y) = self.scratch.split_at_mut(n * n);
                    l.mul_dense(rho, x, n);
                    y.iter_mut().for_each(|v| *v = ZERO);
                    for (j, k, v) in l.iter() {
                        let vc = v.conj();
                        let (xs, ys) = (&x[k * n..(k + 1) * n], &mut y[j * n..(j + 1) * n]);
                        for i in 0..n {
                            ys[i] += xs[i] * vc;
                        }
                    }
                    for j in 0..n {
                        for i in 0..n {
                            out[i + j * n] += (y[i + j * n] + y[j + i * n].conj()) * 0.5;
                        }
                    }
                }
            }
        }
    }
}

fn trace_of(rho: &[C64], n: usize) -> C64 {
    (0..n).map(|i| rho[i + i * n]).fold(ZERO, |a, b| a + b)
}

/// Integrates the Lindblad equation with rate-scaled collapse operators.
pub fn evolve_lindblad(
    h: &dyn TimeDependentOp,
    collapse_ops: &[LinOp],
    rho0: &DensityOp,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityOp> {
    if h.layout() != rho0.layout() {
        return Err(Error::Layout("Hamiltonian and state layouts differ".into()));
    }
    let n = rho0.dim();
    let mut gen = LindbladGenerator::new(h, collapse_ops)?;
    let dt = cfg.resolve_dt(gen.rate())?;
    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let tr0 = trace_of(&y, n);
    let suggested = if dt.is_finite() { dt / 2.0 } else { (t1 - t0) / 2.0 };
    let check = |x: &[C64]| {
        let dev = (trace_of(x, n) - tr0).norm();
        if dev > cfg.tolerance || !dev.is_finite() {
            return Err(Error::Divergence {
                invariant: "trace",
                deviation: dev,
                suggested_dt: suggested,
            });
        }
        Ok(())
    };
    integrate(|t, x, dx| gen.apply(t, x, dx), &mut y, t0, t1, dt, cfg, check)?;
    let rho = DensityOp::new(rho0.layout().clone(), CMatrix::from_vec(n, n, y))?;
    if cfg.check_positivity {
        let diag = rho.diagnostics();
        if diag.min_eigenvalue < -crate::hilbert::DensityDiagnostics::POSITIVITY_TOLERANCE {
            return Err(Error::Divergence {
                invariant: "positivity",
                deviation: -diag.min_eigenvalue,
                suggested_dt: suggested,
            });
        }
        if diag.hermiticity_error > crate::hilbert::DensityDiagnostics::HERMITICITY_TOLERANCE {
            return Err(Error::Divergence {
                invariant: "hermiticity",
                deviation: diag.hermiticity_error,
                suggested_dt: suggested,
            });
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, expm, fock_state, max_abs_diff, transition_operator, Level};
    use crate::model::{derive, pulse_hamiltonian, reduced_effective_parts, PhysicalParams};
    use approx::assert_relative_eq;

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let l = SpaceLayout::single(8).unwrap();
        let h = FrameHamiltonian::time_independent(&LinOp::zeros(&l)).unwrap();
        let psi = crate::hilbert::coherent_state(C64::new(0.3, 0.1), 8).unwrap();
        let out = propagate_pure(&h, &psi, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn pulse_creates_equal_superposition() {
        let l = SpaceLayout::qutrit_modes(2, 2).unwrap();
        let omega = 2.0 * PI * 100e6;
        let h = FrameHamiltonian::time_independent(&pulse_hamiltonian(omega, -PI / 2.0, &l).unwrap()).unwrap();
        let g = Ket::basis(&l, &[0, 0, 0]).unwrap();
        let out = propagate_pure(&h, &g, 0.0, PI / (4.0 * omega), &IntegratorConfig::default()).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(l.flat_index(&[0, 0, 0]).unwrap()) - C64::new(s, 0.0)).norm() < 1e-8);
        assert!((out.amplitude(l.flat_index(&[2, 0, 0]).unwrap()) - C64::new(s, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn reduced_effective_swaps_single_photon() {
        let p = PhysicalParams::reference(16.0, 3).closed();
        let l = p.layout().unwrap();
        let (h0, hi) = reduced_effective_parts(&p).unwrap();
        let h = FrameHamiltonian::time_independent(&h0.add(&hi).unwrap()).unwrap();
        let t = derive(&p).unwrap().t_swap;
        let psi = Ket::basis(&l, &[0, 1, 0]).unwrap();
        let out = propagate_pure(&h, &psi, 0.0, t, &IntegratorConfig::default()).unwrap();
        assert!(out.amplitude(l.flat_index(&[0, 0, 1]).unwrap()).norm() > 1.0 - 1e-8);
    }

    #[test]
    fn norm_drift_is_reported() {
        let l = SpaceLayout::single(2).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        let h = FrameHamiltonian::time_independent(&LinOp::new(l.clone(), m).unwrap()).unwrap();
        let cfg = IntegratorConfig::with_dt(1.0);
        let psi = Ket::basis(&l, &[0]).unwrap();
        match propagate_pure(&h, &psi, 0.0, 50.0, &cfg) {
            Err(Error::Divergence { invariant: "norm", suggested_dt, .. }) => assert_eq!(suggested_dt, 0.5),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn photon_decay_matches_exponential() {
        let dim = 6;
        let l = SpaceLayout::single(dim).unwrap();
        let kappa = 2e5;
        let h = FrameHamiltonian::time_independent(&LinOp::zeros(&l)).unwrap();
        let jump = annihilation(dim).unwrap().scale(C64::new(kappa.sqrt(), 0.0));
        let rho0 = fock_state(3, dim).unwrap().to_density();
        let t = 4e-6;
        let cfg = IntegratorConfig::with_dt(2e-8);
        let rho = evolve_lindblad(&h, &[jump], &rho0, 0.0, t, &cfg).unwrap();
        let n_mean = rho.expectation(&crate::hilbert::number(dim).unwrap()).unwrap().re;
        assert_relative_eq!(n_mean, 3.0 * (-kappa * t).exp(), epsilon = 1e-6);
    }

    #[test]
    fn dephasing_decays_coherence() {
        let l = SpaceLayout::single(3).unwrap();
        let gamma = 5e5;
        let h = FrameHamiltonian::time_independent(&LinOp::zeros(&l)).unwrap();
        let jump = transition_operator(Level::E, Level::E).scale(C64::new(gamma.sqrt(), 0.0));
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let psi = Ket::new(l.clone(), CVector::from_vec(vec![C64::new(s, 0.0), ZERO, C64::new(s, 0.0)])).unwrap();
        let t = 3e-6;
        let rho = evolve_lindblad(&h, &[jump], &psi.to_density(), 0.0, t, &IntegratorConfig::with_dt(1e-8)).unwrap();
        assert_relative_eq!(rho.matrix()[(0, 2)].norm(), 0.5 * (-gamma * t / 2.0).exp(), epsilon = 1e-6);
    }

    #[test]
    fn closed_lindblad_matches_pure() {
        let p = PhysicalParams::reference(8.0, 3).closed();
        let h = crate::model::full_frame_hamiltonian(&p).unwrap();
        let l = p.layout().unwrap();
        let psi = Ket::basis(&l, &[0, 1, 0]).unwrap();
        let t = 3e-9;
        let cfg = IntegratorConfig {
            steps_per_period: 400,
            check_positivity: false,
            ..IntegratorConfig::default()
        };
        let pure = propagate_pure(&h, &psi, 0.0, t, &cfg).unwrap();
        let mixed = evolve_lindblad(&h, &[], &psi.to_density(), 0.0, t, &cfg).unwrap();
        assert!(max_abs_diff(mixed.matrix(), pure.to_density().matrix()) < 1e-8);
    }

    #[test]
    fn adaptive_agrees_with_exponential() {
        let l = SpaceLayout::single(3).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = C64::new(1.0, 0.5);
        m[(1, 0)] = C64::new(1.0, -0.5);
        m[(2, 2)] = C64::new(0.7, 0.0);
        let op = LinOp::new(l.clone(), m.clone()).unwrap();
        let h = FrameHamiltonian::time_independent(&op).unwrap();
        let cfg = IntegratorConfig {
            method: Method::Adaptive,
            ..IntegratorConfig::default()
        };
        let psi = Ket::normalized(l.clone(), CVector::from_vec(vec![C64::new(1.0, 0.0), ZERO, C64::new(0.0, 1.0)])).unwrap();
        let out = propagate_pure(&h, &psi, 0.0, 5.0, &cfg).unwrap();
        let exact = expm(&(m * C64::new(0.0, -5.0))) * psi.amplitudes();
        for (a, b) in out.amplitudes().iter().zip(exact.iter()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn generator_output_is_exactly_hermitian() {
        let p = PhysicalParams::reference(10.0, 3);
        let h = crate::model::full_frame_hamiltonian(&p).unwrap();
        let ops = crate::model::collapse_operators(&p).unwrap();
        let mut gen = LindbladGenerator::new(&h, &ops).unwrap();
        let l = p.layout().unwrap();
        let n = l.total_dim();
        let psi = Ket::normalized(l, CVector::from_fn(n, |i, _| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()))).unwrap();
        let rho = psi.to_density();
        let mut out = vec![ZERO; n * n];
        gen.apply(1.7e-9, rho.matrix().as_slice(), &mut out);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(out[i + j * n], out[j + i * n].conj());
            }
        }
    }
}
