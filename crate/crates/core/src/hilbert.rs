//! Finite tensor-product Hilbert spaces: layouts, kets, density operators and
//! the single-factor operators everything else is assembled from.
//!
//! Factor order for the gate system is fixed as `[qutrit, mode 1, mode 2]`,
//! and qutrit levels are indexed `g = 0`, `a = 1`, `e = 2`. Flat indices are
//! row-major over factors (first factor most significant), the same
//! convention as the Kronecker product.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance on the norm of a constructed ket.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Default bound on the probability mass dropped by truncating a coherent state.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Qutrit level. Ordering follows the energies, `g < a < e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G = 0,
    A = 1,
    E = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::A, Level::E];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g" | "G" => Ok(Level::G),
            "a" | "A" => Ok(Level::A),
            "e" | "E" => Ok(Level::E),
            other => Err(Error::InvalidLevel(other.to_string())),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::G => "g",
            Level::A => "a",
            Level::E => "e",
        })
    }
}

/// Ordered list of factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    dims: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Layout("layout needs at least one factor".to_string()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension {
                dim: d,
                reason: "factor dimensions must be at least 1",
            });
        }
        Ok(Self { dims })
    }

    /// The gate system: qutrit, then the two memory cutoffs.
    pub fn qutrit_modes(d1: usize, d2: usize) -> Result<Self> {
        Self::new(vec![3, d1, d2])
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Distance in flat index between consecutive values of one factor.
    pub fn stride(&self, slot: usize) -> usize {
        self.dims[slot + 1..].iter().product()
    }

    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(Error::Layout(format!(
                "expected {} digits, got {}",
                self.dims.len(),
                digits.len()
            )));
        }
        let mut idx = 0;
        for (slot, (&d, &dim)) in digits.iter().zip(&self.dims).enumerate() {
            if d >= dim {
                return Err(Error::Layout(format!("digit {d} out of range for slot {slot} (dim {dim})")));
            }
            idx = idx * dim + d;
        }
        Ok(idx)
    }

    pub fn digit(&self, index: usize, slot: usize) -> usize {
        (index / self.stride(slot)) % self.dims[slot]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|s| self.digit(index, s)).collect()
    }

    /// Layout made of the listed slots, in the order given.
    pub fn subset(&self, slots: &[usize]) -> Result<SpaceLayout> {
        let dims = slots
            .iter()
            .map(|&s| {
                self.dims
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::Layout(format!("slot {s} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceLayout::new(dims)
    }

    pub fn tensor(&self, other: &SpaceLayout) -> SpaceLayout {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SpaceLayout { dims }
    }
}

/// A square operator on a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct LinOp {
    layout: SpaceLayout,
    matrix: CMatrix,
    hermitian_hint: bool,
}

impl LinOp {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.shape() != (n, n) {
            return Err(Error::Layout(format!(
                "matrix shape {:?} does not match layout dimension {n}",
                matrix.shape()
            )));
        }
        Ok(Self {
            layout,
            matrix,
            hermitian_hint: false,
        })
    }

    pub fn with_hermitian_hint(mut self, hint: bool) -> Self {
        self.hermitian_hint = hint;
        self
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::identity(n, n),
            hermitian_hint: true,
        }
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::zeros(n, n),
            hermitian_hint: true,
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> LinOp {
        LinOp {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    fn check_same(&self, other: &LinOp) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!(
                "operator layouts differ: {:?} vs {:?}",
                self.layout.factor_dims(),
                other.layout.factor_dims()
            )));
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same(other)?;
        Ok(LinOp {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix,
            hermitian_hint: false,
        })
    }

    pub fn add(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same(other)?;
        Ok(LinOp {
            layout: self.layout.clone(),
            matrix: &self.matrix + &other.matrix,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    pub fn sub(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same(other)?;
        Ok(LinOp {
            layout: self.layout.clone(),
            matrix: &self.matrix - &other.matrix,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    pub fn scale(&self, factor: C64) -> LinOp {
        LinOp {
            layout: self.layout.clone(),
            matrix: &self.matrix * factor,
            hermitian_hint: self.hermitian_hint && factor.im == 0.0,
        }
    }

    pub fn commutator(&self, other: &LinOp) -> Result<LinOp> {
        Ok(self.compose(other)?.sub(&other.compose(self)?)?.with_hermitian_hint(false))
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Applies the operator to a ket, returning the raw (unnormalized) amplitudes.
    pub fn apply(&self, ket: &Ket) -> Result<CVector> {
        if ket.layout != self.layout {
            return Err(Error::Layout("ket and operator layouts differ".to_string()));
        }
        Ok(&self.matrix * &ket.amplitudes)
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &LinOp) -> LinOp {
        LinOp {
            layout: self.layout.tensor(&other.layout),
            matrix: self.matrix.kronecker(&other.matrix),
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn single_factor(dim: usize, matrix: CMatrix, hermitian: bool) -> LinOp {
    LinOp {
        layout: SpaceLayout { dims: vec![dim] },
        matrix,
        hermitian_hint: hermitian,
    }
}

/// Truncated ladder operator with `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<LinOp> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "a ladder operator needs at least two Fock levels",
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(single_factor(dim, m, false))
}

pub fn creation(dim: usize) -> Result<LinOp> {
    Ok(annihilation(dim)?.adjoint().with_hermitian_hint(false))
}

pub fn number(dim: usize) -> Result<LinOp> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "empty factor",
        });
    }
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0)));
    Ok(single_factor(dim, m, true))
}

/// Parity `(−1)^{a†a}` on one mode.
pub fn parity(dim: usize) -> Result<LinOp> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "empty factor",
        });
    }
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| {
        C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    }));
    Ok(single_factor(dim, m, true))
}

pub fn identity(dim: usize) -> Result<LinOp> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "empty factor",
        });
    }
    Ok(single_factor(dim, CMatrix::identity(dim, dim), true))
}

/// `|to⟩⟨from|` on the qutrit.
pub fn transition_operator(from: Level, to: Level) -> LinOp {
    let mut m = CMatrix::zeros(3, 3);
    m[(to.index(), from.index())] = ONE;
    single_factor(3, m, from == to)
}

/// Label form of [`transition_operator`], e.g. `("g", "a")` gives `σ_ag⁺ = |a⟩⟨g|`.
pub fn transition_operator_by_label(from: &str, to: &str) -> Result<LinOp> {
    Ok(transition_operator(from.parse()?, to.parse()?))
}

pub fn projector(level: Level) -> LinOp {
    transition_operator(level, level)
}

/// Places a single-factor operator on `slot`, identities elsewhere.
pub fn embed(op: &LinOp, slot: usize, layout: &SpaceLayout) -> Result<LinOp> {
    if op.layout.num_factors() != 1 {
        return Err(Error::Layout("embed expects a single-factor operator".to_string()));
    }
    let dims = layout.factor_dims();
    let Some(&target) = dims.get(slot) else {
        return Err(Error::Layout(format!("slot {slot} out of range for {} factors", dims.len())));
    };
    if op.dim() != target {
        return Err(Error::Layout(format!(
            "operator dimension {} does not match factor {slot} of dimension {target}",
            op.dim()
        )));
    }
    let before: usize = dims[..slot].iter().product();
    let after: usize = dims[slot + 1..].iter().product();
    let matrix = CMatrix::identity(before, before)
        .kronecker(&op.matrix)
        .kronecker(&CMatrix::identity(after, after));
    Ok(LinOp {
        layout: layout.clone(),
        matrix,
        hermitian_hint: op.hermitian_hint,
    })
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    layout: SpaceLayout,
    amplitudes: CVector,
}

impl Ket {
    /// Accepts amplitudes that are already normalized.
    pub fn new(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            layout,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    /// Wraps integrator output as is. Its norm may differ from one by the
    /// integrator tolerance.
    pub(crate) fn from_unnormalized(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        Ok(Self { layout, amplitudes })
    }

    pub fn basis(layout: &SpaceLayout, digits: &[usize]) -> Result<Self> {
        let idx = layout.flat_index(digits)?;
        let mut v = CVector::zeros(layout.total_dim());
        v[idx] = ONE;
        Ok(Self {
            layout: layout.clone(),
            amplitudes: v,
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket {
            layout: self.layout.tensor(&other.layout),
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::Layout("kets live on different layouts".to_string()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn expectation(&self, op: &LinOp) -> Result<C64> {
        let v = op.apply(self)?;
        Ok(self.amplitudes.dotc(&v))
    }

    /// Applies a unitary and renormalizes away round-off.
    pub fn evolve(&self, unitary: &LinOp) -> Result<Ket> {
        Ket::normalized(self.layout.clone(), unitary.apply(self)?)
    }

    pub fn to_density(&self) -> DensityOp {
        DensityOp {
            layout: self.layout.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

fn check_len(layout: &SpaceLayout, len: usize) -> Result<()> {
    if layout.total_dim() != len {
        return Err(Error::Layout(format!(
            "vector of length {len} does not match layout dimension {}",
            layout.total_dim()
        )));
    }
    Ok(())
}

/// Density operator. Physical validity is checked on demand by [`DensityOp::diagnostics`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    layout: SpaceLayout,
    matrix: CMatrix,
}

/// Distance of a density matrix from the physical set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDiagnostics {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
    pub const TRACE_TOLERANCE: f64 = 1e-8;
    pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

    pub fn is_valid(&self) -> bool {
        self.hermiticity_error <= Self::HERMITICITY_TOLERANCE
            && self.trace_error <= Self::TRACE_TOLERANCE
            && self.min_eigenvalue >= -Self::POSITIVITY_TOLERANCE
    }
}

impl DensityOp {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.shape() != (n, n) {
            return Err(Error::Layout(format!(
                "matrix shape {:?} does not match layout dimension {n}",
                matrix.shape()
            )));
        }
        Ok(Self { layout, matrix })
    }

    /// `I / dim`.
    pub fn maximally_mixed(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::identity(n, n) / C64::new(n as f64, 0.0),
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    pub fn expectation(&self, op: &LinOp) -> Result<C64> {
        if op.layout != self.layout {
            return Err(Error::Layout("operator and state layouts differ".to_string()));
        }
        Ok((op.matrix() * &self.matrix).trace())
    }

    /// Sorted eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        ev
    }

    pub fn diagnostics(&self) -> DensityDiagnostics {
        DensityDiagnostics {
            hermiticity_error: max_abs_diff(&self.matrix, &self.matrix.adjoint()),
            trace_error: (self.trace() - ONE).norm(),
            min_eigenvalue: self.eigenvalues().first().copied().unwrap_or(0.0),
        }
    }

    /// Conjugates by a unitary: `U ρ U†`.
    pub fn conjugate(&self, unitary: &LinOp) -> Result<DensityOp> {
        if unitary.layout != self.layout {
            return Err(Error::Layout("unitary and state layouts differ".to_string()));
        }
        Ok(DensityOp {
            layout: self.layout.clone(),
            matrix: unitary.matrix() * &self.matrix * unitary.matrix().adjoint(),
        })
    }
}

/// Basis vector `|n⟩` of a single mode.
pub fn fock_state(n: usize, dim: usize) -> Result<Ket> {
    if n >= dim {
        return Err(Error::CutoffOverflow { n, dim });
    }
    Ket::basis(&SpaceLayout::single(dim)?, &[n])
}

/// Probability mass of a Poisson distribution with mean `mean` at `n >= dim`.
pub fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    // Sum the tail directly rather than 1 − head to avoid cancellation.
    let mut term = (-mean).exp();
    for n in 1..=dim {
        term *= mean / n as f64;
    }
    let mut tail = 0.0;
    let mut n = dim;
    loop {
        tail += term;
        n += 1;
        term *= mean / n as f64;
        if (n as f64) > mean && term < tail * 1e-17 {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    tail
}

/// Smallest cutoff whose Poisson tail is within `tolerance`.
pub fn required_cutoff(mean: f64, tolerance: f64) -> usize {
    let mut d = 1;
    while poisson_tail(mean, d) > tolerance {
        d += 1;
    }
    d
}

/// Untruncated coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n < dim`.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    if dim == 0 {
        return v;
    }
    v[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..dim {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    v
}

fn check_tail(mean: f64, dim: usize, tolerance: f64) -> Result<()> {
    let tail = poisson_tail(mean, dim);
    if tail > tolerance {
        return Err(Error::Truncation {
            tail,
            tolerance,
            required_dim: required_cutoff(mean, tolerance),
        });
    }
    Ok(())
}

pub fn coherent_state(alpha: C64, dim: usize) -> Result<Ket> {
    coherent_state_with_tolerance(alpha, dim, DEFAULT_TAIL_TOLERANCE)
}

/// Coherent state truncated at `dim` and renormalized; fails when the
/// dropped mass exceeds `tolerance`.
pub fn coherent_state_with_tolerance(alpha: C64, dim: usize, tolerance: f64) -> Result<Ket> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "empty factor",
        });
    }
    check_tail(alpha.norm_sqr(), dim, tolerance)?;
    Ket::normalized(SpaceLayout::single(dim)?, coherent_amplitudes(alpha, dim))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CatParity {
    Even,
    Odd,
}

pub fn cat_state(alpha: f64, parity: CatParity, dim: usize) -> Result<Ket> {
    cat_state_with_tolerance(alpha, parity, dim, DEFAULT_TAIL_TOLERANCE)
}

/// `|α⟩ ± |−α⟩`, truncated and renormalized. Amplitudes of the wrong parity are exactly zero.
pub fn cat_state_with_tolerance(alpha: f64, parity: CatParity, dim: usize, tolerance: f64) -> Result<Ket> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("cat amplitude {alpha} is not finite")));
    }
    if parity == CatParity::Odd && alpha == 0.0 {
        return Err(Error::Degenerate("odd cat state with zero amplitude vanishes"));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "empty factor",
        });
    }
    check_tail(alpha * alpha, dim, tolerance)?;
    let mut v = coherent_amplitudes(C64::new(alpha, 0.0), dim);
    let keep = match parity {
        CatParity::Even => 0,
        CatParity::Odd => 1,
    };
    for (n, amp) in v.iter_mut().enumerate() {
        *amp = if n % 2 == keep { *amp * 2.0 } else { ZERO };
    }
    Ket::normalized(SpaceLayout::single(dim)?, v)
}

/// Normalization constant of `|α⟩ ± |−α⟩` before truncation:
/// `(1/√2)(1 ± e^{−2α²})^{−1/2}`.
pub fn cat_normalization(alpha: f64, parity: CatParity) -> f64 {
    let overlap = (-2.0 * alpha * alpha).exp();
    let s = match parity {
        CatParity::Even => 1.0 + overlap,
        CatParity::Odd => 1.0 - overlap,
    };
    1.0 / (2.0 * s).sqrt()
}

/// Reduced state on the kept slots (listed in any order, reported ascending).
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace needs at least one kept factor".to_string()));
    }
    let layout = rho.layout();
    let n_f = layout.num_factors();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidArgument("duplicate slot in partial trace".to_string()));
    }
    if let Some(&s) = kept.iter().find(|&&s| s >= n_f) {
        return Err(Error::InvalidArgument(format!("slot {s} out of range for {n_f} factors")));
    }
    let traced: Vec<usize> = (0..n_f).filter(|s| !kept.contains(s)).collect();
    let kept_layout = layout.subset(&kept)?;
    let offsets = |slots: &[usize]| -> Vec<usize> {
        let dims: Vec<usize> = slots.iter().map(|&s| layout.factor_dims()[s]).collect();
        let count: usize = dims.iter().product();
        (0..count)
            .map(|mut flat| {
                let mut off = 0;
                for (pos, &s) in slots.iter().enumerate().rev() {
                    let d = dims[pos];
                    off += (flat % d) * layout.stride(s);
                    flat /= d;
                }
                off
            })
            .collect()
    };
    let k_off = offsets(&kept);
    let t_off = offsets(&traced);
    let m = rho.matrix();
    let nk = k_off.len();
    let reduced = CMatrix::from_fn(nk, nk, |i, j| {
        t_off
            .iter()
            .map(|&t| m[(k_off[i] + t, k_off[j] + t)])
            .fold(ZERO, |acc, v| acc + v)
    });
    DensityOp::new(kept_layout, reduced)
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * C64::new(scale, 0.0);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &x / C64::new(k as f64, 0.0);
        result += &term;
        if term.iter().all(|v| v.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn layout3() -> SpaceLayout {
        SpaceLayout::qutrit_modes(4, 4).unwrap()
    }

    #[test]
    fn layout_rejects_zero_dims() {
        assert!(SpaceLayout::new(vec![3, 0]).is_err());
        assert!(SpaceLayout::new(Vec::<usize>::new()).is_err());
        let l = SpaceLayout::qutrit_modes(6, 5).unwrap();
        assert_eq!(l.total_dim(), 90);
        let idx = l.flat_index(&[2, 3, 4]).unwrap();
        assert_eq!(l.digits(idx), vec![2, 3, 4]);
    }

    #[test]
    fn ladder_operator_examples() {
        let a = annihilation(4).unwrap();
        let v = a.apply(&fock_state(2, 4).unwrap()).unwrap();
        assert_relative_eq!(v[1].re, 1.41421356, epsilon = 1e-8);
        let vac = a.apply(&fock_state(0, 4).unwrap()).unwrap();
        assert!(vac.iter().all(|x| x.norm() == 0.0));
        let a6 = annihilation(6).unwrap();
        let n_op = a6.adjoint().compose(&a6).unwrap();
        let out = n_op.apply(&fock_state(3, 6).unwrap()).unwrap();
        assert_relative_eq!(out[3].re, 3.0, epsilon = 1e-14);
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn transition_operator_examples() {
        let s = transition_operator(Level::G, Level::A);
        let g = Ket::basis(&SpaceLayout::single(3).unwrap(), &[0]).unwrap();
        let out = s.apply(&g).unwrap();
        assert_eq!(out[Level::A.index()], ONE);
        assert_eq!(s.adjoint(), transition_operator(Level::A, Level::G).with_hermitian_hint(false));
        let p = transition_operator(Level::E, Level::E);
        assert_eq!(p.compose(&p).unwrap().matrix(), p.matrix());
        assert!(matches!(
            transition_operator_by_label("g", "f"),
            Err(Error::InvalidLevel(_))
        ));
    }

    #[test]
    fn embed_examples() {
        let l = layout3();
        let a1 = embed(&annihilation(4).unwrap(), 1, &l).unwrap();
        let ket = Ket::basis(&l, &[0, 2, 0]).unwrap();
        let out = a1.apply(&ket).unwrap();
        let target = l.flat_index(&[0, 1, 0]).unwrap();
        assert_relative_eq!(out[target].re, 2f64.sqrt(), epsilon = 1e-14);
        for slot in 0..3 {
            let dim = l.factor_dims()[slot];
            let id = embed(&identity(dim).unwrap(), slot, &l).unwrap();
            assert_eq!(id.matrix(), LinOp::identity(&l).matrix());
        }
        let a2d = embed(&creation(4).unwrap(), 2, &l).unwrap();
        assert!(a1.commutator(&a2d).unwrap().max_abs() < 1e-15);
        assert!(embed(&annihilation(3).unwrap(), 1, &l).is_err());
    }

    #[test]
    fn fock_examples() {
        let v = fock_state(0, 6).unwrap();
        assert_eq!(v.amplitude(0), ONE);
        let top = fock_state(5, 6).unwrap();
        assert_eq!(top.amplitude(5), ONE);
        for n in 0..6 {
            for m in 0..6 {
                let ip = fock_state(n, 6).unwrap().inner(&fock_state(m, 6).unwrap()).unwrap();
                assert_eq!(ip.re, if n == m { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(fock_state(6, 6), Err(Error::CutoffOverflow { n: 6, dim: 6 }));
    }

    #[test]
    fn coherent_examples() {
        let alpha = C64::new(1.1, 0.0);
        let k = coherent_state(alpha, 12).unwrap();
        assert_relative_eq!(k.amplitude(0).norm(), (-0.605f64).exp(), epsilon = 1e-6);
        assert_relative_eq!((-0.605f64).exp(), 0.54607, epsilon = 1e-5);
        let n_op = number(12).unwrap();
        assert_relative_eq!(k.expectation(&n_op).unwrap().re, 1.21, epsilon = 1e-5);
        assert_eq!(coherent_state(ZERO, 5).unwrap(), fock_state(0, 5).unwrap());
        match coherent_state(C64::new(2.0, 0.0), 5) {
            Err(Error::Truncation { required_dim, .. }) => assert!(required_dim > 5),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn poisson_tail_matches_head_complement() {
        for &(mean, dim) in &[(1.21, 4usize), (0.5, 2), (3.0, 6)] {
            let head: f64 = (0..dim)
                .map(|n| {
                    let mut t = (-mean).exp();
                    for k in 1..=n {
                        t *= mean / k as f64;
                    }
                    t
                })
                .sum();
            assert_relative_eq!(poisson_tail(mean, dim), 1.0 - head, epsilon = 1e-14);
        }
        assert!(poisson_tail(1.21, 12) < 1e-7);
    }

    #[test]
    fn cat_examples() {
        // Oracle: norm of the summed coherent amplitudes on a wide truncation.
        let plus = coherent_amplitudes(C64::new(1.1, 0.0), 60);
        let minus = coherent_amplitudes(C64::new(-1.1, 0.0), 60);
        let direct = 1.0 / (plus + minus).norm();
        assert_relative_eq!(cat_normalization(1.1, CatParity::Even), direct, epsilon = 1e-12);
        assert_relative_eq!(cat_normalization(1.1, CatParity::Even), 0.677621, epsilon = 1e-6);
        let odd = cat_state(1.1, CatParity::Odd, 12).unwrap();
        assert_eq!(odd.amplitude(0), ZERO);
        let even = cat_state(1.1, CatParity::Even, 12).unwrap();
        assert_eq!(even.inner(&odd).unwrap(), ZERO);
        assert_eq!(cat_state(0.0, CatParity::Odd, 12), Err(Error::Degenerate("odd cat state with zero amplitude vanishes")));
    }

    #[test]
    fn partial_trace_examples() {
        let l = SpaceLayout::new(vec![2, 2]).unwrap();
        let bell = Ket::normalized(
            l.clone(),
            CVector::from_vec(vec![ZERO, ONE, ONE, ZERO]),
        )
        .unwrap();
        let r = partial_trace(&bell.to_density(), &[0]).unwrap();
        assert_relative_eq!(r.purity(), 0.5, epsilon = 1e-14);

        let u = coherent_state(C64::new(0.3, 0.2), 8).unwrap();
        let v = fock_state(1, 3).unwrap();
        let r = partial_trace(&u.tensor(&v).to_density(), &[0]).unwrap();
        assert_relative_eq!(r.purity(), 1.0, epsilon = 1e-12);
        assert!(max_abs_diff(r.matrix(), u.to_density().matrix()) < 1e-12);

        let full = layout3();
        let mixed = DensityOp::maximally_mixed(&full);
        let r = partial_trace(&mixed, &[2]).unwrap();
        assert!(max_abs_diff(r.matrix(), DensityOp::maximally_mixed(&SpaceLayout::single(4).unwrap()).matrix()) < 1e-14);

        assert!(matches!(partial_trace(&mixed, &[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn expm_of_pauli_rotation() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = ONE;
        h[(1, 0)] = ONE;
        let t = 0.7;
        let u = expm(&(&h * C64::new(0.0, -t)));
        assert_relative_eq!(u[(0, 0)].re, t.cos(), epsilon = 1e-14);
        assert_relative_eq!(u[(1, 0)].im, -t.sin(), epsilon = 1e-14);
    }
}
