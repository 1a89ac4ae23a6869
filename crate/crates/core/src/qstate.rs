//! Dense complex state vectors and operators over a composite
//! (path mode ⊗ polarization) basis.
//!
//! Basis ordering is arm-major, polarization-minor: with polarization enabled
//! the element `(mode m, pol p)` sits at index `2*m + p`, `H` before `V`.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used for the algebraic identities (normalization, unitarity,
/// idempotence).
pub const TOL: f64 = 1e-12;

pub type Amplitude = Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Names reserved for the sentinel nodes of the arm graph.
pub const RESERVED_LABELS: [&str; 2] = ["SOURCE", "DETECTOR"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Pol {
        if i == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pol::H => f.write_str("H"),
            Pol::V => f.write_str("V"),
        }
    }
}

/// Ordered path modes, optionally tensored with a two-level polarization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    modes: Vec<String>,
    polarization: bool,
}

impl Basis {
    pub fn new<I, S>(modes: I, polarization: bool) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let modes: Vec<String> = modes.into_iter().map(Into::into).collect();
        if modes.is_empty() {
            return Err(Error::InvalidBasis("no path modes declared".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if !is_valid_label(m) {
                return Err(Error::InvalidBasis(format!("invalid arm label `{m}`")));
            }
            if modes[..i].contains(m) {
                return Err(Error::InvalidBasis(format!("duplicate arm label `{m}`")));
            }
        }
        Ok(Basis {
            modes,
            polarization,
        })
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn polarization(&self) -> bool {
        self.polarization
    }

    /// Size of the polarization factor: 2 when enabled, 1 otherwise.
    pub fn pol_dim(&self) -> usize {
        if self.polarization {
            2
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len() * self.pol_dim()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::UnknownArm(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m == label)
    }

    /// Flat index of `(mode, pol)`. `pol` is ignored when polarization is off.
    pub fn index(&self, mode: usize, pol: Pol) -> usize {
        mode * self.pol_dim() + if self.polarization { pol.index() } else { 0 }
    }

    /// Inverse of [`Basis::index`].
    pub fn element(&self, index: usize) -> (usize, Option<Pol>) {
        let pd = self.pol_dim();
        let pol = self.polarization.then(|| Pol::from_index(index % pd));
        (index / pd, pol)
    }

    /// Flat indices belonging to one arm, in polarization order.
    pub fn arm_indices(&self, mode: usize) -> std::ops::Range<usize> {
        let pd = self.pol_dim();
        mode * pd..(mode + 1) * pd
    }
}

pub(crate) fn is_valid_label(s: &str) -> bool {
    !s.is_empty()
        && !RESERVED_LABELS.contains(&s)
        && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amps: Array1<Complex64>,
}

impl StateVector {
    pub fn new(basis: Basis, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        check_finite(amps.iter())?;
        Ok(StateVector {
            basis,
            amps: Array1::from(amps),
        })
    }

    pub(crate) fn from_array(basis: Basis, amps: Array1<Complex64>) -> Result<Self> {
        check_finite(amps.iter())?;
        Ok(StateVector { basis, amps })
    }

    pub fn zero(basis: &Basis) -> Self {
        StateVector {
            amps: Array1::zeros(basis.dim()),
            basis: basis.clone(),
        }
    }

    /// `|mode⟩|pol⟩`; `pol` defaults to `H` and is ignored without polarization.
    pub fn ket(basis: &Basis, mode: &str, pol: Option<Pol>) -> Result<Self> {
        let mut s = Self::zero(basis);
        let idx = basis.index(basis.mode_index(mode)?, pol.unwrap_or(Pol::H));
        s.amps[idx] = ONE;
        Ok(s)
    }

    /// Superposition `Σ c_k |mode_k⟩|pol_k⟩`. Repeated elements accumulate.
    pub fn from_terms<'a, I>(basis: &Basis, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, &'a str, Option<Pol>)>,
    {
        let mut s = Self::zero(basis);
        for (c, mode, pol) in terms {
            let idx = basis.index(basis.mode_index(mode)?, pol.unwrap_or(Pol::H));
            s.amps[idx] += c;
        }
        check_finite(s.amps.iter())?;
        Ok(s)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice().expect("state vectors are contiguous")
    }

    pub fn amplitude(&self, mode: &str, pol: Option<Pol>) -> Result<Complex64> {
        let idx = self
            .basis
            .index(self.basis.mode_index(mode)?, pol.unwrap_or(Pol::H));
        Ok(self.amps[idx])
    }

    /// Polarization content of one arm (length 1 or 2).
    pub fn arm_component(&self, mode: &str) -> Result<Vec<Complex64>> {
        let m = self.basis.mode_index(mode)?;
        Ok(self.basis.arm_indices(m).map(|i| self.amps[i]).collect())
    }

    /// Norm of the projection onto one arm.
    pub fn arm_norm(&self, mode: &str) -> Result<f64> {
        Ok(self
            .arm_component(mode)?
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL
    }

    /// Returns the state rescaled to unit norm, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        StateVector {
            basis: self.basis.clone(),
            amps: self.amps.mapv(|a| a * c),
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        same_basis(&self.basis, &other.basis)?;
        Ok(StateVector {
            basis: self.basis.clone(),
            amps: &self.amps + &other.amps,
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        same_basis(&self.basis, &other.basis)?;
        Ok(StateVector {
            basis: self.basis.clone(),
            amps: &self.amps - &other.amps,
        })
    }

    /// Largest componentwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        same_basis(&self.basis, &other.basis)?;
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Dense square operator with optional unitary/projector flags. A set flag
/// is only ever attached after its defining identity has been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    basis: Basis,
    matrix: Array2<Complex64>,
    unitary: bool,
    projector: bool,
}

impl Operator {
    /// Unflagged operator from a raw matrix.
    pub fn from_matrix(basis: &Basis, matrix: Array2<Complex64>) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: if matrix.nrows() != d {
                    matrix.nrows()
                } else {
                    matrix.ncols()
                },
            });
        }
        check_finite(matrix.iter())?;
        Ok(Operator {
            basis: basis.clone(),
            matrix,
            unitary: false,
            projector: false,
        })
    }

    pub fn identity(basis: &Basis) -> Self {
        Operator {
            basis: basis.clone(),
            matrix: Array2::eye(basis.dim()),
            unitary: true,
            projector: true,
        }
    }

    /// Sets the unitary flag, failing if `U†U = 1` does not hold within [`TOL`].
    pub fn into_unitary(mut self) -> Result<Self> {
        let residual = self.unitarity_residual();
        if residual > TOL {
            return Err(Error::FlagViolation {
                flag: "unitary",
                residual,
            });
        }
        self.unitary = true;
        Ok(self)
    }

    /// Sets the projector flag, failing unless `P² = P` and `P† = P`.
    pub fn into_projector(mut self) -> Result<Self> {
        let residual = self.projector_residual();
        if residual > TOL {
            return Err(Error::FlagViolation {
                flag: "projector",
                residual,
            });
        }
        self.projector = true;
        Ok(self)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_projector(&self) -> bool {
        self.projector
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// max |(U†U − 1)_jk|
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim();
        let prod = self.adjoint_matrix().dot(&self.matrix);
        max_abs(&(prod - Array2::<Complex64>::eye(d)))
    }

    /// max(max |P² − P|, max |P† − P|)
    pub fn projector_residual(&self) -> f64 {
        let sq = self.matrix.dot(&self.matrix);
        let idem = max_abs(&(sq - &self.matrix));
        let herm = max_abs(&(self.adjoint_matrix() - &self.matrix));
        idem.max(herm)
    }

    fn adjoint_matrix(&self) -> Array2<Complex64> {
        self.matrix.t().mapv(|z| z.conj())
    }

    /// Conjugate transpose. Flags carry over unchanged.
    pub fn adjoint(&self) -> Operator {
        Operator {
            basis: self.basis.clone(),
            matrix: self.adjoint_matrix(),
            unitary: self.unitary,
            projector: self.projector,
        }
    }

    /// `self · other` (apply `other` first). The product of two flagged
    /// unitaries is flagged unitary.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        same_basis(&self.basis, &other.basis)?;
        Ok(Operator {
            basis: self.basis.clone(),
            matrix: self.matrix.dot(&other.matrix),
            unitary: self.unitary && other.unitary,
            projector: false,
        })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        same_basis(&self.basis, &state.basis)?;
        StateVector::from_array(self.basis.clone(), self.matrix.dot(&state.amps))
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        same_basis(&self.basis, &other.basis)?;
        Ok(Operator {
            basis: self.basis.clone(),
            matrix: &self.matrix + &other.matrix,
            unitary: false,
            projector: false,
        })
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        same_basis(&self.basis, &other.basis)?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }
}

/// `⟨bra|ket⟩ = Σ conj(bra_k) ket_k`.
pub fn inner(bra: &StateVector, ket: &StateVector) -> Result<Amplitude> {
    same_basis(&bra.basis, &ket.basis)?;
    Ok(bra
        .amps
        .iter()
        .zip(ket.amps.iter())
        .map(|(b, k)| b.conj() * k)
        .sum())
}

pub fn apply(op: &Operator, state: &StateVector) -> Result<StateVector> {
    op.apply(state)
}

pub fn adjoint(op: &Operator) -> Operator {
    op.adjoint()
}

/// Target of a local operator handed to [`embed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subspace {
    /// A `k×k` matrix acting on the listed path modes, identity on polarization.
    Modes(Vec<String>),
    /// A `2×2` matrix acting on the polarization of the listed arms
    /// (all arms when empty).
    Polarization(Vec<String>),
}

/// Lifts a local matrix to a full-space operator that acts as the identity on
/// the complement of `target`. The result carries the unitary/projector
/// flags the local matrix satisfies.
pub fn embed(local: &Array2<Complex64>, target: &Subspace, basis: &Basis) -> Result<Operator> {
    let d = basis.dim();
    let mut m = Array2::<Complex64>::eye(d);
    match target {
        Subspace::Modes(modes) => {
            check_local_shape(local, modes.len())?;
            let idx = resolve_distinct(basis, modes)?;
            for p in 0..basis.pol_dim() {
                let pol = Pol::from_index(p);
                for (a, &ma) in idx.iter().enumerate() {
                    for (b, &mb) in idx.iter().enumerate() {
                        m[[basis.index(ma, pol), basis.index(mb, pol)]] = local[[a, b]];
                    }
                }
            }
        }
        Subspace::Polarization(arms) => {
            if !basis.polarization() {
                return Err(Error::PolarizationDisabled("polarization operator"));
            }
            check_local_shape(local, 2)?;
            let idx = if arms.is_empty() {
                (0..basis.modes().len()).collect()
            } else {
                resolve_distinct(basis, arms)?
            };
            for mode in idx {
                for a in 0..2 {
                    for b in 0..2 {
                        m[[
                            basis.index(mode, Pol::from_index(a)),
                            basis.index(mode, Pol::from_index(b)),
                        ]] = local[[a, b]];
                    }
                }
            }
        }
    }
    let mut op = Operator::from_matrix(basis, m)?;
    let local_op = LocalCheck(local);
    op.unitary = local_op.unitarity_residual() <= TOL;
    op.projector = local_op.projector_residual() <= TOL;
    Ok(op)
}

struct LocalCheck<'a>(&'a Array2<Complex64>);

impl LocalCheck<'_> {
    fn adj(&self) -> Array2<Complex64> {
        self.0.t().mapv(|z| z.conj())
    }

    fn unitarity_residual(&self) -> f64 {
        let n = self.0.nrows();
        max_abs(&(self.adj().dot(self.0) - Array2::<Complex64>::eye(n)))
    }

    fn projector_residual(&self) -> f64 {
        let idem = max_abs(&(self.0.dot(self.0) - self.0));
        idem.max(max_abs(&(self.adj() - self.0)))
    }
}

fn check_local_shape(local: &Array2<Complex64>, expected: usize) -> Result<()> {
    if local.nrows() != expected || local.ncols() != expected {
        return Err(Error::LocalShape {
            expected,
            rows: local.nrows(),
            cols: local.ncols(),
        });
    }
    Ok(())
}

fn resolve_distinct(basis: &Basis, labels: &[String]) -> Result<Vec<usize>> {
    let mut idx = Vec::with_capacity(labels.len());
    for l in labels {
        let i = basis.mode_index(l)?;
        if idx.contains(&i) {
            return Err(Error::IdenticalOperands(l.clone()));
        }
        idx.push(i);
    }
    Ok(idx)
}

pub(crate) fn same_basis(a: &Basis, b: &Basis) -> Result<()> {
    if a == b {
        Ok(())
    } else if a.dim() != b.dim() {
        Err(Error::Dimension {
            expected: a.dim(),
            found: b.dim(),
        })
    } else {
        Err(Error::BasisMismatch)
    }
}

fn check_finite<'a>(it: impl Iterator<Item = &'a Complex64>) -> Result<()> {
    for (i, z) in it.enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

pub(crate) fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
