// SPDX-License-Identifier: Apache-2.0

//! Dense complex operators over labeled tensor-product spaces.
//!
//! Subsystem order is tensor order (the first subsystem is the most
//! significant index). Within a spin subsystem the basis runs over descending
//! magnetic quantum number, so index 0 of a spin-1/2 is `m = +1/2` and index 0
//! of a spin-1 is `m = +1`.
//!
//! Hamiltonians are expressed in Hz; propagators carry the `2π` factor.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
pub use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Numerical tolerances shared by every validation in the crate.
pub mod tol {
    /// Max |A − A†| for an operator flagged Hermitian.
    pub const HERMITIAN: f64 = 1e-12;
    /// Max |U U† − I| for an operator flagged unitary.
    pub const UNITARY: f64 = 1e-10;
    /// |tr ρ − 1| for a density matrix.
    pub const TRACE: f64 = 1e-10;
    /// Most negative eigenvalue tolerated in a density matrix.
    pub const PSD: f64 = 1e-10;
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Ordered list of named subsystems and their dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLabel {
    subsystems: Vec<(String, usize)>,
}

impl SpaceLabel {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<(String, usize)> =
            subsystems.into_iter().map(|(n, d)| (n.into(), d)).collect();
        if subsystems.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        for (k, (name, dim)) in subsystems.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::InvalidSpace(format!("subsystem `{name}` has dimension 0")));
            }
            if subsystems[..k].iter().any(|(other, _)| other == name) {
                return Err(Error::NameCollision(name.clone()));
            }
        }
        Ok(Self { subsystems })
    }

    pub fn single(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(name.into(), dim)])
    }

    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[(String, usize)] {
        &self.subsystems
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|(n, _)| n.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.subsystems.iter().position(|(n, _)| n == name)
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.position(name).map(|k| self.subsystems[k].1)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    /// Tensor-product space `self ⊗ other`.
    pub fn concat(&self, other: &SpaceLabel) -> Result<SpaceLabel> {
        Self::new(self.subsystems.iter().chain(other.subsystems.iter()).cloned())
    }

    /// Splits a flat index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.subsystems.len()];
        for (k, (_, d)) in self.subsystems.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (&x, (_, d))| acc * d + x)
    }
}

impl fmt::Display for SpaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|(n, d)| format!("{n}[{d}]"))
            .collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

/// Square complex matrix acting on a labeled space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SpaceLabel,
    mat: CMatrix,
}

impl Operator {
    pub fn new(space: SpaceLabel, mat: CMatrix) -> Result<Self> {
        let d = space.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(Self { space, mat })
    }

    pub fn identity(space: &SpaceLabel) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: &SpaceLabel) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::zeros(d, d),
        }
    }

    pub fn from_diagonal(space: &SpaceLabel, diag: &[f64]) -> Result<Self> {
        let d = space.dim();
        if diag.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: diag.len(),
            });
        }
        let mut mat = CMatrix::zeros(d, d);
        for (k, &x) in diag.iter().enumerate() {
            mat[(k, k)] = C64::new(x, 0.0);
        }
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }

    /// Outer product `|ket⟩⟨bra|`.
    pub fn outer(space: &SpaceLabel, ket: &[C64], bra: &[C64]) -> Result<Self> {
        let d = space.dim();
        if ket.len() != d || bra.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ket.len().max(bra.len()),
            });
        }
        let mat = CMatrix::from_fn(d, d, |i, j| ket[i] * bra[j].conj());
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Same matrix on a relabeled space of equal total dimension.
    pub fn with_space(self, space: SpaceLabel) -> Result<Self> {
        Self::new(space, self.mat)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.map(|z| z.conj()),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.map(|z| z * s),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.map(|z| z * s),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `(A + A†)/2`; makes hand-built Hamiltonians exactly Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let mat = (&self.mat + self.mat.adjoint()).map(|z| z * 0.5);
        Self {
            space: self.space.clone(),
            mat,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= tol::HERMITIAN
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let err = self.hermiticity_error();
        if err > tol::HERMITIAN {
            return Err(Error::NotHermitian(err));
        }
        Ok(())
    }

    /// max |U U† − I|.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let prod = &self.mat * self.mat.adjoint();
        (prod - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= tol::UNITARY
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// Lifts an operator on a single subsystem of `full` to the whole space.
    pub fn embed(&self, full: &SpaceLabel) -> Result<Operator> {
        if self.space.len() != 1 {
            return Err(Error::SpaceMismatch(format!(
                "embed expects a single-subsystem operator, got {}",
                self.space
            )));
        }
        let (name, dim) = &self.space.subsystems()[0];
        let pos = full
            .position(name)
            .ok_or_else(|| Error::UnknownSubsystem(name.clone()))?;
        let full_dim = full.subsystems()[pos].1;
        if full_dim != *dim {
            return Err(Error::DimensionMismatch {
                expected: full_dim,
                found: *dim,
            });
        }
        let left: usize = full.subsystems()[..pos].iter().map(|(_, d)| d).product();
        let right: usize = full.subsystems()[pos + 1..].iter().map(|(_, d)| d).product();
        let mat = CMatrix::identity(left, left)
            .kronecker(&self.mat)
            .kronecker(&CMatrix::identity(right, right));
        Ok(Operator {
            space: full.clone(),
            mat,
        })
    }

    fn check_same_space(&self, other: &Operator, op: &str) {
        assert_eq!(
            self.space, other.space,
            "operator {op} on mismatched spaces: {} vs {}",
            self.space, other.space
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs, "+");
        Operator {
            space: self.space.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs, "-");
        Operator {
            space: self.space.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs, "*");
        Operator {
            space: self.space.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: SpaceLabel,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: SpaceLabel, mat: CMatrix) -> Result<Self> {
        let op = Operator::new(space, mat)?;
        Self::from_operator(op)
    }

    pub fn from_operator(op: Operator) -> Result<Self> {
        op.require_hermitian()?;
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidTrace(tr.re));
        }
        let (vals, _) = eig_hermitian(&op)?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        Ok(Self {
            space: op.space,
            mat: op.mat,
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(space: &SpaceLabel, psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter {
                name: "psi",
                reason: "zero vector".into(),
            });
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::from_operator(Operator::outer(space, &v, &v)?)
    }

    pub fn maximally_mixed(space: &SpaceLabel) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::identity(d, d).map(|z| z / d as f64),
        }
    }

    /// Basis projector `|k⟩⟨k|`.
    pub fn basis(space: &SpaceLabel, k: usize) -> Result<Self> {
        let d = space.dim();
        if k >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k + 1,
            });
        }
        let mut mat = CMatrix::zeros(d, d);
        mat[(k, k)] = ONE;
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }

    /// Bypasses validation; for states produced by operations that preserve
    /// the invariants up to rounding (unitary conjugation, partial trace).
    pub(crate) fn from_parts_unchecked(space: SpaceLabel, mat: CMatrix) -> Self {
        Self { space, mat }
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn to_operator(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            mat: self.mat.clone(),
        }
    }

    /// Re-checks every invariant; used to audit states produced internally.
    pub fn validate(&self) -> Result<()> {
        Self::from_operator(self.to_operator()).map(|_| ())
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Result<Self> {
        if u.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "unitary on {} applied to state on {}",
                u.space(),
                self.space
            )));
        }
        let mat = &u.mat * &self.mat * u.mat.adjoint();
        // symmetrize rounding so Hermiticity holds to machine precision
        let mat = (&mat + mat.adjoint()).map(|z| z * 0.5);
        Ok(Self {
            space: self.space.clone(),
            mat,
        })
    }

    /// `ρ ⊗ σ`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Ok(Self {
            space,
            mat: self.mat.kronecker(&other.mat),
        })
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: format!("{w} outside [0, 1]"),
            });
        }
        Ok(Self {
            space: self.space.clone(),
            mat: self.mat.map(|z| z * w) + other.mat.map(|z| z * (1.0 - w)),
        })
    }
}

/// `(Sx, Sy, Sz)` in the descending-`m` basis, on a subsystem named `"s"`.
pub fn spin_operators(spin: f64) -> Result<[Operator; 3]> {
    let dim = if spin == 0.5 {
        2
    } else if spin == 1.0 {
        3
    } else {
        return Err(Error::UnsupportedSpin(spin));
    };
    let space = SpaceLabel::single("s", dim)?;
    let m: Vec<f64> = (0..dim).map(|k| spin - k as f64).collect();
    let mut sp = CMatrix::zeros(dim, dim);
    // S+ |m⟩ = sqrt(s(s+1) − m(m+1)) |m+1⟩; index k−1 holds m+1
    for k in 1..dim {
        let mk = m[k];
        sp[(k - 1, k)] = C64::new((spin * (spin + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm).map(|z| z * 0.5);
    let sy = (&sp - &sm).map(|z| z * C64::new(0.0, -0.5));
    let sz = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        m.iter().map(|&x| C64::new(x, 0.0)),
    ));
    Ok([
        Operator::new(space.clone(), sx)?,
        Operator::new(space.clone(), sy)?,
        Operator::new(space, sz)?,
    ])
}

/// Spin operators relabeled onto a named subsystem.
pub fn spin_operators_on(name: &str, spin: f64) -> Result<[Operator; 3]> {
    let [x, y, z] = spin_operators(spin)?;
    let space = SpaceLabel::single(name, x.dim())?;
    Ok([
        x.with_space(space.clone())?,
        y.with_space(space.clone())?,
        z.with_space(space)?,
    ])
}

/// Pauli matrices on a qubit subsystem named `name` (twice the spin-1/2 operators).
pub fn pauli_on(name: &str) -> Result<[Operator; 3]> {
    let [x, y, z] = spin_operators_on(name, 0.5)?;
    Ok([x.scale(2.0), y.scale(2.0), z.scale(2.0)])
}

/// Tensor product; the result space is the concatenation of both spaces.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let space = a.space.concat(&b.space)?;
    Ok(Operator {
        space,
        mat: a.mat.kronecker(&b.mat),
    })
}

/// Eigenvalues in descending order and the matching eigenvector columns.
pub fn eig_hermitian(h: &Operator) -> Result<(Vec<f64>, Operator)> {
    h.require_hermitian()?;
    let eig = h.mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let d = h.dim();
    let vectors = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((
        values,
        Operator {
            space: h.space.clone(),
            mat: vectors,
        },
    ))
}

/// Cached spectral decomposition of a Hermitian generator, for repeated
/// propagators `exp(−i 2π H t)` at many times.
#[derive(Clone, Debug)]
pub struct Propagator {
    space: SpaceLabel,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        let (values, vectors) = eig_hermitian(h)?;
        Ok(Self {
            space: h.space.clone(),
            values,
            vectors: vectors.mat,
        })
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Raw matrix of `exp(−i 2π H t)`.
    pub fn matrix_at(&self, t: f64) -> CMatrix {
        let d = self.values.len();
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&e| C64::from_polar(1.0, -2.0 * PI * e * t))
            .collect();
        let scaled = CMatrix::from_fn(d, d, |i, j| self.vectors[(i, j)] * phases[j]);
        scaled * self.vectors.adjoint()
    }

    pub fn at(&self, t: f64) -> Operator {
        Operator {
            space: self.space.clone(),
            mat: self.matrix_at(t),
        }
    }
}

/// `exp(−i 2π h t)` for Hermitian `h` in Hz and `t` in seconds.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Propagator::new(h)?.at(t))
}

/// Partial trace of a raw operator, keeping `keep` in original order.
pub fn partial_trace_operator(op: &Operator, keep: &[&str]) -> Result<Operator> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter {
            name: "keep",
            reason: "must name at least one subsystem".into(),
        });
    }
    let space = op.space();
    for name in keep {
        if !space.contains(name) {
            return Err(Error::UnknownSubsystem((*name).to_string()));
        }
    }
    let kept_flags: Vec<bool> = space
        .subsystems()
        .iter()
        .map(|(n, _)| keep.contains(&n.as_str()))
        .collect();
    let kept_space = SpaceLabel::new(
        space
            .subsystems()
            .iter()
            .zip(&kept_flags)
            .filter(|(_, &k)| k)
            .map(|((n, d), _)| (n.clone(), *d)),
    )?;
    let d = space.dim();
    let mut kept_idx = vec![0usize; d];
    let mut traced_idx = vec![0usize; d];
    for (i, (ki, ti)) in kept_idx.iter_mut().zip(traced_idx.iter_mut()).enumerate() {
        let digits = space.digits(i);
        for ((x, (_, dim)), &k) in digits.iter().zip(space.subsystems()).zip(&kept_flags) {
            if k {
                *ki = *ki * dim + x;
            } else {
                *ti = *ti * dim + x;
            }
        }
    }
    let dk = kept_space.dim();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..d {
        for j in 0..d {
            if traced_idx[i] == traced_idx[j] {
                out[(kept_idx[i], kept_idx[j])] += op.mat[(i, j)];
            }
        }
    }
    Operator::new(kept_space, out)
}

/// Reduced state on the subsystems named in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let reduced = partial_trace_operator(&rho.to_operator(), keep)?;
    let mat = (&reduced.mat + reduced.mat.adjoint()).map(|z| z * 0.5);
    Ok(DensityMatrix::from_parts_unchecked(reduced.space, mat))
}
