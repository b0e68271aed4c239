//! Dense complex linear algebra used by the geometry: Hermitian
//! eigendecomposition, SVD, exponentials of skew-Hermitian matrices and
//! spectral matrix functions.
//!
//! Decompositions are delegated to `nalgebra`; this module fixes the
//! conventions on top (descending order, validation, clamping at the
//! boundaries of `arccos`/`arcsin`).

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense complex matrix.
pub type ComplexMatrix = DMatrix<C64>;

/// Eigenvalues that overshoot a closed domain boundary by less than this are clamped onto it.
pub const CLAMP_WINDOW: f64 = 1e-10;

/// Relative asymmetry accepted by [`HermitianMatrix::new`].
const HERMITIAN_TOL: f64 = 1e-12;

const SKEW_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest entrywise deviation of `m` from Hermitian symmetry, measured in the Frobenius norm.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    frobenius_norm(&(m - m.adjoint()))
}

fn skew_defect(m: &ComplexMatrix) -> f64 {
    frobenius_norm(&(m + m.adjoint()))
}

/// `‖AᴴA − I‖_F` for a matrix with orthonormal columns.
pub fn orthonormality_defect(a: &ComplexMatrix) -> f64 {
    let gram = a.adjoint() * a;
    frobenius_norm(&(gram - ComplexMatrix::identity(a.ncols(), a.ncols())))
}

/// A square matrix equal to its conjugate transpose.
///
/// Symmetry is enforced when the value is built, so downstream code can
/// rely on it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates `m` and stores its Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(&m) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let defect = hermitian_defect(&m);
        let scale = frobenius_norm(&m).max(1.0);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (asymmetry {defect:e})"
            )));
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// `(m + mᴴ) / 2`, without any check.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        let h = (m + m.adjoint()) * c64(0.5, 0.0);
        HermitianMatrix(h)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c64(x, 0.0)));
        HermitianMatrix(ComplexMatrix::from_diagonal(&d))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// `tr(AB)`, real for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * c64(s, 0.0))
    }

    /// `U H Uᴴ` for any square `u`; Hermitian-ness is restored after rounding.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(&(u * &self.0 * u.adjoint()))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

/// Spectral decomposition `M = W diag(λ) Wᴴ`, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let w = &self.eigenvectors;
        let mut scaled = w.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lambda);
        }
        scaled * w.adjoint()
    }
}

pub fn hermitian_eig(m: &HermitianMatrix) -> Result<HermitianEigen> {
    if !is_finite(m.as_matrix()) {
        return Err(Error::invalid("non-finite entries in Hermitian eigenproblem"));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let eig = m.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin singular value decomposition `M = U diag(s) Vᴴ`.
///
/// For an `r x c` input with `k = min(r, c)`: `u` is `r x k`, `v` is `c x k`,
/// both with orthonormal columns, and `singular_values` is descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<SvdFactors> {
    if !is_finite(m) {
        return Err(Error::invalid("non-finite entries in SVD input"));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdFactors {
            u: ComplexMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: ComplexMatrix::zeros(cols, 0),
        });
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let singular_values = order.iter().map(|&j| dec.singular_values[j]).collect();
    let u = ComplexMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]);
    let v = ComplexMatrix::from_fn(cols, k, |r, c| v_t[(order[c], r)].conj());
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

/// Precomputed spectral form of a skew-Hermitian `Ω`, so that `e^{tΩ}` can be
/// evaluated for many `t` with one eigendecomposition.
///
/// `Ω = -iK` with `K = iΩ` Hermitian, hence `e^{tΩ} = W diag(e^{-i t μ}) Wᴴ`.
#[derive(Debug, Clone)]
pub struct UnitaryFlow {
    frequencies: Vec<f64>,
    vectors: ComplexMatrix,
}

impl UnitaryFlow {
    pub fn new(omega: &ComplexMatrix) -> Result<Self> {
        if !omega.is_square() {
            return Err(Error::invalid("skew-Hermitian generator must be square"));
        }
        if !is_finite(omega) {
            return Err(Error::invalid("non-finite skew-Hermitian generator"));
        }
        let defect = skew_defect(omega);
        if defect > SKEW_TOL * frobenius_norm(omega).max(1.0) {
            return Err(Error::invalid(format!(
                "generator is not skew-Hermitian (defect {defect:e})"
            )));
        }
        let k = HermitianMatrix::from_hermitian_part(&(omega * c64(0.0, 1.0)));
        let eig = hermitian_eig(&k)?;
        Ok(UnitaryFlow {
            frequencies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `e^{tΩ}`.
    pub fn at(&self, t: f64) -> ComplexMatrix {
        let w = &self.vectors;
        let mut scaled = w.clone();
        for (j, &mu) in self.frequencies.iter().enumerate() {
            let phase = C64::from_polar(1.0, -t * mu);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * w.adjoint()
    }
}

/// Matrix exponential of a skew-Hermitian matrix; the result is unitary.
pub fn expm_skew(omega: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(UnitaryFlow::new(omega)?.at(1.0))
}

/// `W diag(f(λ)) Wᴴ` for the eigendecomposition of `m`.
pub fn spectral_fn<F>(m: &HermitianMatrix, f: F) -> Result<HermitianMatrix>
where
    F: Fn(f64) -> Result<f64>,
{
    let eig = hermitian_eig(m)?;
    let values = eig
        .eigenvalues
        .iter()
        .map(|&x| f(x))
        .collect::<Result<Vec<_>>>()?;
    let mapped = HermitianEigen {
        eigenvalues: values,
        eigenvectors: eig.eigenvectors,
    };
    Ok(HermitianMatrix::from_hermitian_part(&mapped.reconstruct()))
}

/// Clamp `x` into `[0, 1]` if it lies within [`CLAMP_WINDOW`] of it.
pub fn clamp_unit_interval(x: f64) -> Result<f64> {
    if !(-CLAMP_WINDOW..=1.0 + CLAMP_WINDOW).contains(&x) {
        return Err(Error::DomainError(format!(
            "value {x} outside [0, 1] beyond the clamping window"
        )));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `arccos(√λ)` for `λ ∈ [0, 1]`, computed as `atan2(√(1-λ), √λ)` for accuracy near both ends.
pub fn arccos_sqrt(lambda: f64) -> Result<f64> {
    let l = clamp_unit_interval(lambda)?;
    Ok((1.0 - l).sqrt().atan2(l.sqrt()))
}

/// `arcsin(√μ)` for `μ ∈ [0, 1]`.
pub fn arcsin_sqrt(mu: f64) -> Result<f64> {
    let l = clamp_unit_interval(mu)?;
    Ok(l.sqrt().atan2((1.0 - l).sqrt()))
}
