//! The complex Grassmannian `Gr(m, n)` realised as rank-`m` Hermitian
//! projectors in `C^{n x n}`.
//!
//! A point is a projector `P = X Xᴴ` with `XᴴX = I_m`. Tangent vectors at `P`
//! are Hermitian `H` with `[P, [P, H]] = H`, and the metric is the restriction
//! of the Frobenius product `g(H1, H2) = tr(H1 H2)`.
//!
//! Geodesics and parallel transport are unitary conjugation flows:
//!
//! ```text
//! P(t) = e^{t[H,P]} P e^{-t[H,P]}        G(t) = e^{t[H,P]} G e^{-t[H,P]}
//! ```
//!
//! Every point also carries a unitary *frame* `Θ = [X1 X2]` with
//! `P = Θ E Θᴴ`, `E = diag(I_m, 0)`. The frame is what the logarithm and the
//! Karcher gradient work in; along geodesics it is transported by the same
//! unitary flow as the point.

use crate::error::{Error, Result};
use crate::linalg::{
    arccos_sqrt, c64, clamp_unit_interval, commutator, frobenius_norm, hermitian_eig, orthonormality_defect,
    spectral_fn, ComplexMatrix, HermitianMatrix, UnitaryFlow,
};

/// Orthonormality tolerance for [`StiefelBasis::new`].
pub const STIEFEL_TOL: f64 = 1e-10;
/// Idempotency tolerance for projectors.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Tolerance on `|tr P - m|`.
pub const TRACE_TOL: f64 = 1e-8;
/// Tolerance for `‖[P,[P,H]] - H‖`, relative to `max(1, ‖H‖)`.
pub const TANGENT_TOL: f64 = 1e-10;
/// Default cut-locus threshold on `cos²` of the largest principal angle.
pub const CUT_LOCUS_TOL: f64 = 1e-8;
/// Two base points closer than this (Frobenius) are treated as the same point.
const SAME_POINT_TOL: f64 = 1e-10;
/// Frames drifting further than this from unitarity are re-orthonormalized.
const FRAME_REFRESH_TOL: f64 = 1e-12;

/// `ad_P(X) = [P, X]`.
pub fn ad(p: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    commutator(p, x)
}

/// An `n x m` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelBasis(ComplexMatrix);

impl StiefelBasis {
    pub fn new(x: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(x, STIEFEL_TOL)
    }

    pub fn with_tolerance(x: ComplexMatrix, tol: f64) -> Result<Self> {
        if x.ncols() == 0 || x.ncols() > x.nrows() {
            return Err(Error::invalid(format!(
                "Stiefel basis must be n x m with 1 <= m <= n, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if !crate::linalg::is_finite(&x) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        let defect = orthonormality_defect(&x);
        if defect >= tol {
            return Err(Error::invalid(format!(
                "columns are not orthonormal (‖XᴴX - I‖ = {defect:e})"
            )));
        }
        Ok(StiefelBasis(x))
    }

    /// Orthonormalize the columns of `x` (QR with the diagonal of `R` made positive).
    ///
    /// Fails if the columns are numerically linearly dependent.
    pub fn orthonormalize(x: ComplexMatrix) -> Result<Self> {
        let (n, m) = x.shape();
        if m == 0 || m > n || !crate::linalg::is_finite(&x) {
            return Err(Error::invalid("cannot orthonormalize this matrix"));
        }
        let qr = x.qr();
        let r = qr.r();
        let mut q = qr.q();
        let scale = (0..m).map(|j| r[(j, j)].norm()).fold(0.0, f64::max);
        for j in 0..m {
            let d = r[(j, j)];
            if d.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::invalid("columns are linearly dependent"));
            }
            q.column_mut(j).iter_mut().for_each(|z| *z *= d / d.norm());
        }
        StiefelBasis::new(q.columns(0, m).into_owned())
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Subspace dimension `m`.
    pub fn rank(&self) -> usize {
        self.0.ncols()
    }
}

/// A rank-`m` Hermitian projector together with a unitary frame adapted to it.
#[derive(Debug, Clone)]
pub struct GrassmannPoint {
    projector: HermitianMatrix,
    frame: ComplexMatrix,
    rank: usize,
}

impl PartialEq for GrassmannPoint {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.projector == other.projector
    }
}

impl GrassmannPoint {
    /// `P = X Xᴴ`. The frame starts with the columns of `X`.
    pub fn from_basis(x: &StiefelBasis) -> Self {
        let (n, m) = (x.dim(), x.rank());
        let xm = x.as_matrix();
        let p = HermitianMatrix::from_hermitian_part(&(xm * xm.adjoint()));
        let mut frame = ComplexMatrix::zeros(n, n);
        frame.columns_mut(0, m).copy_from(xm);
        if m < n {
            let complement = HermitianMatrix::identity(n).as_matrix() - p.as_matrix();
            let eig = hermitian_eig(&HermitianMatrix::from_hermitian_part(&complement))
                .expect("finite projector");
            frame
                .columns_mut(m, n - m)
                .copy_from(&eig.eigenvectors.columns(0, n - m));
        }
        GrassmannPoint {
            projector: p,
            frame,
            rank: m,
        }
    }

    /// Validates a projector: Hermitian, idempotent, integer trace `m` with `1 <= m < n`.
    pub fn from_projector(p: HermitianMatrix) -> Result<Self> {
        let n = p.dim();
        let pm = p.as_matrix();
        let idem = frobenius_norm(&(pm * pm - pm));
        if idem >= PROJECTOR_TOL {
            return Err(Error::invalid(format!("not idempotent (‖P² - P‖ = {idem:e})")));
        }
        let tr = p.trace();
        let m = tr.round();
        if (tr - m).abs() >= TRACE_TOL || m < 1.0 || m >= n as f64 {
            return Err(Error::invalid(format!(
                "trace {tr} is not an admissible rank for n = {n}"
            )));
        }
        let m = m as usize;
        let eig = hermitian_eig(&p)?;
        if eig.eigenvalues[m - 1] < 0.5 {
            return Err(Error::invalid("projector is rank deficient"));
        }
        Ok(GrassmannPoint {
            projector: p,
            frame: eig.eigenvectors,
            rank: m,
        })
    }

    /// The standard projector `E = diag(I_m, 0)`.
    pub fn standard(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::invalid(format!("need 1 <= m < n, got m = {m}, n = {n}")));
        }
        let id = ComplexMatrix::identity(n, n);
        StiefelBasis::new(id.columns(0, m).into_owned()).map(|x| Self::from_basis(&x))
    }

    fn from_frame(frame: ComplexMatrix, rank: usize) -> Self {
        let frame = if orthonormality_defect(&frame) > FRAME_REFRESH_TOL {
            StiefelBasis::orthonormalize(frame)
                .expect("frame stays unitary along flows")
                .into_matrix()
        } else {
            frame
        };
        let x1 = frame.columns(0, rank);
        let p = HermitianMatrix::from_hermitian_part(&(x1 * x1.adjoint()));
        GrassmannPoint {
            projector: p,
            frame,
            rank,
        }
    }

    pub fn projector(&self) -> &HermitianMatrix {
        &self.projector
    }

    /// Unitary `Θ = [X1 X2]` with `P = Θ E Θᴴ`.
    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    /// Orthonormal basis of the range (the first `m` frame columns).
    pub fn basis(&self) -> StiefelBasis {
        StiefelBasis(self.frame.columns(0, self.rank).into_owned())
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement_basis(&self) -> ComplexMatrix {
        let n = self.dim();
        self.frame.columns(self.rank, n - self.rank).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `‖P² - P‖_F`.
    pub fn idempotency_defect(&self) -> f64 {
        let p = self.projector.as_matrix();
        frobenius_norm(&(p * p - p))
    }

    /// Conjugate by a unitary: `Θ P Θᴴ`.
    pub fn rotate(&self, u: &ComplexMatrix) -> Self {
        Self::from_frame(u * &self.frame, self.rank)
    }

    fn check_compatible(&self, other: &GrassmannPoint) -> Result<()> {
        if self.dim() != other.dim() || self.rank != other.rank {
            return Err(Error::invalid(format!(
                "points live on different Grassmannians: Gr({}, {}) vs Gr({}, {})",
                self.rank,
                self.dim(),
                other.rank,
                other.dim()
            )));
        }
        Ok(())
    }

    fn is_same_point(&self, other: &GrassmannPoint) -> bool {
        self.dim() == other.dim()
            && self.rank == other.rank
            && frobenius_norm(&(self.projector.as_matrix() - other.projector.as_matrix()))
                < SAME_POINT_TOL
    }

    /// Orthogonal projection onto the tangent space: `Π_P(X) = [P, [P, X]]`.
    pub fn project(&self, x: &HermitianMatrix) -> Result<TangentVector> {
        if x.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                x.dim(),
                self.dim()
            )));
        }
        let p = self.projector.as_matrix();
        let h = ad(p, &ad(p, x.as_matrix()));
        Ok(TangentVector {
            base: self.clone(),
            h: HermitianMatrix::from_hermitian_part(&h),
        })
    }

    /// Wrap `h` as a tangent vector at this point, checking `[P,[P,H]] = H`.
    pub fn tangent(&self, h: HermitianMatrix) -> Result<TangentVector> {
        if h.dim() != self.dim() {
            return Err(Error::invalid("dimension mismatch"));
        }
        let p = self.projector.as_matrix();
        let defect = frobenius_norm(&(ad(p, &ad(p, h.as_matrix())) - h.as_matrix()));
        if defect >= TANGENT_TOL * h.frobenius_norm().max(1.0) {
            return Err(Error::invalid(format!(
                "matrix is not tangent at this point (defect {defect:e})"
            )));
        }
        Ok(TangentVector {
            base: self.clone(),
            h,
        })
    }

    pub fn zero_tangent(&self) -> TangentVector {
        TangentVector {
            base: self.clone(),
            h: HermitianMatrix::zeros(self.dim()),
        }
    }

    /// Tangent vector from its off-diagonal block in this point's frame:
    /// `H = Θ [[0, Bᴴ], [B, 0]] Θᴴ` with `B` of size `(n-m) x m`.
    pub fn tangent_from_block(&self, b: &ComplexMatrix) -> Result<TangentVector> {
        let (n, m) = (self.dim(), self.rank);
        if b.shape() != (n - m, m) {
            return Err(Error::invalid(format!(
                "tangent block must be {}x{}, got {}x{}",
                n - m,
                m,
                b.nrows(),
                b.ncols()
            )));
        }
        let x1 = self.frame.columns(0, m);
        let x2 = self.frame.columns(m, n - m);
        let half = x2 * b * x1.adjoint();
        let h = &half + half.adjoint();
        Ok(TangentVector {
            base: self.clone(),
            h: HermitianMatrix::from_hermitian_part(&h),
        })
    }

    pub fn geodesic(&self, h: &TangentVector, t: f64) -> Result<GrassmannPoint> {
        Ok(Geodesic::new(self, h)?.point(t))
    }

    /// Riemannian exponential: the geodesic with initial velocity `h` at `t = 1`.
    pub fn exp(&self, h: &TangentVector) -> Result<GrassmannPoint> {
        self.geodesic(h, 1.0)
    }

    /// Cosines squared of the principal angles to `other`, descending.
    ///
    /// These are the eigenvalues of `Yᴴ P Y` where `Y` spans `other`.
    pub fn principal_cosines_sq(&self, other: &GrassmannPoint) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        let y = other.frame.columns(0, other.rank);
        let block = y.adjoint() * self.projector.as_matrix() * y;
        Ok(hermitian_eig(&HermitianMatrix::from_hermitian_part(&block))?.eigenvalues)
    }

    /// Sines squared of the principal angles to `other`, ascending: the
    /// eigenvalues of `BᴴB` with `B = X2ᴴ Y`.
    pub fn principal_sines_sq(&self, other: &GrassmannPoint) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        let y = other.frame.columns(0, other.rank);
        let b = self.frame.columns(self.rank, self.dim() - self.rank).adjoint() * y;
        let block = b.adjoint() * b;
        let mut mu = hermitian_eig(&HermitianMatrix::from_hermitian_part(&block))?.eigenvalues;
        mu.reverse();
        Ok(mu)
    }

    /// Principal angles to `other` in radians, ascending.
    ///
    /// Each angle is `atan2(sin, cos)` from both spectra, which keeps small
    /// and near-right angles accurate.
    pub fn principal_angles(&self, other: &GrassmannPoint) -> Result<Vec<f64>> {
        let cos_sq = self.principal_cosines_sq(other)?;
        let sin_sq = self.principal_sines_sq(other)?;
        cos_sq
            .into_iter()
            .zip(sin_sq)
            .map(|(c, s)| {
                let (c, s) = (clamp_unit_interval(c)?, clamp_unit_interval(s)?);
                Ok(s.sqrt().atan2(c.sqrt()))
            })
            .collect()
    }

    /// Geodesic distance `√(2 Σ θ_i²)` over the principal angles `θ_i`.
    pub fn distance(&self, other: &GrassmannPoint) -> Result<f64> {
        let angles = self.principal_angles(other)?;
        Ok((2.0 * angles.iter().map(|a| a * a).sum::<f64>()).sqrt())
    }

    /// Riemannian logarithm at `self` with the default cut-locus tolerance.
    pub fn log(&self, target: &GrassmannPoint) -> Result<TangentVector> {
        self.log_with_tolerance(target, CUT_LOCUS_TOL)
    }

    /// The unique `ξ ∈ T_Q` with `exp_Q(ξ) = target`, where `Q = self`.
    ///
    /// In the frame of `Q` the target reads `[[P11, P12], [P12ᴴ, P22]]`, and the
    /// upper block of `ξ` is `Bᴴ = g(P11) P12` with
    /// `g(λ) = arccos(√λ) / √(λ(1-λ))` applied spectrally. `g` is smooth up to
    /// `λ = 1`, so repeated or vanishing angles need no special casing.
    pub fn log_with_tolerance(&self, target: &GrassmannPoint, tol: f64) -> Result<TangentVector> {
        self.check_compatible(target)?;
        let (n, m) = (self.dim(), self.rank);
        let x1 = self.frame.columns(0, m);
        let x2 = self.frame.columns(m, n - m);
        let p = target.projector.as_matrix();
        let p11 = HermitianMatrix::from_hermitian_part(&(x1.adjoint() * p * x1));
        let p12 = x1.adjoint() * p * x2;

        let eig = hermitian_eig(&p11)?;
        let smallest = eig.eigenvalues[m - 1];
        if smallest <= tol {
            return Err(Error::CutLocus(format!(
                "largest principal angle is pi/2 within tolerance (cos² = {smallest:e})"
            )));
        }
        let g = spectral_fn(&p11, angle_over_sincos)?;
        let b_adj = g.as_matrix() * p12;
        self.tangent_from_block(&b_adj.adjoint())
    }
}

/// `θ / (sin θ cos θ)` for `λ = cos² θ`, with its limit 1 at `λ = 1`.
fn angle_over_sincos(lambda: f64) -> Result<f64> {
    let theta = arccos_sqrt(lambda)?;
    if theta < 1e-4 {
        let x2 = 4.0 * theta * theta;
        return Ok(1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0);
    }
    Ok(2.0 * theta / (2.0 * theta).sin())
}

/// A Hermitian matrix tangent to the Grassmannian at its base point.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: GrassmannPoint,
    h: HermitianMatrix,
}

impl TangentVector {
    pub fn base(&self) -> &GrassmannPoint {
        &self.base
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        self.h.as_matrix()
    }

    fn check_same_base(&self, other: &TangentVector) -> Result<()> {
        if !self.base.is_same_point(&other.base) {
            return Err(Error::invalid("tangent vectors are based at different points"));
        }
        Ok(())
    }

    /// `g_P(H1, H2) = tr(H1 H2)`.
    pub fn metric(&self, other: &TangentVector) -> Result<f64> {
        self.check_same_base(other)?;
        Ok(self.h.trace_product(&other.h))
    }

    pub fn norm(&self) -> f64 {
        self.h.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            h: self.h.scale(s),
        }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_same_base(other)?;
        Ok(TangentVector {
            base: self.base.clone(),
            h: &self.h + &other.h,
        })
    }

    pub fn sub(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_same_base(other)?;
        Ok(TangentVector {
            base: self.base.clone(),
            h: &self.h - &other.h,
        })
    }

    /// `‖[P,[P,H]] - H‖_F`.
    pub fn tangency_defect(&self) -> f64 {
        let p = self.base.projector.as_matrix();
        frobenius_norm(&(ad(p, &ad(p, self.as_matrix())) - self.as_matrix()))
    }

    /// Parallel transport of `self` along the geodesic through the common base
    /// point with velocity `direction`, evaluated at time `t`.
    pub fn parallel_transport(&self, direction: &TangentVector, t: f64) -> Result<TangentVector> {
        self.check_same_base(direction)?;
        let geo = Geodesic::new(&direction.base, direction)?;
        geo.transport(self, t)
    }
}

/// The geodesic `t ↦ e^{tΩ} P e^{-tΩ}` with `Ω = [H, P]`, with `e^{tΩ}`
/// precomputed so that many evaluations share one eigendecomposition.
#[derive(Debug, Clone)]
pub struct Geodesic {
    start: GrassmannPoint,
    velocity: TangentVector,
    flow: UnitaryFlow,
}

impl Geodesic {
    pub fn new(start: &GrassmannPoint, velocity: &TangentVector) -> Result<Self> {
        if !start.is_same_point(&velocity.base) {
            return Err(Error::invalid("velocity is not based at the geodesic start"));
        }
        let omega = commutator(velocity.as_matrix(), start.projector.as_matrix());
        Ok(Geodesic {
            start: start.clone(),
            velocity: velocity.clone(),
            flow: UnitaryFlow::new(&omega)?,
        })
    }

    pub fn start(&self) -> &GrassmannPoint {
        &self.start
    }

    pub fn initial_velocity(&self) -> &TangentVector {
        &self.velocity
    }

    /// `e^{tΩ}`.
    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        self.flow.at(t)
    }

    pub fn point(&self, t: f64) -> GrassmannPoint {
        if t == 0.0 {
            return self.start.clone();
        }
        self.start.rotate(&self.flow.at(t))
    }

    /// Parallel transport of a vector tangent at the start to time `t`.
    pub fn transport(&self, v: &TangentVector, t: f64) -> Result<TangentVector> {
        if !self.start.is_same_point(&v.base) {
            return Err(Error::invalid("vector is not based at the geodesic start"));
        }
        Ok(self.transport_with(v, &self.flow.at(t), &self.point(t)))
    }

    /// Transport using an already evaluated unitary and end point.
    pub(crate) fn transport_with(
        &self,
        v: &TangentVector,
        u: &ComplexMatrix,
        end: &GrassmannPoint,
    ) -> TangentVector {
        TangentVector {
            base: end.clone(),
            h: v.h.conjugate_by(u),
        }
    }

    /// Velocity at time `t`, i.e. the initial velocity transported along itself.
    pub fn velocity(&self, t: f64) -> TangentVector {
        let u = self.flow.at(t);
        let end = self.start.rotate(&u);
        self.transport_with(&self.velocity, &u, &end)
    }
}

/// Builds the `2 x 2` rotation-like tangent `[[0, 1], [1, 0]]` scaled by `s`; handy in tests.
#[doc(hidden)]
pub fn cp1_swap_tangent(at: &GrassmannPoint, s: f64) -> Result<TangentVector> {
    let h = ComplexMatrix::from_row_slice(
        2,
        2,
        &[c64(0.0, 0.0), c64(s, 0.0), c64(s, 0.0), c64(0.0, 0.0)],
    );
    at.tangent(HermitianMatrix::new(h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_point, random_stiefel, random_tangent, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    fn e2() -> GrassmannPoint {
        GrassmannPoint::standard(2, 1).unwrap()
    }

    fn cp1_curve(t: f64) -> ComplexMatrix {
        let (c, s) = (t.cos(), t.sin());
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(c * c, 0.0), c64(s * c, 0.0), c64(s * c, 0.0), c64(s * s, 0.0)],
        )
    }

    #[test]
    fn standard_projector_from_identity_columns() {
        let x = StiefelBasis::new(ComplexMatrix::identity(4, 4).columns(0, 2).into_owned()).unwrap();
        let p = GrassmannPoint::from_basis(&x);
        let expected = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.projector(), &expected);
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn projector_of_complex_line() {
        let r = 1.0 / SQRT_2;
        let x = StiefelBasis::new(ComplexMatrix::from_column_slice(2, 1, &[c64(r, 0.0), c64(0.0, r)]))
            .unwrap();
        let p = GrassmannPoint::from_basis(&x);
        let expected = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(0.5, 0.0), c64(0.0, -0.5), c64(0.0, 0.5), c64(0.5, 0.0)],
        );
        assert!(frobenius_norm(&(p.projector().as_matrix() - expected)) < 1e-15);

        // basis_from_projector recovers span{(1, i)}
        let back = GrassmannPoint::from_projector(p.projector().clone()).unwrap().basis();
        let v = back.as_matrix();
        let overlap = (v[(0, 0)].conj() * c64(r, 0.0) + v[(1, 0)].conj() * c64(0.0, r)).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_gauge_invariance() {
        let mut r = rng();
        let x = random_stiefel(5, 2, &mut r);
        let g = random_unitary(2, &mut r);
        let xg = StiefelBasis::new(x.as_matrix() * g).unwrap();
        let a = GrassmannPoint::from_basis(&x);
        let b = GrassmannPoint::from_basis(&xg);
        assert!(frobenius_norm(&(a.projector().as_matrix() - b.projector().as_matrix())) < 1e-12);
    }

    #[test]
    fn stiefel_rejects_non_orthonormal() {
        let x = ComplexMatrix::from_element(3, 1, c64(1.0, 0.0));
        assert!(matches!(StiefelBasis::new(x), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn basis_roundtrip() {
        let mut r = rng();
        for _ in 0..10 {
            let p = random_point(6, 3, &mut r);
            let q = GrassmannPoint::from_projector(p.projector().clone()).unwrap();
            let again = GrassmannPoint::from_basis(&q.basis());
            assert!(
                frobenius_norm(&(again.projector().as_matrix() - p.projector().as_matrix())) < 1e-8
            );
        }
    }

    #[test]
    fn from_projector_rejects_non_projectors() {
        let half = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!(GrassmannPoint::from_projector(half).is_err());
        let full = HermitianMatrix::identity(3);
        assert!(GrassmannPoint::from_projector(full).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let mut r = rng();
        let p = random_point(5, 2, &mut r);
        let x = random_hermitian(5, &mut r);
        let t = p.project(&x).unwrap();
        let tt = p.project(t.as_hermitian()).unwrap();
        assert!(frobenius_norm(&(tt.as_matrix() - t.as_matrix())) < 1e-10);
        let normal = x.as_matrix() - t.as_matrix();
        let inner = HermitianMatrix::from_hermitian_part(&normal).trace_product(t.as_hermitian());
        assert!(inner.abs() < 1e-10);
        assert!(t.tangency_defect() < 1e-10);
    }

    #[test]
    fn projecting_the_base_point_gives_zero() {
        let mut r = rng();
        let p = random_point(4, 2, &mut r);
        let t = p.project(p.projector()).unwrap();
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn projection_dimension_mismatch() {
        let p = e2();
        assert!(matches!(
            p.project(&HermitianMatrix::identity(3)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn metric_examples() {
        let p = e2();
        let h = cp1_swap_tangent(&p, 1.0).unwrap();
        assert!((h.metric(&h).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(p.zero_tangent().metric(&h).unwrap(), 0.0);
        let other = random_point(2, 1, &mut rng());
        assert!(other.zero_tangent().metric(&h).is_err());
    }

    #[test]
    fn cp1_geodesic_closed_form() {
        let p0 = e2();
        let h = cp1_swap_tangent(&p0, 1.0).unwrap();
        for &t in &[0.0, 0.3, 1.0, FRAC_PI_2] {
            let pt = p0.geodesic(&h, t).unwrap();
            assert!(frobenius_norm(&(pt.projector().as_matrix() - cp1_curve(t))) < 1e-13);
        }
        let end = p0.geodesic(&h, FRAC_PI_2).unwrap();
        let expected = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(frobenius_norm(&(end.projector().as_matrix() - expected.as_matrix())) < 1e-13);
        assert_eq!(
            p0.exp(&h).unwrap().projector(),
            p0.geodesic(&h, 1.0).unwrap().projector()
        );
    }

    #[test]
    fn zero_velocity_geodesic_is_constant() {
        let mut r = rng();
        let p = random_point(5, 2, &mut r);
        let q = p.geodesic(&p.zero_tangent(), 3.0).unwrap();
        assert!(frobenius_norm(&(q.projector().as_matrix() - p.projector().as_matrix())) < 1e-13);
    }

    #[test]
    fn geodesic_initial_velocity_by_finite_differences() {
        let mut r = rng();
        let p = random_point(5, 2, &mut r);
        let h = random_tangent(&p, 0.7, &mut r);
        let step = 1e-5;
        let plus = p.geodesic(&h, step).unwrap();
        let minus = p.geodesic(&h, -step).unwrap();
        let fd = (plus.projector().as_matrix() - minus.projector().as_matrix()) * c64(0.5 / step, 0.0);
        assert!(frobenius_norm(&(fd - h.as_matrix())) < 1e-8);
    }

    #[test]
    fn cp1_log_inverts_closed_form() {
        let p0 = e2();
        for &t0 in &[0.1, 0.6, 1.2, 1.5] {
            let target = GrassmannPoint::from_projector(HermitianMatrix::new(cp1_curve(t0)).unwrap())
                .unwrap();
            let xi = p0.log(&target).unwrap();
            let expected = cp1_swap_tangent(&p0, t0).unwrap();
            assert!(frobenius_norm(&(xi.as_matrix() - expected.as_matrix())) < 1e-10, "t0 = {t0}");
        }
    }

    #[test]
    fn log_at_self_is_zero() {
        let mut r = rng();
        let q = random_point(6, 2, &mut r);
        assert!(q.log(&q).unwrap().norm() < 1e-12);
    }

    #[test]
    fn log_cut_locus() {
        let a = e2();
        let b = GrassmannPoint::from_projector(HermitianMatrix::from_real_diagonal(&[0.0, 1.0])).unwrap();
        assert!(a.log(&b).unwrap_err().is_cut_locus());
    }

    #[test]
    fn log_rank_mismatch() {
        let mut r = rng();
        let a = random_point(5, 2, &mut r);
        let b = random_point(5, 1, &mut r);
        assert!(matches!(a.log(&b), Err(Error::InvalidInput(_))));
        assert!(matches!(a.distance(&b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn exp_log_roundtrip() {
        let mut r = rng();
        for _ in 0..20 {
            let q = random_point(6, 2, &mut r);
            let xi = random_tangent(&q, 0.8, &mut r);
            let p = q.exp(&xi).unwrap();
            let back = q.log(&p).unwrap();
            assert!(frobenius_norm(&(back.as_matrix() - xi.as_matrix())) < 1e-8);
            assert!((q.distance(&p).unwrap() - back.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_examples() {
        let a = e2();
        assert!(a.distance(&a).unwrap().abs() < 1e-15);
        let h = cp1_swap_tangent(&a, 1.0).unwrap();
        for &t in &[0.05, 0.4, 1.0, FRAC_PI_2] {
            let p = a.geodesic(&h, t).unwrap();
            assert!((a.distance(&p).unwrap() - SQRT_2 * t).abs() < 1e-10);
        }
        let b = GrassmannPoint::from_projector(HermitianMatrix::from_real_diagonal(&[0.0, 1.0])).unwrap();
        assert!((a.distance(&b).unwrap() - SQRT_2 * FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn tiny_angles_are_resolved() {
        let mut r = rng();
        let p = random_point(6, 2, &mut r);
        for &radius in &[1e-6, 1e-9, 1e-12] {
            let xi = random_tangent(&p, radius, &mut r);
            let q = p.exp(&xi).unwrap();
            let d = p.distance(&q).unwrap();
            assert!((d - radius).abs() < 1e-3 * radius, "{d} vs {radius}");
        }
    }

    #[test]
    fn distance_is_symmetric_and_unitarily_invariant() {
        let mut r = rng();
        for _ in 0..10 {
            let p = random_point(5, 2, &mut r);
            let q = random_point(5, 2, &mut r);
            let u = random_unitary(5, &mut r);
            let d = p.distance(&q).unwrap();
            assert!((d - q.distance(&p).unwrap()).abs() < 1e-10);
            assert!((d - p.rotate(&u).distance(&q.rotate(&u)).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn transport_at_zero_and_along_itself() {
        let mut r = rng();
        let p = random_point(5, 2, &mut r);
        let h = random_tangent(&p, 1.0, &mut r);
        let g = random_tangent(&p, 1.0, &mut r);
        let g0 = g.parallel_transport(&h, 0.0).unwrap();
        assert!(frobenius_norm(&(g0.as_matrix() - g.as_matrix())) < 1e-13);

        // velocity of the geodesic at t, by central differences
        let t = 0.4;
        let step = 1e-5;
        let geo = Geodesic::new(&p, &h).unwrap();
        let fd = (geo.point(t + step).projector().as_matrix()
            - geo.point(t - step).projector().as_matrix())
            * c64(0.5 / step, 0.0);
        let moved = h.parallel_transport(&h, t).unwrap();
        assert!(frobenius_norm(&(fd - moved.as_matrix())) < 1e-8);
        assert!(moved.tangency_defect() < 1e-10);
    }

    #[test]
    fn transport_is_an_isometry() {
        let mut r = rng();
        let p = random_point(6, 3, &mut r);
        let h = random_tangent(&p, 1.3, &mut r);
        let g = random_tangent(&p, 0.9, &mut r);
        let tg = g.parallel_transport(&h, 0.8).unwrap();
        let th = h.parallel_transport(&h, 0.8).unwrap();
        assert!((tg.norm() - g.norm()).abs() < 1e-10);
        assert!((tg.metric(&th).unwrap() - g.metric(&h).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ad_cubed_equals_ad() {
        let mut r = rng();
        let p = random_point(6, 2, &mut r);
        let x = random_hermitian(6, &mut r);
        let pm = p.projector().as_matrix();
        let once = ad(pm, x.as_matrix());
        let thrice = ad(pm, &ad(pm, &once));
        assert!(frobenius_norm(&(thrice - once)) < 1e-10);
    }
}
