//! Random matrices and points for tests, examples and the experiment harness.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grassmann::{GrassmannPoint, StiefelBasis, TangentVector};
use crate::linalg::{c64, C64, ComplexMatrix, HermitianMatrix};

/// Entries with independent standard normal real and imaginary parts.
pub fn random_complex<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re, im)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::from_hermitian_part(&random_complex(n, n, rng))
}

/// Haar-distributed unitary (QR of a complex Gaussian matrix with the phases of `R` removed).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = random_complex(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

pub fn random_stiefel<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> StiefelBasis {
    let u = random_unitary(n, rng);
    StiefelBasis::new(u.columns(0, m).into_owned()).expect("columns of a unitary are orthonormal")
}

pub fn random_point<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> GrassmannPoint {
    GrassmannPoint::from_basis(&random_stiefel(n, m, rng))
}

/// A random tangent vector at `base`, scaled to the given metric norm.
pub fn random_tangent<R: Rng + ?Sized>(base: &GrassmannPoint, norm: f64, rng: &mut R) -> TangentVector {
    let x = random_hermitian(base.dim(), rng);
    let t = base.project(&x).expect("dimensions agree");
    let current = t.norm();
    if current == 0.0 {
        return t;
    }
    t.scale(norm / current)
}

/// A point at distance `radius` from `center` in a random direction.
pub fn random_point_near<R: Rng + ?Sized>(
    center: &GrassmannPoint,
    radius: f64,
    rng: &mut R,
) -> GrassmannPoint {
    let xi = random_tangent(center, radius, rng);
    center.exp(&xi).expect("tangent vector is based at center")
}
