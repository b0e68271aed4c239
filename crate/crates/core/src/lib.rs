//! Karcher means of complex subspaces.
//!
//! Subspaces of `C^n` are handled as Hermitian projectors on the Grassmannian
//! `Gr(m, n)` ([`grassmann`]). The Karcher mean of a set of subspaces is
//! computed by an intrinsic conjugate gradient method ([`karcher`]), and
//! [`blindid`] uses it to average repeated blind-identification estimates.
//!
//! ```
//! use grassmann_karcher::karcher::{karcher_mean, CGConfig, Init, KarcherProblem};
//! use grassmann_karcher::random::{random_point, random_point_near};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let center = random_point(4, 2, &mut rng);
//! let data = (0..5).map(|_| random_point_near(&center, 0.2, &mut rng)).collect();
//! let problem = KarcherProblem::new(data).unwrap();
//! let out = karcher_mean(&problem, Init::Auto, &CGConfig::default()).unwrap();
//! assert!(problem.gradient(&out.mean).unwrap().norm() < 1e-8);
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blindid;
pub mod cli;
pub mod error;
pub mod grassmann;
pub mod karcher;
pub mod linalg;
pub mod random;

pub use error::{Error, Result};
pub use grassmann::{Geodesic, GrassmannPoint, StiefelBasis, TangentVector};
pub use linalg::{ComplexMatrix, HermitianMatrix, C64};
