//! Karcher mean of points on the Grassmannian.
//!
//! The cost is the mean squared geodesic distance
//!
//! ```text
//! F(P) = (1/N) Σ dist²(P, Q_i)
//! ```
//!
//! with Riemannian gradient `grad F(P) = -(2/N) Σ log_P(Q_i)`. It is minimized
//! by a conjugate gradient method that moves along geodesics and carries the
//! previous direction and gradient over by parallel transport. Step sizes come
//! from Armijo backtracking or, on projective space (`m = 1`), from a
//! one-dimensional Newton step on `F` restricted to the search geodesic.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grassmann::{Geodesic, GrassmannPoint, StiefelBasis, TangentVector, CUT_LOCUS_TOL};
use crate::linalg::{
    arccos_sqrt, commutator, hermitian_eig, svd, ComplexMatrix, HermitianMatrix,
};

/// Maximum number of step reductions in a backtracking line search.
pub const MAX_HALVINGS: usize = 60;

/// Newton steps need every `λ_i = y_iᴴ P y_i` inside `(tol, 1 - tol)`.
pub const NEWTON_LAMBDA_TOL: f64 = 1e-8;

/// Second derivatives smaller than this make the Newton step undefined.
pub const NEWTON_CURVATURE_TOL: f64 = 1e-14;

/// Cost changes below `ROUNDOFF_TOL * max(1, |f0|)` are treated as rounding
/// noise by [`backtracking_step_with_derivative`].
pub const ROUNDOFF_TOL: f64 = 1e-12;

/// Gap between the `m`-th and `(m+1)`-th eigenvalue of the averaged projector
/// below which the Euclidean anchor is considered ill-defined.
const ANCHOR_GAP_TOL: f64 = 1e-8;

/// The conjugate-direction update coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionRule {
    HestenesStiefel,
    PolakRibiere,
    FletcherReeves,
    DaiYuan,
    /// `-g(G+, G+ - τG) / g(H, G)`.
    Star,
}

impl DirectionRule {
    pub const ALL: [DirectionRule; 5] = [
        DirectionRule::HestenesStiefel,
        DirectionRule::PolakRibiere,
        DirectionRule::FletcherReeves,
        DirectionRule::DaiYuan,
        DirectionRule::Star,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionRule::HestenesStiefel => "hs",
            DirectionRule::PolakRibiere => "pr",
            DirectionRule::FletcherReeves => "fr",
            DirectionRule::DaiYuan => "dy",
            DirectionRule::Star => "star",
        }
    }
}

impl fmt::Display for DirectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DirectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" => Ok(DirectionRule::HestenesStiefel),
            "pr" => Ok(DirectionRule::PolakRibiere),
            "fr" => Ok(DirectionRule::FletcherReeves),
            "dy" => Ok(DirectionRule::DaiYuan),
            "star" => Ok(DirectionRule::Star),
            other => Err(Error::invalid(format!("unknown direction rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepRule {
    Backtracking,
    /// One-dimensional Newton step; only available for `m = 1`.
    NewtonCp,
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "backtrack" | "backtracking" => Ok(StepRule::Backtracking),
            "newton" | "newton_cp" => Ok(StepRule::NewtonCp),
            other => Err(Error::invalid(format!("unknown step rule '{other}'"))),
        }
    }
}

/// Armijo backtracking parameters: start at `initial_step`, multiply by
/// `contraction` until `f(a) <= f(0) + sufficient_decrease * a * slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub initial_step: f64,
    pub sufficient_decrease: f64,
    pub contraction: f64,
}

impl Default for Backtracking {
    fn default() -> Self {
        Backtracking {
            initial_step: 0.5,
            sufficient_decrease: 1e-4,
            contraction: 0.5,
        }
    }
}

impl Backtracking {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::invalid("initial step must be positive"));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(Error::invalid("sufficient decrease constant must lie in (0, 1)"));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::invalid("contraction factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CGConfig {
    pub direction_rule: DirectionRule,
    pub step_rule: StepRule,
    pub backtracking: Backtracking,
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Newton step sizes above this are capped to it.
    pub newton_cap: f64,
    /// `None` selects `2m(n-m) - 1`.
    pub restart_period: Option<usize>,
}

impl Default for CGConfig {
    fn default() -> Self {
        CGConfig {
            direction_rule: DirectionRule::HestenesStiefel,
            step_rule: StepRule::Backtracking,
            backtracking: Backtracking::default(),
            grad_tol: 1e-8,
            max_iter: 500,
            newton_cap: 1.0,
            restart_period: None,
        }
    }
}

impl CGConfig {
    pub fn validate(&self) -> Result<()> {
        self.backtracking.validate()?;
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        if !(self.newton_cap > 0.0 && self.newton_cap.is_finite()) {
            return Err(Error::invalid("newton_cap must be positive"));
        }
        if self.restart_period == Some(0) {
            return Err(Error::invalid("restart period must be at least 1"));
        }
        Ok(())
    }

    /// Restart period on `Gr(m, n)`.
    pub fn restart_period_for(&self, n: usize, m: usize) -> usize {
        self.restart_period
            .unwrap_or_else(|| (2 * m * (n - m)).saturating_sub(1).max(1))
    }
}

/// How the step of one iteration was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Initial record; no step taken.
    None,
    Backtracking,
    Newton,
    /// Newton step larger than [`CGConfig::newton_cap`], capped to it.
    NewtonCapped,
    /// Newton step unavailable or not decreasing; backtracking used instead.
    NewtonFallback,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::None => "none",
            StepKind::Backtracking => "backtrack",
            StepKind::Newton => "newton",
            StepKind::NewtonCapped => "newton_capped",
            StepKind::NewtonFallback => "newton_fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub step_size: f64,
    pub step_kind: StepKind,
    pub rule: DirectionRule,
    /// The new direction is steepest descent (periodic restart, non-descent
    /// direction, or a vanishing coefficient denominator).
    pub restart: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CGTrace {
    pub records: Vec<IterationRecord>,
}

impl CGTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn final_grad_norm(&self) -> Option<f64> {
        self.records.last().map(|r| r.grad_norm)
    }
}

/// A successful (possibly non-converged) solver run.
#[derive(Debug, Clone)]
pub struct KarcherOutcome {
    pub mean: GrassmannPoint,
    pub trace: CGTrace,
    pub status: SolverStatus,
}

/// A solver run aborted by an error; the trace up to the failure is kept.
#[derive(Debug, Clone, thiserror::Error)]
#[error("Karcher mean iteration aborted: {error}")]
pub struct SolverFailure {
    pub error: Error,
    pub trace: CGTrace,
}

/// The data of a Karcher mean problem, with uniform weights `1/N`.
#[derive(Debug, Clone)]
pub struct KarcherProblem {
    data: Vec<GrassmannPoint>,
}

impl KarcherProblem {
    pub fn new(data: Vec<GrassmannPoint>) -> Result<Self> {
        let first = data
            .first()
            .ok_or_else(|| Error::invalid("Karcher problem needs at least one point"))?;
        let (n, m) = (first.dim(), first.rank());
        if let Some(i) = data.iter().position(|q| q.dim() != n || q.rank() != m) {
            return Err(Error::invalid(format!(
                "point {i} is not on Gr({m}, {n})"
            )));
        }
        Ok(KarcherProblem { data })
    }

    pub fn from_bases(bases: &[StiefelBasis]) -> Result<Self> {
        Self::new(bases.iter().map(GrassmannPoint::from_basis).collect())
    }

    pub fn data(&self) -> &[GrassmannPoint] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.data[0].rank()
    }

    fn check_point(&self, p: &GrassmannPoint) -> Result<()> {
        if p.dim() != self.dim() || p.rank() != self.rank() {
            return Err(Error::invalid(format!(
                "point is on Gr({}, {}), data on Gr({}, {})",
                p.rank(),
                p.dim(),
                self.rank(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `F(P) = (1/N) Σ dist²(P, Q_i)`.
    ///
    /// Fails with a cut-locus error (tagged with the datum index) if `P` is
    /// outside the logarithm domain of some `Q_i`.
    pub fn cost(&self, p: &GrassmannPoint) -> Result<f64> {
        self.check_point(p)?;
        let mut total = 0.0;
        for (i, q) in self.data.iter().enumerate() {
            let cos_sq = p.principal_cosines_sq(q)?;
            let smallest = *cos_sq.last().expect("rank >= 1");
            if smallest <= CUT_LOCUS_TOL {
                return Err(Error::CutLocusAt {
                    index: i,
                    reason: format!("largest principal angle is pi/2 (cos² = {smallest:e})"),
                });
            }
            for c in cos_sq {
                let angle = arccos_sqrt(c)?;
                total += 2.0 * angle * angle;
            }
        }
        Ok(total / self.len() as f64)
    }

    /// `grad F(P) = -(2/N) Σ log_P(Q_i)`.
    ///
    /// Every logarithm is taken in the frame `[X1 X2]` of `P`, which is the
    /// per-datum block computation of the gradient; the blocks are summed and
    /// conjugated back once.
    pub fn gradient(&self, p: &GrassmannPoint) -> Result<TangentVector> {
        self.check_point(p)?;
        let (n, m) = (self.dim(), self.rank());
        let mut block_sum = ComplexMatrix::zeros(n - m, m);
        let x2 = p.complement_basis();
        let x1 = p.basis().into_matrix();
        for (i, q) in self.data.iter().enumerate() {
            let xi = p.log(q).map_err(|e| e.at_index(i))?;
            // lower-left block of Θᴴ ξ Θ
            block_sum += x2.adjoint() * xi.as_matrix() * &x1;
        }
        let scale = -2.0 / self.len() as f64;
        p.tangent_from_block(&(block_sum * crate::linalg::c64(scale, 0.0)))
    }

    /// Reference gradient following the SVD-per-datum recipe literally: for each
    /// `Y_i`, `X1ᴴ Y_i Y_iᴴ X2 = U Σ Vᴴ`, `Λ = Uᴴ X1ᴴ Y_i Y_iᴴ X1 U`, and the
    /// tangent block `U [arccos √Λ  0] Vᴴ`.
    ///
    /// Agrees with [`KarcherProblem::gradient`] whenever the singular values of
    /// the cross blocks are simple; it is kept as an independent check.
    pub fn gradient_via_svd(&self, p: &GrassmannPoint) -> Result<TangentVector> {
        self.check_point(p)?;
        let (n, m) = (self.dim(), self.rank());
        let x1 = p.basis().into_matrix();
        let x2 = p.complement_basis();
        let k = m.min(n - m);
        let mut upper_sum = ComplexMatrix::zeros(m, n - m);
        for (i, q) in self.data.iter().enumerate() {
            let qm = q.projector().as_matrix();
            let cross = x1.adjoint() * qm * &x2;
            let diag_block = x1.adjoint() * qm * &x1;
            let f = svd(&cross)?;
            // complete U to a unitary so that Λ covers all m directions
            let u_full = complete_columns(&f.u, m);
            let lambda = u_full.adjoint() * diag_block * &u_full;
            let smallest = (0..m).map(|j| lambda[(j, j)].re).fold(f64::INFINITY, f64::min);
            if smallest <= CUT_LOCUS_TOL {
                return Err(Error::CutLocusAt {
                    index: i,
                    reason: "datum at pi/2 from the current point".into(),
                });
            }
            for j in 0..k {
                let angle = arccos_sqrt(lambda[(j, j)].re)?;
                let outer = f.u.column(j) * f.v.column(j).adjoint();
                upper_sum += outer * crate::linalg::c64(angle, 0.0);
            }
        }
        let scale = -2.0 / self.len() as f64;
        let lower = upper_sum.adjoint() * crate::linalg::c64(scale, 0.0);
        p.tangent_from_block(&lower)
    }

    /// `‖Σ_i e^{[ξ_i,Q_i]} ξ_i e^{-[ξ_i,Q_i]}‖` with `ξ_i = log_{Q_i}(P)`:
    /// the logarithms taken at the data points and transported to `P`.
    /// Vanishes exactly at critical points of `F`.
    pub fn critical_point_residual(&self, p: &GrassmannPoint) -> Result<f64> {
        self.check_point(p)?;
        let n = self.dim();
        let mut sum = ComplexMatrix::zeros(n, n);
        for (i, q) in self.data.iter().enumerate() {
            let xi = q.log(p).map_err(|e| e.at_index(i))?;
            let moved = Geodesic::new(q, &xi)?.velocity(1.0);
            sum += moved.as_matrix();
        }
        Ok(crate::linalg::frobenius_norm(&sum))
    }

    /// Top-`m` eigenspace of `(1/N) Σ Q_i`, or `Q_1` when the spectral gap is too small.
    pub fn euclidean_anchor(&self) -> GrassmannPoint {
        let (n, m) = (self.dim(), self.rank());
        let mut avg = ComplexMatrix::zeros(n, n);
        for q in &self.data {
            avg += q.projector().as_matrix();
        }
        avg /= crate::linalg::c64(self.len() as f64, 0.0);
        let Ok(eig) = hermitian_eig(&HermitianMatrix::from_hermitian_part(&avg)) else {
            return self.data[0].clone();
        };
        if eig.eigenvalues[m - 1] - eig.eigenvalues[m] < ANCHOR_GAP_TOL {
            return self.data[0].clone();
        }
        match StiefelBasis::new(eig.eigenvectors.columns(0, m).into_owned()) {
            Ok(x) => GrassmannPoint::from_basis(&x),
            Err(_) => self.data[0].clone(),
        }
    }
}

/// Extend `u` (columns orthonormal) to `width` orthonormal columns.
fn complete_columns(u: &ComplexMatrix, width: usize) -> ComplexMatrix {
    let (rows, have) = u.shape();
    if have >= width {
        return u.columns(0, width).into_owned();
    }
    let complement = ComplexMatrix::identity(rows, rows) - u * u.adjoint();
    let eig = hermitian_eig(&HermitianMatrix::from_hermitian_part(&complement))
        .expect("finite complement projector");
    let mut out = ComplexMatrix::zeros(rows, width);
    out.columns_mut(0, have).copy_from(u);
    out.columns_mut(have, width - have)
        .copy_from(&eig.eigenvectors.columns(0, width - have));
    out
}

/// Result of [`backtracking_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchStep {
    pub step: f64,
    pub value: f64,
    pub reductions: usize,
}

/// Armijo backtracking along a curve: the largest `a = ā ρ^k` (`k <= 60`) with
/// `f(a) <= f0 + c a slope`.
///
/// Evaluation errors at a trial step count as a rejection of that step.
pub fn backtracking_step<F>(
    mut f: F,
    f0: f64,
    slope: f64,
    params: &Backtracking,
) -> Result<LineSearchStep>
where
    F: FnMut(f64) -> Result<f64>,
{
    params.validate()?;
    if !(slope < 0.0) {
        return Err(Error::NotDescentDirection { slope });
    }
    let mut a = params.initial_step;
    for k in 0..=MAX_HALVINGS {
        if let Ok(value) = f(a) {
            if value <= f0 + params.sufficient_decrease * a * slope {
                return Ok(LineSearchStep {
                    step: a,
                    value,
                    reductions: k,
                });
            }
        }
        a *= params.contraction;
    }
    Err(Error::LineSearchFailed {
        halvings: MAX_HALVINGS,
    })
}

/// [`backtracking_step`] that stays usable when the decrease to certify is
/// below the rounding noise of `f`.
///
/// A trial step whose value is within `ROUNDOFF_TOL * max(1, |f0|)` of `f0`
/// is also accepted when `df(a) <= (2c - 1) slope`. For a quadratic this is
/// the Armijo condition itself, but it needs no cancellation of function
/// values.
pub fn backtracking_step_with_derivative<F, D>(
    mut f: F,
    mut df: D,
    f0: f64,
    slope: f64,
    params: &Backtracking,
) -> Result<LineSearchStep>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    params.validate()?;
    if !(slope < 0.0) {
        return Err(Error::NotDescentDirection { slope });
    }
    let c = params.sufficient_decrease;
    let noise = ROUNDOFF_TOL * f0.abs().max(1.0);
    let mut a = params.initial_step;
    for k in 0..=MAX_HALVINGS {
        if let Ok(value) = f(a) {
            let accept = value <= f0 + c * a * slope
                || ((value - f0).abs() <= noise
                    && matches!(df(a), Ok(d) if d <= (2.0 * c - 1.0) * slope));
            if accept {
                return Ok(LineSearchStep {
                    step: a,
                    value,
                    reductions: k,
                });
            }
        }
        a *= params.contraction;
    }
    Err(Error::LineSearchFailed {
        halvings: MAX_HALVINGS,
    })
}

/// First and second derivative of `F` along the geodesic through `P` with
/// velocity `H`, at `t = 0`, for data on projective space.
///
/// With `λ_i(t) = y_iᴴ P(t) y_i`: `λ'_i = y_iᴴ H y_i` and
/// `λ''_i = y_iᴴ [[H, P], H] y_i`, and each datum contributes
/// `2 arccos²(√λ_i)` to `N F`.
pub fn cp_line_derivatives(
    problem: &KarcherProblem,
    p: &GrassmannPoint,
    h: &TangentVector,
) -> Result<(f64, f64)> {
    if problem.rank() != 1 {
        return Err(Error::invalid("Newton step sizes require rank-one data (m = 1)"));
    }
    problem.check_point(p)?;
    let pm = p.projector().as_matrix();
    let hm = h.as_matrix();
    let second = commutator(&commutator(hm, pm), hm);
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (i, q) in problem.data().iter().enumerate() {
        let y = q.basis().into_matrix();
        let lambda = (y.adjoint() * pm * &y)[(0, 0)].re;
        if !(lambda > NEWTON_LAMBDA_TOL && lambda < 1.0 - NEWTON_LAMBDA_TOL) {
            return Err(Error::DomainError(format!(
                "datum {i}: overlap {lambda} too close to 0 or 1 for a Newton step"
            )));
        }
        let dl = (y.adjoint() * hm * &y)[(0, 0)].re;
        let ddl = (y.adjoint() * &second * &y)[(0, 0)].re;
        let s = lambda - lambda * lambda;
        let angle = arccos_sqrt(lambda)?;
        d1 += -2.0 * angle * dl / s.sqrt();
        d2 += dl * dl / s
            - angle * (2.0 * s * ddl - dl * dl * (1.0 - 2.0 * lambda)) / s.powf(1.5);
    }
    let n = problem.len() as f64;
    Ok((d1 / n, d2 / n))
}

/// `a = -F'(0) / |F''(0)|` along the geodesic through `P` with velocity `H` (`m = 1` only).
pub fn newton_step_cp(problem: &KarcherProblem, p: &GrassmannPoint, h: &TangentVector) -> Result<f64> {
    let (d1, d2) = cp_line_derivatives(problem, p, h)?;
    if d2.abs() < NEWTON_CURVATURE_TOL {
        return Err(Error::DegenerateCurvature { curvature: d2 });
    }
    Ok(-d1 / d2.abs())
}

/// A conjugate-direction coefficient, with a flag when the formula's
/// denominator vanished and the coefficient fell back to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub fell_back: bool,
}

/// The coefficient `r` in `H+ = -G+ + r τH`.
///
/// `g_new`, `g_old_moved` and `h_old_moved` are tangent at the new point;
/// `h_old`, `g_old` at the previous one (used by [`DirectionRule::Star`]).
pub fn direction_coefficient(
    rule: DirectionRule,
    g_new: &TangentVector,
    g_old_moved: &TangentVector,
    h_old_moved: &TangentVector,
    h_old: &TangentVector,
    g_old: &TangentVector,
) -> Result<Coefficient> {
    let y = g_new.sub(g_old_moved)?;
    let (num, den) = match rule {
        DirectionRule::HestenesStiefel => (g_new.metric(&y)?, h_old_moved.metric(&y)?),
        DirectionRule::PolakRibiere => (g_new.metric(&y)?, g_old.metric(g_old)?),
        DirectionRule::FletcherReeves => (g_new.metric(g_new)?, g_old.metric(g_old)?),
        DirectionRule::DaiYuan => {
            let den = h_old_moved.metric(&y)?;
            if den <= 0.0 {
                return Ok(Coefficient {
                    value: 0.0,
                    fell_back: true,
                });
            }
            (g_new.metric(g_new)?, den)
        }
        DirectionRule::Star => (-g_new.metric(&y)?, h_old.metric(g_old)?),
    };
    let value = num / den;
    if den == 0.0 || !value.is_finite() {
        return Ok(Coefficient {
            value: 0.0,
            fell_back: true,
        });
    }
    Ok(Coefficient {
        value,
        fell_back: false,
    })
}

/// Starting point for [`karcher_mean`].
#[derive(Debug, Clone)]
pub enum Init {
    /// [`KarcherProblem::euclidean_anchor`].
    Auto,
    Point(GrassmannPoint),
}

struct StepChoice {
    step: f64,
    kind: StepKind,
}

fn choose_step(
    problem: &KarcherProblem,
    config: &CGConfig,
    geo: &Geodesic,
    f0: f64,
    slope: f64,
) -> Result<StepChoice> {
    let backtrack = || -> Result<f64> {
        let eval = |a: f64| problem.cost(&geo.point(a));
        let deriv = |a: f64| problem.gradient(&geo.point(a))?.metric(&geo.velocity(a));
        backtracking_step_with_derivative(eval, deriv, f0, slope, &config.backtracking)
            .map(|s| s.step)
    };
    match config.step_rule {
        StepRule::Backtracking => Ok(StepChoice {
            step: backtrack()?,
            kind: StepKind::Backtracking,
        }),
        StepRule::NewtonCp => {
            let cap = config.newton_cap;
            let newton = newton_step_cp(problem, geo.start(), geo.initial_velocity())
                .ok()
                .filter(|a| *a > 0.0);
            if let Some(a) = newton {
                let (a, kind) = if a > cap {
                    (cap, StepKind::NewtonCapped)
                } else {
                    (a, StepKind::Newton)
                };
                if matches!(problem.cost(&geo.point(a)), Ok(v) if v < f0) {
                    return Ok(StepChoice { step: a, kind });
                }
            }
            Ok(StepChoice {
                step: backtrack()?,
                kind: StepKind::NewtonFallback,
            })
        }
    }
}

/// Conjugate gradient iteration for the Karcher mean.
///
/// Each iteration moves along the geodesic in direction `H`, transports `H`
/// and the old gradient to the new point, and sets
/// `H+ = -G+ + r τH` with `r` from the configured rule. Every
/// `restart_period` iterations, and whenever `H+` fails to be a descent
/// direction, `H+ = -G+`. Stops once `‖G‖ < grad_tol`.
pub fn karcher_mean(
    problem: &KarcherProblem,
    init: Init,
    config: &CGConfig,
) -> std::result::Result<KarcherOutcome, SolverFailure> {
    let mut trace = CGTrace::default();
    let fail = |error: Error, trace: &CGTrace| SolverFailure {
        error,
        trace: trace.clone(),
    };
    config.validate().map_err(|e| fail(e, &trace))?;
    if config.step_rule == StepRule::NewtonCp && problem.rank() != 1 {
        return Err(fail(
            Error::invalid("Newton step sizes require rank-one data (m = 1)"),
            &trace,
        ));
    }
    let mut p = match init {
        Init::Auto => problem.euclidean_anchor(),
        Init::Point(p) => p,
    };
    problem.check_point(&p).map_err(|e| fail(e, &trace))?;
    let restart_period = config.restart_period_for(problem.dim(), problem.rank());

    let mut cost = problem.cost(&p).map_err(|e| fail(e, &trace))?;
    let mut grad = problem.gradient(&p).map_err(|e| fail(e, &trace))?;
    let mut dir = grad.scale(-1.0);
    trace.records.push(IterationRecord {
        iteration: 0,
        cost,
        grad_norm: grad.norm(),
        step_size: 0.0,
        step_kind: StepKind::None,
        rule: config.direction_rule,
        restart: true,
    });

    for iteration in 1..=config.max_iter {
        if grad.norm() < config.grad_tol {
            return Ok(KarcherOutcome {
                mean: p,
                trace,
                status: SolverStatus::Converged,
            });
        }
        let slope = grad.metric(&dir).map_err(|e| fail(e, &trace))?;
        let geo = Geodesic::new(&p, &dir).map_err(|e| fail(e, &trace))?;
        let choice = choose_step(problem, config, &geo, cost, slope).map_err(|e| fail(e, &trace))?;

        let u = geo.unitary(choice.step);
        let next = p.rotate(&u);
        let dir_moved = geo.transport_with(&dir, &u, &next);
        let grad_moved = geo.transport_with(&grad, &u, &next);
        let next_cost = problem.cost(&next).map_err(|e| fail(e, &trace))?;
        let next_grad = problem.gradient(&next).map_err(|e| fail(e, &trace))?;

        let coeff = direction_coefficient(
            config.direction_rule,
            &next_grad,
            &grad_moved,
            &dir_moved,
            &dir,
            &grad,
        )
        .map_err(|e| fail(e, &trace))?;
        let steepest = next_grad.scale(-1.0);
        let mut restart = coeff.fell_back || iteration % restart_period == 0;
        let mut next_dir = if restart {
            steepest.clone()
        } else {
            steepest
                .add(&dir_moved.scale(coeff.value))
                .map_err(|e| fail(e, &trace))?
        };
        if !restart {
            let descent = next_grad.metric(&next_dir).map_err(|e| fail(e, &trace))?;
            if !(descent < 0.0) {
                next_dir = next_grad.scale(-1.0);
                restart = true;
            }
        }

        trace.records.push(IterationRecord {
            iteration,
            cost: next_cost,
            grad_norm: next_grad.norm(),
            step_size: choice.step,
            step_kind: choice.kind,
            rule: config.direction_rule,
            restart,
        });
        p = next;
        cost = next_cost;
        grad = next_grad;
        dir = next_dir;
    }

    let status = if grad.norm() < config.grad_tol {
        SolverStatus::Converged
    } else {
        SolverStatus::MaxIterations
    };
    Ok(KarcherOutcome {
        mean: p,
        trace,
        status,
    })
}
