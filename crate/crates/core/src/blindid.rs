//! Blind identification with subspace averaging.
//!
//! Observations follow the noisy instantaneous model
//! `w_i(t) = (A + ε Z_i) s_i(t)`. Each of the `N` noisy systems is identified
//! by the strong uncorrelating transform (SUT), which recovers the columns of
//! `A` up to scaling and permutation. The estimated columns are therefore
//! points of `CP^{n-1}`; after aligning their order they are averaged column
//! by column, either by the Karcher mean or by phase-aligned summation
//! ("Euclidean mean"), and scored with the normalized Amari error.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grassmann::{GrassmannPoint, StiefelBasis};
use crate::karcher::{karcher_mean, CGConfig, Init, KarcherOutcome, KarcherProblem};
use crate::linalg::{
    c64, hermitian_eig, spectral_fn, svd, ComplexMatrix, HermitianMatrix, C64,
};
use crate::random::random_complex;

/// Circularity coefficients closer than this make the SUT solution ambiguous.
pub const CIRCULARITY_GAP_TOL: f64 = 1e-3;
/// Largest accepted condition number of the sample covariance.
pub const COVARIANCE_COND_LIMIT: f64 = 1e10;
/// Largest accepted condition number of an estimated mixing matrix.
pub const MIXING_COND_LIMIT: f64 = 1e12;

/// Parameters of a blind-identification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingExperiment {
    /// Number of sources and sensors.
    pub n: usize,
    /// Number of noisy systems estimated and averaged per trial.
    pub n_est: usize,
    pub noise_level: f64,
    pub trials: usize,
    pub samples_per_trial: usize,
    pub rng_seed: u64,
    pub solver: CGConfig,
}

impl Default for MixingExperiment {
    fn default() -> Self {
        MixingExperiment {
            n: 5,
            n_est: 10,
            noise_level: 0.5,
            trials: 100,
            samples_per_trial: 10_000,
            rng_seed: 0,
            solver: CGConfig::default(),
        }
    }
}

impl MixingExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("system size must be at least 2"));
        }
        if self.n_est < 1 {
            return Err(Error::invalid("need at least one estimation"));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::invalid("noise level must be finite and nonnegative"));
        }
        if self.samples_per_trial < 10 * self.n {
            return Err(Error::invalid(format!(
                "need at least {} samples per trial",
                10 * self.n
            )));
        }
        self.solver.validate()
    }
}

/// Mixing angle of source `k` (1-based): `θ_k = k/(n+1) · π/4`.
pub fn source_angle(k: usize, n: usize) -> f64 {
    k as f64 / (n + 1) as f64 * FRAC_PI_4
}

/// `n x T` unit-variance, mutually uncorrelated, non-circular sources.
///
/// Row `k` is `cos θ_k x + i sin θ_k y` with independent standard normal `x`,
/// `y`, so its circularity coefficient `E[s²] = cos 2θ_k` is distinct per row.
pub fn generate_sources<R: Rng + ?Sized>(n: usize, samples: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if samples < 10 * n {
        return Err(Error::invalid(format!(
            "{samples} samples are too few for {n} sources (need {})",
            10 * n
        )));
    }
    let weights: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let theta = source_angle(k, n);
            (theta.cos(), theta.sin())
        })
        .collect();
    let mut s = ComplexMatrix::zeros(n, samples);
    for t in 0..samples {
        for (k, &(c, si)) in weights.iter().enumerate() {
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            s[(k, t)] = c64(c * x, si * y);
        }
    }
    Ok(s)
}

/// Noise matrix with real and imaginary parts uniform on `[-0.5, 0.5]`.
pub fn uniform_perturbation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let u = Uniform::new_inclusive(-0.5, 0.5).expect("valid bounds");
    ComplexMatrix::from_fn(n, n, |_, _| c64(u.sample(rng), u.sample(rng)))
}

/// `w = (A + ε Z) s`.
pub fn mix(
    a: &ComplexMatrix,
    z: &ComplexMatrix,
    noise_level: f64,
    sources: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if !a.is_square() || a.shape() != z.shape() || a.ncols() != sources.nrows() {
        return Err(Error::invalid(format!(
            "shape mismatch: A {:?}, Z {:?}, sources {:?}",
            a.shape(),
            z.shape(),
            sources.shape()
        )));
    }
    let system = a + z * c64(noise_level, 0.0);
    Ok(system * sources)
}

/// Output of the SUT estimator.
#[derive(Debug, Clone)]
pub struct SutEstimate {
    /// Estimated mixing matrix with unit-norm columns, sorted by decreasing circularity.
    pub mixing: ComplexMatrix,
    /// Circularity coefficients of the recovered sources, descending.
    pub circularity: Vec<f64>,
    /// Two circularity coefficients are closer than [`CIRCULARITY_GAP_TOL`].
    pub ambiguous: bool,
}

/// Sample covariance `⟨w wᴴ⟩` and pseudo-covariance `⟨w wᵀ⟩`.
pub fn sample_moments(observations: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let t = observations.ncols().max(1) as f64;
    let inv = c64(1.0 / t, 0.0);
    let cov = observations * observations.adjoint() * inv;
    let pseudo = observations * observations.transpose() * inv;
    (cov, pseudo)
}

/// SUT from sample moments of the observations.
pub fn sut_estimate(observations: &ComplexMatrix) -> Result<SutEstimate> {
    let (cov, pseudo) = sample_moments(observations);
    sut_from_moments(&cov, &pseudo)
}

/// SUT from (population or sample) covariance `C` and pseudo-covariance `R`.
///
/// Whitens with `W = C^{-1/2}`, takes the Takagi factorization
/// `W R Wᵀ = U Σ Uᵀ`, and returns `Â = C^{1/2} U` with unit-norm columns.
pub fn sut_from_moments(cov: &ComplexMatrix, pseudo: &ComplexMatrix) -> Result<SutEstimate> {
    let n = cov.nrows();
    if !cov.is_square() || pseudo.shape() != cov.shape() {
        return Err(Error::invalid("covariance and pseudo-covariance must be square and equal in size"));
    }
    let c = HermitianMatrix::new(cov.clone())
        .map_err(|_| Error::invalid("covariance is not Hermitian"))?;
    let spectrum = hermitian_eig(&c)?.eigenvalues;
    let (largest, smallest) = (spectrum[0], spectrum[n - 1]);
    if !(smallest > 0.0) || largest / smallest > COVARIANCE_COND_LIMIT {
        return Err(Error::IllConditioned(format!(
            "sample covariance has condition number {:e}",
            largest / smallest.max(f64::MIN_POSITIVE)
        )));
    }
    let whiten = spectral_fn(&c, |x| Ok(1.0 / x.sqrt()))?;
    let unwhiten = spectral_fn(&c, |x| Ok(x.sqrt()))?;
    let w = whiten.as_matrix();
    let whitened_pseudo = w * pseudo * w.transpose();
    let symmetric = (&whitened_pseudo + whitened_pseudo.transpose()) * c64(0.5, 0.0);
    let (u, sigma) = takagi(&symmetric)?;

    let mut mixing = unwhiten.as_matrix() * u;
    normalize_columns(&mut mixing)?;
    let ambiguous = sigma.windows(2).any(|p| p[0] - p[1] < CIRCULARITY_GAP_TOL);
    Ok(SutEstimate {
        mixing,
        circularity: sigma,
        ambiguous,
    })
}

/// Takagi factorization `S = U diag(σ) Uᵀ` of a complex symmetric matrix via
/// its SVD `S = U_s Σ V_sᴴ`: `conj(V_s) = U_s D` for a diagonal unitary `D`
/// when the singular values are simple, and `U = U_s D^{1/2}`.
pub fn takagi(s: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let f = svd(s)?;
    let mut u = f.u.clone();
    for j in 0..u.ncols() {
        let d: C64 = (0..u.nrows())
            .map(|r| f.u[(r, j)].conj() * f.v[(r, j)].conj())
            .sum();
        let half_phase = if d.norm() > 0.0 {
            C64::from_polar(1.0, 0.5 * d.arg())
        } else {
            c64(1.0, 0.0)
        };
        u.column_mut(j).iter_mut().for_each(|z| *z *= half_phase);
    }
    Ok((u, f.singular_values))
}

fn normalize_columns(m: &mut ComplexMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        let norm = m.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::IllConditioned(format!("column {j} vanished")));
        }
        m.column_mut(j).iter_mut().for_each(|z| *z /= norm);
    }
    Ok(())
}

/// Normalized Amari error `J(Â, A)` of `B = Â⁻¹ A`:
///
/// ```text
/// J = 1/n ( Σ_i Σ_j |b_ij| / max_j |b_ij|  +  Σ_j Σ_i |b_ij| / max_i |b_ij| ) - 2
/// ```
///
/// Zero exactly when `B` is a scaled permutation.
pub fn amari_error(a_hat: &ComplexMatrix, a: &ComplexMatrix) -> Result<f64> {
    if !a_hat.is_square() || a_hat.shape() != a.shape() {
        return Err(Error::invalid("Amari error needs square matrices of equal size"));
    }
    let n = a.nrows();
    let sv = svd(a_hat)?.singular_values;
    if !(sv[n - 1] > 0.0) || sv[0] / sv[n - 1] > MIXING_COND_LIMIT {
        return Err(Error::IllConditioned("estimated mixing matrix is singular".into()));
    }
    let inv = a_hat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("estimated mixing matrix is singular".into()))?;
    let b = inv * a;
    Ok(amari_index(&b))
}

/// The Amari index of `B` itself.
pub fn amari_index(b: &ComplexMatrix) -> f64 {
    let n = b.nrows();
    let abs = b.map(|z| z.norm());
    let mut total = 0.0;
    for i in 0..n {
        let row = abs.row(i);
        total += row.sum() / row.max();
    }
    for j in 0..n {
        let col = abs.column(j);
        total += col.sum() / col.max();
    }
    total / n as f64 - 2.0
}

/// Column estimates of `A` from several noisy systems; every column is unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    estimates: Vec<ComplexMatrix>,
}

impl EstimateSet {
    pub fn new(mut estimates: Vec<ComplexMatrix>) -> Result<Self> {
        let first = estimates
            .first()
            .ok_or_else(|| Error::invalid("estimate set is empty"))?;
        let n = first.nrows();
        if n < 2 {
            return Err(Error::invalid("need n >= 2"));
        }
        for (i, e) in estimates.iter_mut().enumerate() {
            if e.shape() != (n, n) {
                return Err(Error::invalid(format!("estimate {i} is not {n}x{n}")));
            }
            normalize_columns(e)?;
        }
        Ok(EstimateSet { estimates })
    }

    pub fn estimates(&self) -> &[ComplexMatrix] {
        &self.estimates
    }

    pub fn dim(&self) -> usize {
        self.estimates[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// Column `j` of every estimate as a point of `CP^{n-1}`.
    pub fn column_points(&self, j: usize) -> Vec<GrassmannPoint> {
        self.estimates
            .iter()
            .map(|e| {
                let x = StiefelBasis::with_tolerance(e.columns(j, 1).into_owned(), 1e-8)
                    .expect("columns are normalized on construction");
                GrassmannPoint::from_basis(&x)
            })
            .collect()
    }
}

/// Greedy matching of estimate columns to reference columns by `|⟨e_j, r_k⟩|²`.
///
/// Returns `perm` with `perm[k]` = index of the estimate column assigned to
/// reference column `k`. Ties go to the lowest (row, column) index.
pub fn greedy_matching(estimate: &ComplexMatrix, reference: &ComplexMatrix) -> Vec<usize> {
    let n = reference.ncols();
    let overlap = ComplexMatrix::from_fn(n, n, |j, k| {
        let inner: C64 = estimate.column(j).dotc(&reference.column(k));
        c64(inner.norm_sqr(), 0.0)
    });
    let mut perm = vec![usize::MAX; n];
    let mut row_used = vec![false; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in (0..n).filter(|&j| !row_used[j]) {
            for k in (0..n).filter(|&k| perm[k] == usize::MAX) {
                let v = overlap[(j, k)].re;
                if best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((j, k, v));
                }
            }
        }
        let (j, k, _) = best.expect("an unassigned pair remains");
        row_used[j] = true;
        perm[k] = j;
    }
    perm
}

/// Reorder the columns of every estimate to match `reference`.
pub fn align_columns(estimates: &EstimateSet, reference: &ComplexMatrix) -> Result<EstimateSet> {
    let n = estimates.dim();
    if reference.shape() != (n, n) {
        return Err(Error::invalid("reference has the wrong shape"));
    }
    let aligned = estimates
        .estimates
        .iter()
        .map(|e| {
            let perm = greedy_matching(e, reference);
            ComplexMatrix::from_fn(n, n, |r, k| e[(r, perm[k])])
        })
        .collect();
    EstimateSet::new(aligned)
}

/// Column-wise Karcher means of aligned estimates.
pub fn average_karcher(aligned: &EstimateSet, config: &CGConfig) -> Result<Vec<KarcherOutcome>> {
    (0..aligned.dim())
        .map(|j| {
            let problem = KarcherProblem::new(aligned.column_points(j))?;
            karcher_mean(&problem, Init::Auto, config).map_err(|f| f.error.at_index(j))
        })
        .collect()
}

/// Matrix whose columns are unit vectors spanning the given lines.
pub fn matrix_from_lines(lines: &[GrassmannPoint]) -> Result<ComplexMatrix> {
    let n = lines
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| Error::invalid("no columns"))?;
    let mut m = ComplexMatrix::zeros(n, lines.len());
    for (j, p) in lines.iter().enumerate() {
        if p.rank() != 1 || p.dim() != n {
            return Err(Error::invalid(format!("column {j} is not a line in C^{n}")));
        }
        m.column_mut(j).copy_from(&p.basis().into_matrix().column(0));
    }
    Ok(m)
}

/// Phase-aligned sum of aligned estimates, columns normalized.
///
/// Each estimate column `v` is multiplied by the unit phase making
/// `⟨r, v⟩` real and nonnegative, with `r` the matching column of the first
/// estimate.
pub fn average_euclid(aligned: &EstimateSet) -> Result<ComplexMatrix> {
    let n = aligned.dim();
    let reference = &aligned.estimates[0];
    let mut sum = ComplexMatrix::zeros(n, n);
    for e in &aligned.estimates {
        for j in 0..n {
            let inner: C64 = reference.column(j).dotc(&e.column(j));
            let phase = if inner.norm() > 0.0 {
                inner.conj() / inner.norm()
            } else {
                c64(1.0, 0.0)
            };
            let mut col = sum.column_mut(j);
            col += e.column(j) * phase;
        }
    }
    for j in 0..n {
        let norm = sum.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(Error::DegenerateAverage(format!("column {j} sums to zero")));
        }
        sum.column_mut(j).iter_mut().for_each(|z| *z /= norm);
    }
    Ok(sum)
}

/// Which experiment parameter is swept.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    NoiseLevels(Vec<f64>),
    Estimations(Vec<usize>),
}

impl Sweep {
    pub fn param_name(&self) -> &'static str {
        match self {
            Sweep::NoiseLevels(_) => "eps",
            Sweep::Estimations(_) => "nest",
        }
    }

    fn settings(&self, base: &MixingExperiment) -> Vec<(f64, f64, usize)> {
        match self {
            Sweep::NoiseLevels(levels) => levels.iter().map(|&e| (e, e, base.n_est)).collect(),
            Sweep::Estimations(counts) => counts
                .iter()
                .map(|&k| (k as f64, base.noise_level, k))
                .collect(),
        }
    }
}

/// One (trial, sweep value) outcome. Scores are `None` for skipped trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub trial: usize,
    pub sweep_param: &'static str,
    pub sweep_value: f64,
    pub amari_karcher: Option<f64>,
    pub amari_euclid: Option<f64>,
    /// `"ok"` or `"skipped: <reason>"`.
    pub status: String,
}

impl ExperimentRow {
    pub fn is_ok(&self) -> bool {
        self.amari_karcher.is_some() && self.amari_euclid.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    /// Sweep values in first-appearance order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.sweep_value) {
                out.push(r.sweep_value);
            }
        }
        out
    }

    /// Median Amari errors `(karcher, euclid)` over non-skipped trials at one sweep value.
    pub fn medians(&self, sweep_value: f64) -> Option<(f64, f64)> {
        let ok: Vec<&ExperimentRow> = self
            .rows
            .iter()
            .filter(|r| r.sweep_value == sweep_value && r.is_ok())
            .collect();
        if ok.is_empty() {
            return None;
        }
        let k = median(ok.iter().map(|r| r.amari_karcher.unwrap()).collect());
        let e = median(ok.iter().map(|r| r.amari_euclid.unwrap()).collect());
        Some((k, e))
    }

    pub fn skipped(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

pub fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-trial random stream. It depends on the seed and the trial index only,
/// so every sweep value of a trial sees the same `A`, perturbations and sources.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Scores of one trial: `(amari_karcher, amari_euclid)`.
pub fn run_trial(
    cfg: &MixingExperiment,
    noise_level: f64,
    n_est: usize,
    trial: usize,
) -> Result<(f64, f64)> {
    let mut rng = trial_rng(cfg.rng_seed, trial);
    let n = cfg.n;
    let a = random_complex(n, n, &mut rng);
    let mut estimates = Vec::with_capacity(n_est);
    for _ in 0..n_est {
        let z = uniform_perturbation(n, &mut rng);
        let s = generate_sources(n, cfg.samples_per_trial, &mut rng)?;
        let w = mix(&a, &z, noise_level, &s)?;
        estimates.push(sut_estimate(&w)?.mixing);
    }
    let set = EstimateSet::new(estimates)?;
    let reference = set.estimates()[0].clone();
    let aligned = align_columns(&set, &reference)?;

    let means = average_karcher(&aligned, &cfg.solver)?;
    let lines: Vec<GrassmannPoint> = means.into_iter().map(|o| o.mean).collect();
    let karcher = matrix_from_lines(&lines)?;
    let euclid = average_euclid(&aligned)?;
    Ok((amari_error(&karcher, &a)?, amari_error(&euclid, &a)?))
}

/// Run every trial for every sweep value. Trials run in parallel; the table is
/// ordered by sweep value, then trial, and is identical for identical inputs.
pub fn run_experiment(cfg: &MixingExperiment, sweep: &Sweep) -> Result<ExperimentTable> {
    cfg.validate()?;
    let settings = sweep.settings(cfg);
    for &(_, eps, k) in &settings {
        MixingExperiment {
            noise_level: eps,
            n_est: k,
            ..cfg.clone()
        }
        .validate()?;
    }
    let jobs: Vec<(f64, f64, usize, usize)> = settings
        .iter()
        .flat_map(|&(value, eps, k)| (0..cfg.trials).map(move |t| (value, eps, k, t)))
        .collect();
    let param = sweep.param_name();
    let rows = jobs
        .par_iter()
        .map(|&(value, eps, k, trial)| match run_trial(cfg, eps, k, trial) {
            Ok((ak, ae)) => ExperimentRow {
                trial,
                sweep_param: param,
                sweep_value: value,
                amari_karcher: Some(ak),
                amari_euclid: Some(ae),
                status: "ok".into(),
            },
            Err(e) => ExperimentRow {
                trial,
                sweep_param: param,
                sweep_value: value,
                amari_karcher: None,
                amari_euclid: None,
                status: format!("skipped: {e}"),
            },
        })
        .collect();
    Ok(ExperimentTable { rows })
}

/// `‖·‖_F` distance between two column sets modulo column phases: `Σ_j (1 - |⟨a_j, b_j⟩|²)`.
pub fn column_line_mismatch(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| 1.0 - a.column(j).dotc(&b.column(j)).norm_sqr())
        .sum::<f64>()
        .abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use crate::random::random_unitary;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn permutation(n: usize, perm: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |r, c| if perm[c] == r { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn source_statistics() {
        let n = 4;
        let t = 40_000;
        let s = generate_sources(n, t, &mut rng(1)).unwrap();
        let (cov, pseudo) = sample_moments(&s);
        let tol = 5.0 / (t as f64).sqrt();
        for j in 0..n {
            for k in 0..n {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((cov[(j, k)] - c64(expected, 0.0)).norm() < tol);
            }
            let circ = (2.0 * source_angle(j + 1, n)).cos();
            assert!((pseudo[(j, j)] - c64(circ, 0.0)).norm() < tol);
        }
    }

    #[test]
    fn source_angles_are_distinct() {
        for n in 2..=50 {
            let gaps: Vec<f64> = (1..n).map(|k| source_angle(k + 1, n) - source_angle(k, n)).collect();
            assert!(gaps.iter().all(|&g| g > 0.0));
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(generate_sources(5, 49, &mut rng(2)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn mixing_examples() {
        let mut r = rng(3);
        let a = random_complex(3, 3, &mut r);
        let z = uniform_perturbation(3, &mut r);
        let s = generate_sources(3, 30, &mut r).unwrap();
        let w0 = mix(&a, &z, 0.0, &s).unwrap();
        assert!(frobenius_norm(&(w0 - &a * &s)) < 1e-12);
        let zero = mix(&a, &z, 0.7, &ComplexMatrix::zeros(3, 30)).unwrap();
        assert_eq!(frobenius_norm(&zero), 0.0);
        let w = mix(&a, &z, 0.7, &s).unwrap();
        assert!(frobenius_norm(&(w - (&a + &z * c64(0.7, 0.0)) * &s)) < 1e-12);
        assert!(mix(&a, &z, 0.1, &ComplexMatrix::zeros(2, 30)).is_err());
    }

    #[test]
    fn amari_hand_example() {
        let b = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        );
        assert!((amari_index(&b) - 1.0).abs() < 1e-15);
        assert!(amari_error(&ComplexMatrix::identity(2, 2), &b).is_ok());
    }

    #[test]
    fn amari_vanishes_on_scaled_permutations() {
        let mut r = rng(4);
        let a = random_complex(4, 4, &mut r);
        assert!(amari_error(&a, &a).unwrap().abs() < 1e-12);
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(2.0, 1.0),
            c64(-0.3, 0.0),
            c64(0.0, 5.0),
            c64(1.0, -1.0),
        ]));
        let p = permutation(4, &[2, 0, 3, 1]);
        let scrambled = &a * d * p;
        assert!(amari_error(&scrambled, &a).unwrap().abs() < 1e-10);
    }

    #[test]
    fn amari_rejects_singular() {
        let a = ComplexMatrix::identity(3, 3);
        assert!(matches!(
            amari_error(&ComplexMatrix::zeros(3, 3), &a),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn sut_recovers_identity_from_population_moments() {
        let n = 4;
        let cov = ComplexMatrix::identity(n, n);
        let pseudo = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            (1..=n).map(|k| c64((2.0 * source_angle(k, n)).cos(), 0.0)),
        ));
        let est = sut_from_moments(&cov, &pseudo).unwrap();
        assert!(amari_error(&est.mixing, &cov).unwrap() < 1e-6);
        assert!(!est.ambiguous);
    }

    #[test]
    fn sut_population_moments_general_mixing() {
        let n = 5;
        let mut r = rng(5);
        let a = random_complex(n, n, &mut r);
        let lambda = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            (1..=n).map(|k| c64((2.0 * source_angle(k, n)).cos(), 0.0)),
        ));
        let cov = &a * a.adjoint();
        let pseudo = &a * lambda * a.transpose();
        let est = sut_from_moments(&cov, &pseudo).unwrap();
        assert!(amari_error(&est.mixing, &a).unwrap() < 1e-8);
    }

    #[test]
    fn sut_flags_ambiguity_and_singularity() {
        let cov = ComplexMatrix::identity(2, 2);
        let pseudo = ComplexMatrix::identity(2, 2) * c64(0.5, 0.0);
        assert!(sut_from_moments(&cov, &pseudo).unwrap().ambiguous);
        let singular = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(1.0, 0.0),
            c64(0.0, 0.0),
        ]));
        assert!(matches!(
            sut_from_moments(&singular, &pseudo),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn sut_noiseless_identification() {
        let n = 5;
        let mut r = rng(6);
        let a = random_complex(n, n, &mut r);
        let s = generate_sources(n, 50_000, &mut r).unwrap();
        let est = sut_estimate(&(&a * &s)).unwrap();
        assert!(amari_error(&est.mixing, &a).unwrap() < 0.05);
    }

    #[test]
    fn takagi_reconstructs() {
        let mut r = rng(7);
        let m = random_complex(4, 4, &mut r);
        let sym = (&m + m.transpose()) * c64(0.5, 0.0);
        let (u, sigma) = takagi(&sym).unwrap();
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            sigma.iter().map(|&x| c64(x, 0.0)),
        ));
        assert!(frobenius_norm(&(&u * d * u.transpose() - &sym)) < 1e-10);
    }

    #[test]
    fn alignment_identity_and_swap() {
        let mut r = rng(8);
        let reference = random_unitary(4, &mut r);
        assert_eq!(greedy_matching(&reference, &reference), vec![0, 1, 2, 3]);
        let swapped = &reference * permutation(4, &[1, 0, 2, 3]);
        assert_eq!(greedy_matching(&swapped, &reference), vec![1, 0, 2, 3]);
        let set = EstimateSet::new(vec![swapped]).unwrap();
        let aligned = align_columns(&set, &reference).unwrap();
        assert!(column_line_mismatch(&aligned.estimates()[0], &reference) < 1e-12);
    }

    #[test]
    fn alignment_recovers_identity_for_small_noise() {
        let mut r = rng(9);
        let mut hits = 0;
        for _ in 0..1000 {
            let reference = random_complex(5, 5, &mut r);
            let mut reference = reference;
            normalize_columns(&mut reference).unwrap();
            let noisy = &reference + random_complex(5, 5, &mut r) * c64(0.01, 0.0);
            if greedy_matching(&noisy, &reference) == vec![0, 1, 2, 3, 4] {
                hits += 1;
            }
        }
        assert!(hits >= 990, "{hits}");
    }

    #[test]
    fn euclid_average_of_identical_and_phase_flipped() {
        let mut r = rng(10);
        let mut col = random_complex(5, 5, &mut r);
        normalize_columns(&mut col).unwrap();
        let flipped = &col * c64(-1.0, 0.0);
        let set = EstimateSet::new(vec![col.clone(), flipped, col.clone() * c64(0.0, 1.0)]).unwrap();
        let avg = average_euclid(&set).unwrap();
        assert!(frobenius_norm(&(avg - &col)) < 1e-12);
    }

    #[test]
    fn euclid_average_is_unit_norm() {
        let mut r = rng(11);
        let mut base = random_complex(5, 5, &mut r);
        normalize_columns(&mut base).unwrap();
        let estimates: Vec<_> = (0..6)
            .map(|_| &base + random_complex(5, 5, &mut r) * c64(0.1, 0.0))
            .collect();
        let avg = average_euclid(&EstimateSet::new(estimates).unwrap()).unwrap();
        for j in 0..5 {
            assert!((avg.column(j).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn karcher_average_of_identical_estimates() {
        let mut r = rng(12);
        let mut base = random_complex(4, 4, &mut r);
        normalize_columns(&mut base).unwrap();
        let set = EstimateSet::new(vec![base.clone(); 3]).unwrap();
        let means = average_karcher(&set, &CGConfig::default()).unwrap();
        let m = matrix_from_lines(&means.iter().map(|o| o.mean.clone()).collect::<Vec<_>>()).unwrap();
        assert!(column_line_mismatch(&m, &base) < 1e-10);
    }

    #[test]
    fn single_estimate_methods_coincide() {
        let cfg = MixingExperiment {
            n_est: 1,
            trials: 3,
            samples_per_trial: 2_000,
            ..MixingExperiment::default()
        };
        let table = run_experiment(&cfg, &Sweep::NoiseLevels(vec![0.5])).unwrap();
        for row in &table.rows {
            let (k, e) = (row.amari_karcher.unwrap(), row.amari_euclid.unwrap());
            assert!((k - e).abs() < 1e-10, "{k} vs {e}");
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = MixingExperiment {
            n_est: 3,
            trials: 4,
            samples_per_trial: 1_000,
            rng_seed: 42,
            ..MixingExperiment::default()
        };
        let sweep = Sweep::Estimations(vec![2, 3]);
        let a = run_experiment(&cfg, &sweep).unwrap();
        let b = run_experiment(&cfg, &sweep).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 8);
        assert_eq!(a.sweep_values(), vec![2.0, 3.0]);
    }

    #[test]
    fn experiment_validation() {
        let cfg = MixingExperiment {
            samples_per_trial: 10,
            ..MixingExperiment::default()
        };
        assert!(run_experiment(&cfg, &Sweep::NoiseLevels(vec![0.1])).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
