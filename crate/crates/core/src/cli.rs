//! Command-line front end.
//!
//! Three subcommands:
//!
//! * `karcher-mean FILE` computes the Karcher mean of the subspaces in a
//!   subspace file and writes it as a one-basis subspace file, plus a trace CSV
//!   with columns `iteration,cost,gradnorm,stepsize`.
//! * `bi-experiment` runs the blind-identification sweep and writes one CSV
//!   row per (sweep value, trial).
//! * `distance FILE` prints the geodesic distance and principal angles between
//!   the two subspaces in a file.
//!
//! Exit codes: 0 success/converged, 1 usage or parse error, 2 iteration limit
//! reached, 3 cut locus, 4 any other numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::blindid::{run_experiment, ExperimentTable, MixingExperiment, Sweep};
use crate::error::Error;
use crate::grassmann::{GrassmannPoint, StiefelBasis};
use crate::karcher::{
    karcher_mean, CGConfig, CGTrace, DirectionRule, Init, KarcherProblem, SolverStatus, StepRule,
};
use crate::linalg::{c64, ComplexMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_CUT_LOCUS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Orthonormality tolerance applied to bases read from a file.
pub const FILE_ORTHONORMALITY_TOL: f64 = 1e-8;

pub const SUBSPACE_FILE_VERSION: &str = "1";

/// Header of the blind-identification results CSV.
pub const RESULTS_HEADER: [&str; 6] = [
    "trial",
    "sweep_param",
    "sweep_value",
    "amari_karcher",
    "amari_euclid",
    "status",
];

/// Header of the solver trace CSV.
pub const TRACE_HEADER: [&str; 4] = ["iteration", "cost", "gradnorm", "stepsize"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub re: f64,
    pub im: f64,
}

/// On-disk list of subspaces. Each basis is `n` rows of `m` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceFile {
    pub version: String,
    pub n: usize,
    pub m: usize,
    pub count: usize,
    pub bases: Vec<Vec<Vec<Entry>>>,
}

/// A failed CLI action and the exit code it maps to.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError::usage(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) => EXIT_USAGE,
            e if e.is_cut_locus() => EXIT_CUT_LOCUS,
            _ => EXIT_NUMERICAL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl SubspaceFile {
    pub fn from_bases(bases: &[StiefelBasis]) -> Result<Self, CliError> {
        let first = bases
            .first()
            .ok_or_else(|| CliError::usage("no bases to write"))?;
        let (n, m) = (first.dim(), first.rank());
        if bases.iter().any(|b| b.dim() != n || b.rank() != m) {
            return Err(CliError::usage("bases have different shapes"));
        }
        let bases: Vec<Vec<Vec<Entry>>> = bases
            .iter()
            .map(|b| {
                let x = b.as_matrix();
                (0..n)
                    .map(|i| {
                        (0..m)
                            .map(|j| Entry {
                                re: x[(i, j)].re,
                                im: x[(i, j)].im,
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(SubspaceFile {
            version: SUBSPACE_FILE_VERSION.into(),
            n,
            m,
            count: bases.len(),
            bases,
        })
    }

    /// Parse JSON. Errors name the offending field and position.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::usage(format!(
                "parse error at field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Check the header fields and shapes, then build the bases.
    ///
    /// Bases that are not orthonormal to [`FILE_ORTHONORMALITY_TOL`] are
    /// re-orthonormalized when `repair` is set and rejected otherwise.
    pub fn to_bases(&self, repair: bool) -> Result<Vec<StiefelBasis>, CliError> {
        if self.version != SUBSPACE_FILE_VERSION {
            return Err(CliError::usage(format!(
                "field `version`: expected \"{SUBSPACE_FILE_VERSION}\", got \"{}\"",
                self.version
            )));
        }
        if self.m == 0 || self.m >= self.n {
            return Err(CliError::usage(format!(
                "field `m`: need 1 <= m < n, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        if self.count != self.bases.len() {
            return Err(CliError::usage(format!(
                "field `count`: says {}, but `bases` holds {}",
                self.count,
                self.bases.len()
            )));
        }
        if self.count == 0 {
            return Err(CliError::usage("field `count`: file holds no bases"));
        }
        let mut out = Vec::with_capacity(self.count);
        for (k, rows) in self.bases.iter().enumerate() {
            if rows.len() != self.n {
                return Err(CliError::usage(format!(
                    "field `bases[{k}]`: expected {} rows, got {}",
                    self.n,
                    rows.len()
                )));
            }
            let mut x = ComplexMatrix::zeros(self.n, self.m);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.m {
                    return Err(CliError::usage(format!(
                        "field `bases[{k}][{i}]`: expected {} entries, got {}",
                        self.m,
                        row.len()
                    )));
                }
                for (j, e) in row.iter().enumerate() {
                    if !(e.re.is_finite() && e.im.is_finite()) {
                        return Err(CliError::usage(format!(
                            "field `bases[{k}][{i}][{j}]`: non-finite entry"
                        )));
                    }
                    x[(i, j)] = c64(e.re, e.im);
                }
            }
            let basis = match StiefelBasis::with_tolerance(x.clone(), FILE_ORTHONORMALITY_TOL) {
                Ok(b) => b,
                Err(_) if repair => StiefelBasis::orthonormalize(x).map_err(|e| {
                    CliError::usage(format!("field `bases[{k}]`: cannot repair: {e}"))
                })?,
                Err(e) => {
                    return Err(CliError::usage(format!(
                        "field `bases[{k}]`: {e} (pass --repair to re-orthonormalize)"
                    )))
                }
            };
            out.push(basis);
        }
        Ok(out)
    }
}

pub fn read_subspace_file(path: &Path, repair: bool) -> Result<Vec<StiefelBasis>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    SubspaceFile::from_json(&text)
        .and_then(|f| f.to_bases(repair))
        .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message)))
}

pub fn write_subspace_file(path: &Path, bases: &[StiefelBasis]) -> Result<(), CliError> {
    let file = SubspaceFile::from_bases(bases)?;
    fs::write(path, file.to_json()).map_err(|e| CliError::io(path, e))
}

pub fn trace_csv(trace: &CGTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.cost.to_string(),
            r.grad_norm.to_string(),
            r.step_size.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn results_csv(table: &ExperimentTable) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).expect("in-memory write");
    for r in &table.rows {
        w.write_record([
            r.trial.to_string(),
            r.sweep_param.to_string(),
            r.sweep_value.to_string(),
            opt(r.amari_karcher),
            opt(r.amari_euclid),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// `x` with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..=12).contains(&exponent) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Parser)]
#[command(name = "grassmann-karcher", version, about = "Karcher means of complex subspaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Karcher mean of the subspaces in a file.
    KarcherMean(KarcherMeanArgs),
    /// Blind-identification sweep over noise levels or numbers of estimations.
    BiExperiment(BiExperimentArgs),
    /// Distance and principal angles between the two subspaces in a file.
    Distance(DistanceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Conjugate direction rule: hs, pr, fr, dy or star.
    #[arg(long, default_value = "hs", value_parser = parse_rule)]
    pub rule: DirectionRule,
    /// Step size rule: backtrack, or newton (rank-one data only).
    #[arg(long, default_value = "backtrack", value_parser = parse_step)]
    pub step: StepRule,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

impl SolverArgs {
    pub fn config(&self) -> CGConfig {
        CGConfig {
            direction_rule: self.rule,
            step_rule: self.step,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            ..CGConfig::default()
        }
    }
}

fn parse_rule(s: &str) -> Result<DirectionRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_step(s: &str) -> Result<StepRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct KarcherMeanArgs {
    /// Subspace file (JSON).
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Re-orthonormalize bases that fail the orthonormality check.
    #[arg(long)]
    pub repair: bool,
    /// Output subspace file for the mean; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV. Defaults to `<out>.trace.csv` when --out is given.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BiExperimentArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub eps_list: Vec<f64>,
    /// Comma-separated numbers of estimations.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub nest_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Samples per estimation.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Results CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BiExperimentArgs {
    /// Experiment configuration and sweep. Only one of the two lists may hold
    /// more than one value; with two singletons the noise level is the sweep.
    pub fn experiment(&self) -> Result<(MixingExperiment, Sweep), CliError> {
        if self.eps_list.is_empty() || self.nest_list.is_empty() {
            return Err(CliError::usage("--eps-list and --nest-list must not be empty"));
        }
        if self.eps_list.len() > 1 && self.nest_list.len() > 1 {
            return Err(CliError::usage(
                "only one of --eps-list and --nest-list may hold several values",
            ));
        }
        let cfg = MixingExperiment {
            n: self.n,
            n_est: self.nest_list[0],
            noise_level: self.eps_list[0],
            trials: self.trials,
            samples_per_trial: self.samples,
            rng_seed: self.seed,
            solver: self.solver.config(),
        };
        let sweep = if self.nest_list.len() > 1 {
            Sweep::Estimations(self.nest_list.clone())
        } else {
            Sweep::NoiseLevels(self.eps_list.clone())
        };
        Ok((cfg, sweep))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistanceArgs {
    /// Subspace file holding exactly two bases.
    pub input: PathBuf,
    #[arg(long)]
    pub repair: bool,
}

fn default_trace_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".trace.csv");
    PathBuf::from(s)
}

pub fn cmd_karcher_mean(args: &KarcherMeanArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let bases = read_subspace_file(&args.input, args.repair)?;
    let problem = KarcherProblem::from_bases(&bases)?;
    let config = args.solver.config();
    let trace_path = args
        .trace
        .clone()
        .or_else(|| args.out.as_deref().map(default_trace_path));

    let (outcome, trace) = match karcher_mean(&problem, Init::Auto, &config) {
        Ok(o) => {
            let trace = o.trace.clone();
            (Ok(o), trace)
        }
        Err(f) => (Err(f.error), f.trace),
    };
    if let Some(path) = &trace_path {
        fs::write(path, trace_csv(&trace)).map_err(|e| CliError::io(path, e))?;
    }
    let outcome = outcome?;
    let mean = vec![outcome.mean.basis()];
    match &args.out {
        Some(path) => write_subspace_file(path, &mean)?,
        None => stdout
            .write_all(SubspaceFile::from_bases(&mean)?.to_json().as_bytes())
            .map_err(|e| CliError::usage(format!("stdout: {e}")))?,
    }
    Ok(match outcome.status {
        SolverStatus::Converged => EXIT_OK,
        SolverStatus::MaxIterations => EXIT_MAX_ITER,
    })
}

pub fn cmd_bi_experiment(
    args: &BiExperimentArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let (cfg, sweep) = args.experiment()?;
    let table = run_experiment(&cfg, &sweep)?;
    let csv = results_csv(&table);
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| CliError::io(path, e))?,
        None => stdout
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::usage(format!("stdout: {e}")))?,
    }
    for v in table.sweep_values() {
        if let Some((k, e)) = table.medians(v) {
            let _ = writeln!(
                stderr,
                "{}={v}: median amari karcher {k:.4e}, euclid {e:.4e}",
                sweep.param_name()
            );
        }
    }
    if table.skipped() > 0 {
        let _ = writeln!(stderr, "{} trial(s) skipped", table.skipped());
    }
    Ok(EXIT_OK)
}

pub fn cmd_distance(args: &DistanceArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let bases = read_subspace_file(&args.input, args.repair)?;
    if bases.len() != 2 {
        return Err(CliError::usage(format!(
            "distance needs exactly 2 bases, file holds {}",
            bases.len()
        )));
    }
    let p = GrassmannPoint::from_basis(&bases[0]);
    let q = GrassmannPoint::from_basis(&bases[1]);
    let dist = p.distance(&q)?;
    let angles = p.principal_angles(&q)?;
    let angles: Vec<String> = angles.into_iter().map(format_sig12).collect();
    writeln!(stdout, "distance {}", format_sig12(dist))
        .and_then(|_| writeln!(stdout, "principal_angles {}", angles.join(" ")))
        .map_err(|e| CliError::usage(format!("stdout: {e}")))?;
    Ok(EXIT_OK)
}

/// Run a parsed command; errors are reported on `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::KarcherMean(a) => cmd_karcher_mean(a, stdout),
        Command::BiExperiment(a) => cmd_bi_experiment(a, stdout, stderr),
        Command::Distance(a) => cmd_distance(a, stdout),
    };
    match result {
        Ok(code) => {
            if code == EXIT_MAX_ITER {
                let _ = writeln!(stderr, "warning: iteration limit reached before convergence");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

/// Parse `args` (program name first) and run. Argument errors exit with 1.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_file(a: [f64; 2], b: [f64; 2]) -> String {
        format!(
            r#"{{"version":"1","n":2,"m":1,"count":2,"bases":[[[{{"re":{},"im":0}}],[{{"re":{},"im":0}}]],[[{{"re":{},"im":0}}],[{{"re":{},"im":0}}]]]}}"#,
            a[0], a[1], b[0], b[1]
        )
    }

    #[test]
    fn parses_and_validates() {
        let f = SubspaceFile::from_json(&line_file([1.0, 0.0], [0.0, 1.0])).unwrap();
        let bases = f.to_bases(false).unwrap();
        assert_eq!(bases.len(), 2);
        assert_eq!(bases[1].as_matrix()[(1, 0)], c64(1.0, 0.0));
    }

    #[test]
    fn corrupt_json_names_field() {
        let text = r#"{"version":"1","n":2,"m":1,"count":1,"bases":[[[{"re":1.0,"im":"x"}]]]}"#;
        let e = SubspaceFile::from_json(text).unwrap_err();
        assert_eq!(e.code, EXIT_USAGE);
        assert!(e.message.contains("bases[0][0][0].im"), "{}", e.message);
        let e = SubspaceFile::from_json(r#"{"version":"1","n":2,"m":1,"bases":[]}"#).unwrap_err();
        assert!(e.message.contains("count"), "{}", e.message);
    }

    #[test]
    fn shape_errors_name_field() {
        let mut f = SubspaceFile::from_json(&line_file([1.0, 0.0], [0.0, 1.0])).unwrap();
        f.count = 3;
        assert!(f.to_bases(false).unwrap_err().message.contains("`count`"));
        f.count = 2;
        f.bases[1].pop();
        assert!(f.to_bases(false).unwrap_err().message.contains("`bases[1]`"));
        f.version = "2".into();
        assert!(f.to_bases(false).unwrap_err().message.contains("`version`"));
    }

    #[test]
    fn repair_flag() {
        let f = SubspaceFile::from_json(&line_file([3.0, 4.0], [0.0, 1.0])).unwrap();
        let e = f.to_bases(false).unwrap_err();
        assert!(e.message.contains("--repair"));
        let b = f.to_bases(true).unwrap();
        let x = b[0].as_matrix();
        assert!((x[(0, 0)].re - 0.6).abs() < 1e-15 && (x[(1, 0)].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let bases: Vec<StiefelBasis> = (0..3)
            .map(|_| crate::random::random_stiefel(6, 2, &mut rng))
            .collect();
        let text = SubspaceFile::from_bases(&bases).unwrap().to_json();
        let back = SubspaceFile::from_json(&text).unwrap().to_bases(false).unwrap();
        for (a, b) in bases.iter().zip(&back) {
            assert_eq!(a.as_matrix(), b.as_matrix());
        }
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(std::f64::consts::SQRT_2 * std::f64::consts::FRAC_PI_2), "2.22144146908");
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(0.5), "0.500000000000");
        assert_eq!(format_sig12(1e-9), "1.00000000000e-9");
    }

    #[test]
    fn both_sweeps_rejected() {
        let code = main_with_args(
            ["gk", "bi-experiment", "--eps-list", "1,0.5", "--nest-list", "2,5"],
            &mut Vec::new(),
            &mut Vec::new(),
        );
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bad_flag_is_usage_error() {
        let mut err = Vec::new();
        let code = main_with_args(["gk", "distance", "x.json", "--rule", "hs"], &mut Vec::new(), &mut err);
        assert_eq!(code, EXIT_USAGE);
        let code = main_with_args(["gk", "karcher-mean", "x.json", "--rule", "zz"], &mut Vec::new(), &mut err);
        assert_eq!(code, EXIT_USAGE);
    }
}
