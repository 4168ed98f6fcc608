//! Monte Carlo experiment engine for the MSE-vs-non-Gaussianity sweeps.
//!
//! Trials are embarrassingly parallel; determinism comes from two rules.
//! Each trial draws from its own counter-keyed random stream, and results
//! are reduced strictly in trial order after the parallel phase, so the
//! output is bitwise identical for any worker count.

use crate::array::SourceScene;
use crate::ces::DensityGenerator;
use crate::estimators::{
    r_shape, scm_shape, tyler_shape, TylerOutcome, TYLER_MAX_ITER, TYLER_TOL,
};
use crate::linalg::hermitian_sqrt_pair;
use crate::music::{estimate_doa, pair_frequencies};
use crate::rng::StreamKey;
use crate::snapshots::synthesize_from_sqrt;
use crate::sscrb::sscrb;
use crate::{CMat, Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Scm,
    Tyler,
    R,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::Scm, Self::Tyler, Self::R];

    pub fn label(self) -> &'static str {
        match self {
            Self::Scm => "scm",
            Self::Tyler => "tyler",
            Self::R => "r",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "scm" => Ok(Self::Scm),
            "tyler" => Ok(Self::Tyler),
            "r" => Ok(Self::R),
            other => Err(Error::Parse(format!(
                "unknown estimator {other:?}, expected scm, tyler or r"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scene: SourceScene,
    /// One density generator per sweep point, in sweep order.
    pub sweep: Vec<DensityGenerator>,
    /// Snapshots per trial.
    pub snapshots: usize,
    /// Trials per sweep point.
    pub runs: usize,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// MUSIC grid size.
    pub grid: usize,
    /// A trial is an outlier when any paired error exceeds this (peak swap
    /// or subspace failure).
    pub outlier_threshold: f64,
    /// Outliers stay in the MSE average by default; flip to trim them.
    pub exclude_outliers: bool,
    /// Worker threads; 0 uses the process-wide pool.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if self.sweep.is_empty() {
            return Err(Error::Domain("sweep must have at least one point".into()));
        }
        for g in &self.sweep {
            g.validate()?;
        }
        if self.snapshots < self.scene.n {
            return Err(Error::Domain(format!(
                "need at least N={} snapshots per trial, got {}",
                self.scene.n, self.snapshots
            )));
        }
        if self.runs == 0 {
            return Err(Error::Domain("need at least one run".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Domain("select at least one estimator".into()));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(e) {
                return Err(Error::Domain(format!(
                    "estimator {} listed twice",
                    e.label()
                )));
            }
        }
        if self.grid < 64 {
            return Err(Error::Domain(format!(
                "grid size must be >= 64, got {}",
                self.grid
            )));
        }
        if !(self.outlier_threshold > 0.0) {
            return Err(Error::Domain("outlier threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Numeric sweep coordinate of a generator for CSV and plotting; the
/// parameter-free Gaussian reports 0.
pub fn sweep_value(generator: DensityGenerator) -> f64 {
    generator.parameter().map_or(0.0, |(_, v)| v)
}

#[derive(Debug, Clone)]
struct SuccessRecord {
    /// Frobenius norm of the paired-error outer product (equals the
    /// squared error norm; the identity is asserted at the call site).
    mse_term: f64,
    outlier: bool,
    iterations: usize,
    residual: f64,
    alpha: f64,
    pd_repaired: bool,
}

#[derive(Debug, Clone)]
enum TrialOutcome {
    Success(SuccessRecord),
    Failure,
}

#[derive(Debug, Clone)]
pub struct EstimatorSummary {
    pub estimator_label: &'static str,
    /// Mean of the per-trial error indices over the included trials.
    pub mse_index: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    /// Trials included in the mean.
    pub included: usize,
    /// Successful trials whose error exceeded the outlier threshold.
    pub outliers: usize,
    /// Trials where the estimator or the peak search reported an error.
    pub failures: usize,
    pub mean_iterations: f64,
    pub mean_residual: f64,
    pub mean_alpha: f64,
    pub pd_repairs: usize,
}

#[derive(Debug, Clone)]
pub struct SweepPointResult {
    pub generator: DensityGenerator,
    pub sscrb_index: f64,
    pub summaries: Vec<EstimatorSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub points: Vec<SweepPointResult>,
}

/// Per-trial error index: MUSIC on the shape, permutation pairing against
/// the true frequencies, then the outer-product Frobenius norm of the
/// error vector. The algebraic identity with the plain squared norm is
/// asserted, keeping the two routes honest.
fn score(cfg: &ExperimentConfig, shape: &CMat) -> Result<(f64, bool)> {
    let est = estimate_doa(shape, cfg.scene.k(), cfg.grid, true)?;
    let errors = pair_frequencies(&est.nu, &cfg.scene.nu)?;
    let outer = {
        let e = crate::RVec::from_vec(errors.clone());
        (&e * e.transpose()).norm()
    };
    let squared: f64 = errors.iter().map(|e| e * e).sum();
    assert!(
        (outer - squared).abs() <= 1e-12 * squared.max(1e-300),
        "outer-product norm {outer} drifted from squared norm {squared}"
    );
    let outlier = errors.iter().any(|e| e.abs() > cfg.outlier_threshold);
    Ok((outer, outlier))
}

fn success(cfg: &ExperimentConfig, shape: &CMat) -> Result<SuccessRecord> {
    let (mse_term, outlier) = score(cfg, shape)?;
    Ok(SuccessRecord {
        mse_term,
        outlier,
        iterations: 0,
        residual: 0.0,
        alpha: 0.0,
        pd_repaired: false,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    sqrt: &CMat,
    generator: DensityGenerator,
    key: StreamKey,
) -> Vec<TrialOutcome> {
    let set = match synthesize_from_sqrt(sqrt, cfg.snapshots, generator, key) {
        Ok(s) => s,
        Err(_) => return vec![TrialOutcome::Failure; cfg.estimators.len()],
    };
    let needs_tyler = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Tyler | EstimatorKind::R));
    let tyler: Option<Result<TylerOutcome>> =
        needs_tyler.then(|| tyler_shape(&set, TYLER_TOL, TYLER_MAX_ITER));
    cfg.estimators
        .iter()
        .map(|&kind| {
            let outcome = match kind {
                EstimatorKind::Scm => {
                    scm_shape(&set).and_then(|s| success(cfg, s.matrix()))
                }
                EstimatorKind::Tyler => match &tyler {
                    Some(Ok(t)) => success(cfg, t.shape.matrix()).map(|mut s| {
                        s.iterations = t.iterations;
                        s.residual = t.residual;
                        s
                    }),
                    _ => Err(Error::NonConvergence("tyler seed failed".into())),
                },
                EstimatorKind::R => match &tyler {
                    Some(Ok(t)) => r_shape(&set, &t.shape).and_then(|r| {
                        success(cfg, r.shape.matrix()).map(|mut s| {
                            s.iterations = t.iterations;
                            s.residual = t.residual;
                            s.alpha = r.alpha;
                            s.pd_repaired = r.pd_repaired;
                            s
                        })
                    }),
                    _ => Err(Error::NonConvergence("tyler seed failed".into())),
                },
            };
            match outcome {
                Ok(s) => TrialOutcome::Success(s),
                Err(_) => TrialOutcome::Failure,
            }
        })
        .collect()
}

fn reduce_point(
    cfg: &ExperimentConfig,
    generator: DensityGenerator,
    sscrb_index: f64,
    records: &[Vec<TrialOutcome>],
) -> SweepPointResult {
    let summaries = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(ei, &kind)| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut included = 0usize;
            let mut outliers = 0usize;
            let mut failures = 0usize;
            let mut successes = 0usize;
            let mut iter_sum = 0.0;
            let mut resid_sum = 0.0;
            let mut alpha_sum = 0.0;
            let mut pd_repairs = 0usize;
            for record in records {
                match &record[ei] {
                    TrialOutcome::Failure => failures += 1,
                    TrialOutcome::Success(s) => {
                        successes += 1;
                        iter_sum += s.iterations as f64;
                        resid_sum += s.residual;
                        alpha_sum += s.alpha;
                        pd_repairs += s.pd_repaired as usize;
                        if s.outlier {
                            outliers += 1;
                        }
                        if !(s.outlier && cfg.exclude_outliers) {
                            included += 1;
                            sum += s.mse_term;
                            sum_sq += s.mse_term * s.mse_term;
                        }
                    }
                }
            }
            debug_assert_eq!(successes + failures, cfg.runs, "every trial accounted");
            let mse_index = if included > 0 {
                sum / included as f64
            } else {
                f64::NAN
            };
            let std_error = if included > 1 {
                let inc = included as f64;
                ((sum_sq / inc - mse_index * mse_index).max(0.0) / (inc - 1.0)).sqrt()
            } else {
                0.0
            };
            let over = |total: f64| {
                if successes > 0 {
                    total / successes as f64
                } else {
                    0.0
                }
            };
            EstimatorSummary {
                estimator_label: kind.label(),
                mse_index,
                std_error,
                included,
                outliers,
                failures,
                mean_iterations: over(iter_sum),
                mean_residual: over(resid_sum),
                mean_alpha: over(alpha_sum),
                pd_repairs,
            }
        })
        .collect();
    SweepPointResult {
        generator,
        sscrb_index,
        summaries,
    }
}

fn run_sweep_point(
    cfg: &ExperimentConfig,
    sqrt: &CMat,
    sweep_index: usize,
    generator: DensityGenerator,
) -> Result<SweepPointResult> {
    let bound = sscrb(&cfg.scene, generator, cfg.snapshots)?;
    let records: Vec<Vec<TrialOutcome>> = (0..cfg.runs)
        .into_par_iter()
        .map(|trial| {
            run_trial(
                cfg,
                sqrt,
                generator,
                StreamKey::new(cfg.master_seed, sweep_index as u64, trial as u64),
            )
        })
        .collect();
    Ok(reduce_point(cfg, generator, bound.index, &records))
}

/// Runs the full sweep, invoking `on_point` after each sweep point so
/// callers can stream results out as they land.
pub fn run_experiment_with<F>(cfg: &ExperimentConfig, mut on_point: F) -> Result<ExperimentResult>
where
    F: FnMut(&SweepPointResult) -> Result<()> + Send,
{
    cfg.validate()?;
    let mut body = || -> Result<ExperimentResult> {
        let (sqrt, _) = hermitian_sqrt_pair(&cfg.scene.covariance())?;
        let mut points = Vec::with_capacity(cfg.sweep.len());
        for (sweep_index, &generator) in cfg.sweep.iter().enumerate() {
            let point = run_sweep_point(cfg, &sqrt, sweep_index, generator)?;
            on_point(&point)?;
            points.push(point);
        }
        Ok(ExperimentResult { points })
    };
    if cfg.workers == 0 {
        body()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Numerical(format!("worker pool construction failed: {e}")))?;
        pool.install(body)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, |_| Ok(()))
}

pub fn csv_header(verbose: bool) -> String {
    let mut s = String::from("sweep_param,estimator,mse_index,runs,outliers,sscrb_index");
    if verbose {
        s.push_str(",std_error,failures,mean_iterations,mean_residual,mean_alpha,pd_repairs");
    }
    s.push('\n');
    s
}

pub fn csv_point_rows(point: &SweepPointResult, verbose: bool) -> String {
    let mut out = String::new();
    let param = sweep_value(point.generator);
    for s in &point.summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            param, s.estimator_label, s.mse_index, s.included, s.outliers, point.sscrb_index
        ));
        if verbose {
            out.push_str(&format!(
                ",{},{},{},{},{},{}",
                s.std_error,
                s.failures,
                s.mean_iterations,
                s.mean_residual,
                s.mean_alpha,
                s.pd_repairs
            ));
        }
        out.push('\n');
    }
    out
}

pub fn render_csv(result: &ExperimentResult, verbose: bool) -> String {
    let mut out = csv_header(verbose);
    for point in &result.points {
        out.push_str(&csv_point_rows(point, verbose));
    }
    out
}
