//! Seeded, trial-averaged experiment runner producing machine-readable CSV.
//!
//! Two pipelines: support recovery (overlap fraction per method over a grid
//! of sparsities) and hypothesis testing (paired H0/H1 statistics per
//! method). Trials run in parallel; every trial derives its own seeds from
//! `(base_seed, k, trial)`, and rows are sorted before writing, so output
//! is byte-identical across runs and thread schedules.

pub mod config;

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::baselines::{
    covariance_thresholding_from_cov, default_z_grid, diagonal_thresholding, dt_statistic,
    mdp_statistic, truncated_power_method,
};
use crate::detect::recover_topk;
use crate::model::{make_spike, SpikeMode, SpikedModel};
use crate::sampler::{
    derive_seed, empirical_covariance, rescale_columns, sample_null, sample_spiked, Rescale,
    SampleMatrix,
};
use crate::slr::{solver_by_name, SolverConfig};
use crate::{Error, Result};

/// Sub-stream tags for per-trial seed derivation.
const TAG_SPIKE: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_NULL: u64 = 3;

/// Which pipeline a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Recovery,
    Testing,
}

/// Methods allowed per pipeline.
pub const RECOVERY_METHODS: [&str; 4] = ["dt", "ct", "tpower", "qslr"];
pub const TESTING_METHODS: [&str; 3] = ["dt", "mdp", "qslr"];

/// Full description of one benchmark run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub d: usize,
    pub k_values: Vec<usize>,
    pub theta: f64,
    pub trials: usize,
    pub methods: Vec<String>,
    pub solver: SolverConfig<f64>,
    pub rescale: bool,
    pub base_seed: u64,
    /// Covariance-thresholding soft-threshold constant (τ in τ/√n).
    pub ct_tau: f64,
    /// Truncated-power-method convergence tolerance.
    pub tpower_epsilon: f64,
    pub tpower_max_iter: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n: 300,
            d: 300,
            k_values: vec![10],
            theta: 3.0,
            trials: 20,
            methods: match kind {
                ExperimentKind::Recovery => vec!["dt".into(), "qslr".into()],
                ExperimentKind::Testing => vec!["dt".into(), "qslr".into()],
            },
            solver: SolverConfig::default(),
            rescale: false,
            base_seed: 0,
            ct_tau: 4.0,
            tpower_epsilon: 0.01,
            tpower_max_iter: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n < 1 || self.d < 2 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1 and d >= 2, got n={}, d={}",
                self.n, self.d
            )));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidParameter("need at least one k value".into()));
        }
        if let Some(&bad) = self.k_values.iter().find(|&&k| k == 0 || k >= self.d) {
            return Err(Error::InvalidParameter(format!(
                "every k must satisfy 1 <= k < d; got k={bad} with d={}",
                self.d
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("need at least one method".into()));
        }
        let allowed: &[&str] = match self.kind {
            ExperimentKind::Recovery => &RECOVERY_METHODS,
            ExperimentKind::Testing => &TESTING_METHODS,
        };
        for m in &self.methods {
            if !allowed.contains(&m.as_str()) {
                return Err(Error::UnknownName(format!(
                    "method '{m}' (known for this experiment: {})",
                    allowed.join(", ")
                )));
            }
        }
        let dedup: BTreeSet<&String> = self.methods.iter().collect();
        if dedup.len() != self.methods.len() {
            return Err(Error::InvalidParameter("duplicate method names".into()));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and >= 0, got {}",
                self.theta
            )));
        }
        // Fail early on an unknown solver name.
        solver_by_name::<f64>(&self.solver)?;
        Ok(())
    }
}

/// One measured value: `method,k,theta,trial,metric,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: String,
    pub k: usize,
    pub theta: f64,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

/// Aggregate row; written with `summary` in the trial column.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub method: String,
    pub k: usize,
    pub theta: f64,
    pub metric: String,
    pub value: f64,
}

/// Everything one experiment produced, already deterministically ordered.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub trial_rows: Vec<TrialRecord>,
    pub summary_rows: Vec<SummaryRecord>,
}

impl ExperimentOutput {
    /// Render the CSV contract: header `method,k,theta,trial,metric,value`,
    /// '.' decimal, newline-terminated, trial rows first then summaries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,k,theta,trial,metric,value\n");
        for r in &self.trial_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.method, r.k, r.theta, r.trial, r.metric, r.value
            ));
        }
        for s in &self.summary_rows {
            out.push_str(&format!(
                "{},{},{},summary,{},{}\n",
                s.method, s.k, s.theta, s.metric, s.value
            ));
        }
        out
    }
}

fn sort_rows(rows: &mut [TrialRecord]) {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.k.cmp(&b.k))
            .then(a.trial.cmp(&b.trial))
            .then(a.metric.cmp(&b.metric))
    });
}

fn trial_seed(base: u64, k: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(base, k as u64), trial as u64)
}

/// Fraction of the true support hit by a selection of size k.
pub fn overlap_fraction(selected: &[usize], support: &[usize]) -> f64 {
    let support: BTreeSet<usize> = support.iter().copied().collect();
    let hits = selected.iter().filter(|i| support.contains(i)).count();
    hits as f64 / support.len() as f64
}

/// Best achievable single-cutoff empirical error between two samples:
/// min over c of (P̂₀(stat > c) + P̂₁(stat <= c)) / 2.
pub fn best_cutoff_error(h0: &[f64], h1: &[f64]) -> f64 {
    let mut cutoffs: Vec<f64> = h0.iter().chain(h1.iter()).copied().collect();
    let below_all = cutoffs.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    cutoffs.push(below_all);
    let n0 = h0.len() as f64;
    let n1 = h1.len() as f64;
    let mut best = f64::INFINITY;
    for &c in &cutoffs {
        let type1 = h0.iter().filter(|&&v| v > c).count() as f64 / n0;
        let type2 = h1.iter().filter(|&&v| v <= c).count() as f64 / n1;
        let err = 0.5 * (type1 + type2);
        if err < best {
            best = err;
        }
    }
    best
}

/// Support-recovery sweep: for each (k, trial), draw a random-signs spike,
/// sample, optionally rescale, and score every method's top-k selection by
/// the recovered-support fraction.
pub fn run_recovery_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if config.kind != ExperimentKind::Recovery {
        return Err(Error::InvalidParameter(
            "run_recovery_experiment needs a recovery-kind config".into(),
        ));
    }
    config.validate()?;

    let jobs: Vec<(usize, usize)> = config
        .k_values
        .iter()
        .flat_map(|&k| (0..config.trials).map(move |t| (k, t)))
        .collect();

    let per_trial: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(k, trial)| recovery_trial(config, k, trial))
        .collect::<Result<_>>()?;

    let mut trial_rows: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    sort_rows(&mut trial_rows);

    // One summary row per (method, k): the mean overlap across trials.
    let mut summary_rows = Vec::new();
    for method in {
        let mut m = config.methods.clone();
        m.sort();
        m
    } {
        for &k in &config.k_values {
            let values: Vec<f64> = trial_rows
                .iter()
                .filter(|r| {
                    r.method == method && r.k == k && r.metric == "overlap_fraction" && r.value >= 0.0
                })
                .map(|r| r.value)
                .collect();
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            summary_rows.push(SummaryRecord {
                method: method.clone(),
                k,
                theta: config.theta,
                metric: "overlap_fraction_mean".into(),
                value: mean,
            });
        }
    }
    summary_rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.k.cmp(&b.k)));

    Ok(ExperimentOutput {
        trial_rows,
        summary_rows,
    })
}

fn recovery_trial(config: &ExperimentConfig, k: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(config.base_seed, k, trial);
    let spike = make_spike::<f64>(config.d, k, SpikeMode::RandomSigns, derive_seed(seed, TAG_SPIKE))?;
    let support = spike.support().to_vec();
    let model = SpikedModel::new(config.d, k, config.theta, spike)?;
    let mut x = sample_spiked(&model, config.n, derive_seed(seed, TAG_DATA))?;
    if config.rescale {
        x = rescale_columns(&x, &Rescale::UnitVariance)?;
    }

    let needs_cov = config.methods.iter().any(|m| m == "ct" || m == "tpower");
    let sigma_hat = needs_cov.then(|| empirical_covariance(&x));

    let mut rows = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let selection = recovery_selection(config, method, &x, sigma_hat.as_ref(), k);
        let value = match selection {
            Ok(selected) => overlap_fraction(&selected, &support),
            // Method failures become sentinel rows (excluded from summaries)
            // instead of aborting the sweep.
            Err(_) => -1.0,
        };
        rows.push(TrialRecord {
            method: method.clone(),
            k,
            theta: config.theta,
            trial,
            metric: "overlap_fraction".into(),
            value,
        });
    }
    Ok(rows)
}

fn recovery_selection(
    config: &ExperimentConfig,
    method: &str,
    x: &SampleMatrix<f64>,
    sigma_hat: Option<&ndarray::Array2<f64>>,
    k: usize,
) -> Result<Vec<usize>> {
    match method {
        "dt" => Ok(diagonal_thresholding(x, k)),
        "ct" => covariance_thresholding_from_cov(
            &sigma_hat.expect("covariance precomputed").view(),
            x.n(),
            k,
            config.ct_tau,
        ),
        "tpower" => {
            let out = truncated_power_method(
                &sigma_hat.expect("covariance precomputed").view(),
                k,
                config.tpower_epsilon,
                config.tpower_max_iter,
                None,
            )?;
            Ok(out.selected)
        }
        "qslr" => {
            let solver = solver_by_name(&config.solver)?;
            let (selected, _) = recover_topk(x, k, solver.as_ref())?;
            Ok(selected)
        }
        other => Err(Error::UnknownName(format!("method '{other}'"))),
    }
}

/// Hypothesis-testing sweep: per (k, trial) draw one H0 and one H1 dataset
/// (random-sphere spike), optionally rescale both, and evaluate every
/// method's scalar statistic on each. Summaries carry the best-single-cutoff
/// empirical error per (method, k).
pub fn run_testing_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if config.kind != ExperimentKind::Testing {
        return Err(Error::InvalidParameter(
            "run_testing_experiment needs a testing-kind config".into(),
        ));
    }
    config.validate()?;

    let jobs: Vec<(usize, usize)> = config
        .k_values
        .iter()
        .flat_map(|&k| (0..config.trials).map(move |t| (k, t)))
        .collect();

    let per_trial: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(k, trial)| testing_trial(config, k, trial))
        .collect::<Result<_>>()?;

    let mut trial_rows: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    sort_rows(&mut trial_rows);

    let mut summary_rows = Vec::new();
    for method in {
        let mut m = config.methods.clone();
        m.sort();
        m
    } {
        for &k in &config.k_values {
            let collect = |metric: &str| -> Vec<f64> {
                trial_rows
                    .iter()
                    .filter(|r| r.method == method && r.k == k && r.metric == metric)
                    .map(|r| r.value)
                    .collect()
            };
            let h0 = collect("statistic_h0");
            let h1 = collect("statistic_h1");
            if h0.is_empty() || h1.is_empty() {
                continue;
            }
            summary_rows.push(SummaryRecord {
                method: method.clone(),
                k,
                theta: config.theta,
                metric: "best_cutoff_error".into(),
                value: best_cutoff_error(&h0, &h1),
            });
        }
    }
    summary_rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.k.cmp(&b.k)));

    Ok(ExperimentOutput {
        trial_rows,
        summary_rows,
    })
}

fn testing_trial(config: &ExperimentConfig, k: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(config.base_seed, k, trial);
    let mut h0 = sample_null::<f64>(config.d, config.n, derive_seed(seed, TAG_NULL))?;
    let spike = make_spike::<f64>(
        config.d,
        k,
        SpikeMode::RandomSphere,
        derive_seed(seed, TAG_SPIKE),
    )?;
    let model = SpikedModel::new(config.d, k, config.theta, spike)?;
    let mut h1 = sample_spiked(&model, config.n, derive_seed(seed, TAG_DATA))?;
    if config.rescale {
        h0 = rescale_columns(&h0, &Rescale::UnitVariance)?;
        h1 = rescale_columns(&h1, &Rescale::UnitVariance)?;
    }

    let needs_cov = config.methods.iter().any(|m| m == "mdp");
    let cov_h0 = needs_cov.then(|| empirical_covariance(&h0));
    let cov_h1 = needs_cov.then(|| empirical_covariance(&h1));

    let mut rows = Vec::with_capacity(config.methods.len() * 2);
    for method in &config.methods {
        for (suffix, data, cov) in [
            ("statistic_h0", &h0, cov_h0.as_ref()),
            ("statistic_h1", &h1, cov_h1.as_ref()),
        ] {
            let value = testing_statistic(config, method, data, cov, k).unwrap_or(-1.0);
            rows.push(TrialRecord {
                method: method.clone(),
                k,
                theta: config.theta,
                trial,
                metric: suffix.into(),
                value,
            });
        }
    }
    Ok(rows)
}

fn testing_statistic(
    config: &ExperimentConfig,
    method: &str,
    x: &SampleMatrix<f64>,
    sigma_hat: Option<&ndarray::Array2<f64>>,
    k: usize,
) -> Result<f64> {
    match method {
        "dt" => Ok(dt_statistic(x)),
        "mdp" => {
            let grid = default_z_grid::<f64>(x.n(), x.d());
            mdp_statistic(
                &sigma_hat.expect("covariance precomputed").view(),
                k,
                &grid,
            )
        }
        "qslr" => {
            let solver = solver_by_name(&config.solver)?;
            let report = crate::detect::q_report(x, k, solver.as_ref())?;
            Ok(report.max_q())
        }
        other => Err(Error::UnknownName(format!("method '{other}'"))),
    }
}
