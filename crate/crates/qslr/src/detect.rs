//! The reduction itself: per-coordinate Q statistics driven by an SLR
//! black box, the threshold test, support recovery, top-k recovery, and the
//! halving wrapper for unknown sparsity.
//!
//! For coordinate i the response is column i and the design is the other
//! d−1 columns; the statistic Qᵢ = (1/n)‖y‖² − (1/n)‖y − Xβ̂‖² measures how
//! much predictive power the rest of the coordinates carry. Coordinates are
//! independent, so the full report is computed in parallel.

use ndarray::Array2;
use rayon::prelude::*;

use crate::num::{top_k_indices_by, Real};
use crate::sampler::SampleMatrix;
use crate::slr::{RegressionInstance, SlrSolver};
use crate::{Error, Result};

/// All d per-coordinate statistics plus the decision threshold.
#[derive(Debug, Clone)]
pub struct QReport<F> {
    /// Qᵢ per coordinate.
    pub q: Vec<F>,
    /// 13·k·log(d/k)/n (clamped; see [`q_threshold`]).
    pub threshold: F,
    /// exceed[i] ⇔ q[i] > threshold, strictly.
    pub exceed: Vec<bool>,
    pub solver_name: String,
    pub k: usize,
}

impl<F: Real> QReport<F> {
    fn from_q(q: Vec<F>, threshold: F, solver_name: String, k: usize) -> Self {
        let exceed = q.iter().map(|&v| v > threshold).collect();
        Self {
            q,
            threshold,
            exceed,
            solver_name,
            k,
        }
    }

    pub fn max_q(&self) -> F {
        self.q
            .iter()
            .fold(F::neg_infinity(), |acc, &v| if v > acc { v } else { acc })
    }

    pub fn exceed_count(&self) -> usize {
        self.exceed.iter().filter(|&&e| e).count()
    }
}

/// Decision threshold 13·k·log(d/k)/n.
///
/// The tail bound behind it needs d/k >= e; below that the log factor is
/// clamped to 1, i.e. the threshold never drops under 13·k/n.
pub fn q_threshold<F: Real>(n: usize, d: usize, k: usize) -> F {
    let log_ratio = (d as f64 / k as f64).ln().max(1.0);
    F::cast(13.0 * k as f64 * log_ratio) / F::cast(n as f64)
}

/// Regression view of coordinate `i`: response = column i, design = the
/// remaining columns (indices above i shift down by one).
pub fn coordinate_instance<F: Real>(
    x: &SampleMatrix<F>,
    i: usize,
    k: usize,
) -> Result<RegressionInstance<F>> {
    let (n, d) = (x.n(), x.d());
    if i >= d {
        return Err(Error::InvalidParameter(format!(
            "coordinate {i} out of range for d={d}"
        )));
    }
    if k > d - 1 {
        return Err(Error::InvalidParameter(format!(
            "sparsity budget k={k} exceeds the d-1={} design columns",
            d - 1
        )));
    }
    let y = x.column(i);
    let mut design = Array2::<F>::zeros((n, d - 1));
    let mut c = 0usize;
    for j in 0..d {
        if j == i {
            continue;
        }
        design.column_mut(c).assign(&x.data().column(j));
        c += 1;
    }
    RegressionInstance::new(y, design, k)
}

/// Qᵢ for a single coordinate.
pub fn q_statistic<F: Real>(
    x: &SampleMatrix<F>,
    i: usize,
    solver: &dyn SlrSolver<F>,
    k: usize,
) -> Result<F> {
    let instance = coordinate_instance(x, i, k)?;
    let beta_hat = solver.solve(&instance)?;
    let n_inv = F::one() / F::cast(instance.n() as f64);
    // Both norms go through the same summation path so that a zero
    // coefficient vector yields exactly Q = 0.
    let zero = crate::slr::SparseCoefficients::zeros(instance.p());
    let y_sq = zero.residual_sq_norm(&instance.y.view(), &instance.x.view());
    let res_sq = beta_hat.residual_sq_norm(&instance.y.view(), &instance.x.view());
    Ok((y_sq - res_sq) * n_inv)
}

/// Q statistics for every coordinate, computed in parallel.
pub fn q_report<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<QReport<F>> {
    let d = x.d();
    if k == 0 || k > d - 1 {
        return Err(Error::InvalidParameter(format!(
            "sparsity budget k={k} must satisfy 1 <= k <= d-1={}",
            d - 1
        )));
    }
    let q: Vec<F> = (0..d)
        .into_par_iter()
        .map(|i| q_statistic(x, i, solver, k))
        .collect::<Result<_>>()?;
    let threshold = q_threshold(x.n(), d, k);
    Ok(QReport::from_q(q, threshold, solver.name().to_string(), k))
}

/// Threshold test, short-circuiting at the first exceedance.
/// Returns 1 (true) iff some Qᵢ > 13·k·log(d/k)/n.
pub fn hypothesis_test<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<bool> {
    let d = x.d();
    if k == 0 || k > d - 1 {
        return Err(Error::InvalidParameter(format!(
            "sparsity budget k={k} must satisfy 1 <= k <= d-1={}",
            d - 1
        )));
    }
    let threshold = q_threshold(x.n(), d, k);
    for i in 0..d {
        if q_statistic(x, i, solver, k)? > threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Threshold test in diagnostics mode: computes every coordinate and
/// returns the full report along with the decision.
pub fn hypothesis_test_diagnostic<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<(bool, QReport<F>)> {
    let report = q_report(x, k, solver)?;
    let decision = report.exceed_count() > 0;
    Ok((decision, report))
}

/// Support recovery by thresholding: Ŝ = {i : Qᵢ > threshold}.
pub fn support_recovery<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<(Vec<usize>, QReport<F>)> {
    let report = q_report(x, k, solver)?;
    let selected = report
        .exceed
        .iter()
        .enumerate()
        .filter_map(|(i, &e)| e.then_some(i))
        .collect();
    Ok((selected, report))
}

/// The k coordinates with the largest Qᵢ, ties toward the lower index.
pub fn recover_topk<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<(Vec<usize>, QReport<F>)> {
    let report = q_report(x, k, solver)?;
    let selected = top_k_indices_by(&report.q, k);
    Ok((selected, report))
}

/// One halving level of the unknown-sparsity search.
#[derive(Debug, Clone)]
pub struct AdaptiveLevel<F> {
    pub k: usize,
    pub exceed_count: usize,
    pub threshold: F,
}

/// Outcome of the unknown-sparsity wrapper.
#[derive(Debug, Clone)]
pub struct AdaptiveOutcome<F> {
    /// The sparsity level at which the search stopped.
    pub k_estimate: usize,
    /// Whether any coordinate exceeded the threshold at the stopping level.
    pub detected: bool,
    pub levels: Vec<AdaptiveLevel<F>>,
}

/// Start from an overestimate and keep halving the budget until "enough"
/// coordinates pass the level's threshold. "Enough" is defined as at least
/// k′ exceedances: once the budget drops to the true sparsity, all true
/// support coordinates should pass. Stops at k′ = 1 regardless.
pub fn adaptive_sparsity<F: Real>(
    x: &SampleMatrix<F>,
    k_init: usize,
    solver: &dyn SlrSolver<F>,
) -> Result<AdaptiveOutcome<F>> {
    if k_init == 0 {
        return Err(Error::InvalidParameter(
            "initial sparsity overestimate must be >= 1".into(),
        ));
    }
    // The solver cannot use more than d-1 columns.
    let mut k = k_init.min(x.d() - 1);
    let mut levels = Vec::new();
    loop {
        let report = q_report(x, k, solver)?;
        let count = report.exceed_count();
        levels.push(AdaptiveLevel {
            k,
            exceed_count: count,
            threshold: report.threshold,
        });
        if count >= k || k == 1 {
            return Ok(AdaptiveOutcome {
                k_estimate: k,
                detected: count > 0,
                levels,
            });
        }
        k /= 2;
    }
}
