//! Reference SPCA methods the reduction is benchmarked against: diagonal
//! thresholding, covariance thresholding, the truncated power method, and
//! the minimal-dual-perturbation detection statistic.
//!
//! Covariance thresholding follows the single-spike scheme of the usual
//! soft-threshold-then-eigenvector construction: work on Σ̂ − I, soft
//! threshold the off-diagonal entries at τ/√n, and read the support off the
//! leading eigenvector. The MDP statistic is the scalar dual of the SPCA
//! SDP: min over z of λ_max(soft-threshold all entries at z) + z·k.

use ndarray::{Array1, Array2, ArrayView2};

use crate::linalg::{leading_eigen_sym, soft_threshold};
use crate::num::{top_k_indices_by, Real};
use crate::sampler::{empirical_covariance, SampleMatrix};
use crate::{Error, Result};

/// Tolerance for leading-eigenvector extraction.
const EIG_TOL: f64 = 1e-8;
/// Iteration cap for leading-eigenvector extraction.
const EIG_MAX_ITER: usize = 5000;

/// Zero-mean sample variance of every column, i.e. the diagonal of Σ̂.
pub fn diagonal_variances<F: Real>(x: &SampleMatrix<F>) -> Array1<F> {
    let n_inv = F::one() / F::cast(x.n() as f64);
    Array1::from_iter(
        x.data()
            .columns()
            .into_iter()
            .map(|col| col.iter().map(|&v| v * v).sum::<F>() * n_inv),
    )
}

/// Diagonal thresholding: the k coordinates of largest sample variance.
pub fn diagonal_thresholding<F: Real>(x: &SampleMatrix<F>, k: usize) -> Vec<usize> {
    let diag = diagonal_variances(x);
    top_k_indices_by(diag.as_slice().expect("contiguous"), k)
}

/// Detection statistic of diagonal thresholding: the largest sample variance.
pub fn dt_statistic<F: Real>(x: &SampleMatrix<F>) -> F {
    diagonal_variances(x)
        .iter()
        .fold(F::neg_infinity(), |acc, &v| if v > acc { v } else { acc })
}

/// Covariance thresholding support recovery.
///
/// Soft-thresholds the off-diagonal entries of Σ̂ − I at τ/√n (the diagonal
/// is kept), extracts the leading eigenvector, and returns the k coordinates
/// of largest absolute loading.
pub fn covariance_thresholding<F: Real>(
    x: &SampleMatrix<F>,
    k: usize,
    tau: F,
) -> Result<Vec<usize>> {
    if !(tau >= F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "covariance thresholding needs tau >= 0, got {tau}"
        )));
    }
    let sigma_hat = empirical_covariance(x);
    let selected = covariance_thresholding_from_cov(&sigma_hat.view(), x.n(), k, tau)?;
    Ok(selected)
}

/// As [`covariance_thresholding`] but reusing a precomputed Σ̂.
pub fn covariance_thresholding_from_cov<F: Real>(
    sigma_hat: &ArrayView2<F>,
    n: usize,
    k: usize,
    tau: F,
) -> Result<Vec<usize>> {
    let d = sigma_hat.nrows();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "selection size k={k} must satisfy 1 <= k <= d={d}"
        )));
    }
    let level = tau / F::cast(n as f64).sqrt();
    let mut m = sigma_hat.to_owned();
    for i in 0..d {
        m[[i, i]] = m[[i, i]] - F::one();
        for j in 0..d {
            if j != i {
                m[[i, j]] = soft_threshold(m[[i, j]], level);
            }
        }
    }
    let lead = leading_eigen_sym(&m.view(), F::cast(EIG_TOL), EIG_MAX_ITER, None)?;
    if !lead.converged {
        return Err(Error::Numerical(format!(
            "leading-eigenvector iteration did not reach tol {EIG_TOL} within {} steps \
             (last value {})",
            lead.iterations, lead.value
        )));
    }
    let magnitudes: Vec<F> = lead.vector.iter().map(|v| v.abs()).collect();
    Ok(top_k_indices_by(&magnitudes, k))
}

/// Result of the truncated power method.
#[derive(Debug, Clone)]
pub struct TPowerOutcome<F> {
    /// Final unit-norm iterate with at most k nonzeros.
    pub vector: Array1<F>,
    /// Top-k coordinates of the final iterate by absolute value.
    pub selected: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Rayleigh quotient vᵀΣ̂v before each update and after the last one.
    pub rayleigh_trace: Vec<F>,
}

/// Truncated power method: v ← normalize(truncate_topk(Σ̂ v, k)) until the
/// iterate moves less than `epsilon` or `max_iter` is hit. The default
/// start vector is the normalized indicator of the k largest diagonal
/// entries — note this inherits the scale sensitivity of diagonal
/// thresholding, so under variance rescaling the initialization carries no
/// signal.
pub fn truncated_power_method<F: Real>(
    sigma_hat: &ArrayView2<F>,
    k: usize,
    epsilon: F,
    max_iter: usize,
    init: Option<&Array1<F>>,
) -> Result<TPowerOutcome<F>> {
    let d = sigma_hat.nrows();
    if sigma_hat.ncols() != d {
        return Err(Error::DimensionMismatch(
            "truncated_power_method: covariance must be square".into(),
        ));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "sparsity k={k} must satisfy 1 <= k <= d={d}"
        )));
    }

    let mut v: Array1<F> = match init {
        Some(v0) => {
            if v0.len() != d {
                return Err(Error::DimensionMismatch(
                    "truncated_power_method: start vector has wrong length".into(),
                ));
            }
            let norm = v0.dot(v0).sqrt();
            if norm == F::zero() {
                return Err(Error::InvalidParameter(
                    "truncated_power_method: zero start vector".into(),
                ));
            }
            v0.mapv(|x| x / norm)
        }
        None => {
            let diag: Vec<F> = (0..d).map(|i| sigma_hat[[i, i]]).collect();
            let support = top_k_indices_by(&diag, k);
            let value = F::one() / F::cast(support.len() as f64).sqrt();
            let mut v = Array1::<F>::zeros(d);
            for &i in &support {
                v[i] = value;
            }
            v
        }
    };

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let w = sigma_hat.dot(&v);
        trace.push(v.dot(&w));
        let magnitudes: Vec<F> = w.iter().map(|x| x.abs()).collect();
        let keep = top_k_indices_by(&magnitudes, k);
        let mut truncated = Array1::<F>::zeros(d);
        let mut norm_sq = F::zero();
        for &i in &keep {
            truncated[i] = w[i];
            norm_sq = norm_sq + w[i] * w[i];
        }
        if norm_sq == F::zero() {
            break; // iterate annihilated; report non-convergence
        }
        let norm = norm_sq.sqrt();
        truncated.mapv_inplace(|x| x / norm);
        let delta = (&truncated - &v).mapv(|x| x * x).sum().sqrt();
        v = truncated;
        if delta < epsilon {
            converged = true;
            break;
        }
    }
    trace.push(v.dot(&sigma_hat.dot(&v)));

    let magnitudes: Vec<F> = v.iter().map(|x| x.abs()).collect();
    let selected = top_k_indices_by(&magnitudes, k);
    Ok(TPowerOutcome {
        vector: v,
        selected,
        iterations,
        converged,
    rayleigh_trace: trace,
    })
}

/// Default grid for the MDP dual variable: 30 log-spaced points spanning
/// [0.01, 2]·√(log d / n).
pub fn default_z_grid<F: Real>(n: usize, d: usize) -> Vec<F> {
    let scale = ((d as f64).ln() / n as f64).sqrt();
    let lo = (0.01 * scale).ln();
    let hi = (2.0 * scale).ln();
    let count = 30;
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            F::cast((lo + t * (hi - lo)).exp())
        })
        .collect()
}

/// Minimal dual perturbation statistic:
/// min over z in the grid of λ_max(soft-threshold(Σ̂, z)) + z·k.
///
/// Soft-thresholding applies to every entry including the diagonal. Grid
/// points reuse the previous eigenvector as a warm start; a capped-out
/// power iteration contributes its current estimate rather than failing,
/// since the statistic is only used comparatively.
pub fn mdp_statistic<F: Real>(sigma_hat: &ArrayView2<F>, k: usize, z_grid: &[F]) -> Result<F> {
    let d = sigma_hat.nrows();
    if sigma_hat.ncols() != d {
        return Err(Error::DimensionMismatch(
            "mdp_statistic: covariance must be square".into(),
        ));
    }
    if z_grid.is_empty() {
        return Err(Error::InvalidParameter("mdp_statistic: empty z grid".into()));
    }
    if let Some(&bad) = z_grid.iter().find(|&&z| !(z > F::zero())) {
        return Err(Error::InvalidParameter(format!(
            "mdp_statistic: grid values must be positive, got {bad}"
        )));
    }
    let kf = F::cast(k as f64);
    let mut best = F::infinity();
    let mut warm: Option<Array1<F>> = None;
    let mut m = Array2::<F>::zeros((d, d));
    for &z in z_grid {
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = soft_threshold(sigma_hat[[i, j]], z);
            }
        }
        let lead = leading_eigen_sym(
            &m.view(),
            F::cast(EIG_TOL),
            EIG_MAX_ITER,
            warm.as_ref().map(|w| w.view()).as_ref(),
        )?;
        let term = lead.value + z * kf;
        if term < best {
            best = term;
        }
        warm = Some(lead.vector);
    }
    Ok(best)
}
