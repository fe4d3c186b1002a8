//! Orthogonal matching pursuit: greedily add the column most correlated
//! with the residual, refit least squares on the selected set.

use ndarray::{Array1, Array2};

use crate::linalg::least_squares;
use crate::num::Real;
use crate::slr::{RegressionInstance, SparseCoefficients};
use crate::Result;

/// Run OMP for `instance.k` steps. A rank-deficient selected block falls
/// back to the minimum-norm (pseudoinverse) refit inside `least_squares`;
/// the loop stops early when every remaining column is uncorrelated with
/// the residual.
pub fn solve_omp<F: Real>(instance: &RegressionInstance<F>) -> Result<SparseCoefficients<F>> {
    Ok(solve_omp_with_trace(instance)?.0)
}

/// As [`solve_omp`], also returning ‖residual‖₂ after each refit.
pub fn solve_omp_with_trace<F: Real>(
    instance: &RegressionInstance<F>,
) -> Result<(SparseCoefficients<F>, Vec<F>)> {
    let (n, p) = (instance.n(), instance.p());
    let x = &instance.x;
    let y = &instance.y;

    let mut residual = y.clone();
    let mut active: Vec<usize> = Vec::with_capacity(instance.k);
    let mut in_active = vec![false; p];
    let mut coefs = Array1::<F>::zeros(0);
    let mut residual_norms = Vec::with_capacity(instance.k);

    for _ in 0..instance.k {
        // Most correlated unselected column; ties go to the lower index.
        let mut best_j = None;
        let mut best_corr = F::zero();
        for j in 0..p {
            if in_active[j] {
                continue;
            }
            let corr = x.column(j).dot(&residual).abs();
            if corr > best_corr {
                best_corr = corr;
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else {
            break; // residual orthogonal to all remaining columns
        };
        active.push(j);
        in_active[j] = true;

        let mut sub = Array2::<F>::zeros((n, active.len()));
        for (c, &idx) in active.iter().enumerate() {
            sub.column_mut(c).assign(&x.column(idx));
        }
        coefs = least_squares(&sub.view(), &y.view())?;
        residual = y - &sub.dot(&coefs);
        residual_norms.push(residual.dot(&residual).sqrt());
    }

    let mut beta = Array1::<F>::zeros(p);
    for (c, &j) in active.iter().enumerate() {
        beta[j] = coefs[c];
    }
    Ok((
        SparseCoefficients::from_candidates(&beta.view(), &active),
        residual_norms,
    ))
}
