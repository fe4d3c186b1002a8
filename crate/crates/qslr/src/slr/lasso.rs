//! Lasso by cyclic coordinate descent with soft-thresholding updates.
//!
//! Objective: (1/(2n))‖y − Xβ‖₂² + λ‖β‖₁, solved from a zero start. Columns
//! are never standardized here; the SPCA pipeline controls scaling
//! explicitly. Convergence is declared when a full sweep changes no
//! coefficient by more than `tol`; between full sweeps the solver iterates
//! on the active set only, which is where all the time goes on sparse
//! problems.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::linalg::soft_threshold;
use crate::num::Real;
use crate::slr::{hard_threshold_topk, RegressionInstance, SparseCoefficients};
use crate::{Error, Result};

/// Output of the coordinate-descent loop.
#[derive(Debug, Clone)]
pub struct LassoFit<F> {
    pub beta: Array1<F>,
    /// True when some full sweep moved every coefficient by at most `tol`.
    pub converged: bool,
    /// Total sweeps performed (full and active-set combined).
    pub sweeps: usize,
}

struct Columns<F> {
    data: Vec<F>,
    n: usize,
}

impl<F: Real> Columns<F> {
    fn from_design(x: &ArrayView2<F>) -> Self {
        let (n, p) = (x.nrows(), x.ncols());
        let mut data = Vec::with_capacity(n * p);
        for j in 0..p {
            data.extend(x.column(j).iter().copied());
        }
        Self { data, n }
    }

    fn col(&self, j: usize) -> &[F] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
}

/// One pass over `coords`, updating coefficients and the residual in place.
/// Returns the largest absolute coefficient change seen.
fn sweep<F: Real>(
    cols: &Columns<F>,
    inv_norms: &[Option<F>],
    lambda: F,
    n_inv: F,
    coords: &[usize],
    beta: &mut [F],
    residual: &mut [F],
) -> F {
    let mut max_change = F::zero();
    for &j in coords {
        let inv_norm = match inv_norms[j] {
            Some(v) => v,
            None => continue, // zero column stays at zero
        };
        let col = cols.col(j);
        let old = beta[j];
        let mut dot = F::zero();
        for (r, &c) in residual.iter().zip(col.iter()) {
            dot = dot + *r * c;
        }
        // Partial residual correlation: (1/n)Xⱼᵀ(r + Xⱼ βⱼ).
        let rho = dot * n_inv + old / inv_norm;
        let new = soft_threshold(rho, lambda) * inv_norm;
        if new != old {
            let delta = new - old;
            for (r, &c) in residual.iter_mut().zip(col.iter()) {
                *r = *r - delta * c;
            }
            beta[j] = new;
            let change = delta.abs();
            if change > max_change {
                max_change = change;
            }
        }
    }
    max_change
}

/// Cyclic coordinate descent for the Lasso. Returns the dense coefficient
/// vector with a convergence flag.
pub fn lasso_coordinate_descent<F: Real>(
    y: &ArrayView1<F>,
    x: &ArrayView2<F>,
    lambda: F,
    tol: F,
    max_sweeps: usize,
) -> Result<LassoFit<F>> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response length {} does not match {n} design rows",
            y.len()
        )));
    }
    if lambda < F::zero() || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "penalty lambda={lambda} must be finite and >= 0"
        )));
    }
    let n_inv = F::one() / F::cast(n as f64);
    let cols = Columns::from_design(x);
    // 1 / ((1/n)‖Xⱼ‖²); None marks an all-zero column.
    let inv_norms: Vec<Option<F>> = (0..p)
        .map(|j| {
            let norm_sq: F = cols.col(j).iter().map(|&v| v * v).sum::<F>() * n_inv;
            if norm_sq > F::zero() {
                Some(F::one() / norm_sq)
            } else {
                None
            }
        })
        .collect();

    let mut beta = vec![F::zero(); p];
    let mut residual: Vec<F> = y.iter().copied().collect();
    let all_coords: Vec<usize> = (0..p).collect();

    let mut sweeps = 0usize;
    let mut converged = false;
    while sweeps < max_sweeps {
        let change = sweep(
            &cols, &inv_norms, lambda, n_inv, &all_coords, &mut beta, &mut residual,
        );
        sweeps += 1;
        if change <= tol {
            converged = true;
            break;
        }
        // Polish the active set before paying for another full sweep.
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != F::zero()).collect();
        if active.len() < p {
            while sweeps < max_sweeps {
                let inner = sweep(
                    &cols, &inv_norms, lambda, n_inv, &active, &mut beta, &mut residual,
                );
                sweeps += 1;
                if inner <= tol {
                    break;
                }
            }
        }
    }

    Ok(LassoFit {
        beta: Array1::from_vec(beta),
        converged,
        sweeps,
    })
}

/// Lasso then keep the k largest-magnitude coefficients.
pub fn solve_thresholded_lasso<F: Real>(
    instance: &RegressionInstance<F>,
    lambda: F,
    tol: F,
    max_sweeps: usize,
) -> Result<SparseCoefficients<F>> {
    let fit = lasso_coordinate_descent(
        &instance.y.view(),
        &instance.x.view(),
        lambda,
        tol,
        max_sweeps,
    )?;
    Ok(hard_threshold_topk(&fit.beta.view(), instance.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;
    const SWEEPS: usize = 2000;

    fn random_instance(n: usize, p: usize, seed: u64) -> (Array1<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
        (y, x)
    }

    fn objective(y: &Array1<f64>, x: &Array2<f64>, beta: &Array1<f64>, lambda: f64) -> f64 {
        let n = y.len() as f64;
        let r = y - &x.dot(beta);
        r.dot(&r) / (2.0 * n) + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Proximal-gradient reference minimizer, kept independent of the
    /// coordinate-descent path it checks.
    fn ista_reference(y: &Array1<f64>, x: &Array2<f64>, lambda: f64, iters: usize) -> Array1<f64> {
        let n = y.len() as f64;
        let gram = x.t().dot(x);
        // Lipschitz bound via the largest row sum of |G|/n.
        let lip = gram
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>() / n)
            .fold(0.0, f64::max)
            .max(1e-12);
        let step = 1.0 / lip;
        let mut beta = Array1::<f64>::zeros(x.ncols());
        for _ in 0..iters {
            let grad = x.t().dot(&(x.dot(&beta) - y)) / n;
            beta = (&beta - &(grad * step)).mapv(|v| soft_threshold(v, lambda * step));
        }
        beta
    }

    #[test]
    fn orthogonal_unpenalized_matches_least_squares() {
        // XᵀX = n·I, lambda = 0: coordinate descent lands on Xᵀy/n.
        let n = 12;
        let p = 4;
        let block = n / p;
        let value = (n as f64 / block as f64).sqrt();
        let mut x = Array2::<f64>::zeros((n, p));
        for j in 0..p {
            for r in 0..block {
                x[[j * block + r, j]] = value;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = Array1::from_shape_fn(n, |_| rng.gen_range(-2.0..2.0));
        let fit = lasso_coordinate_descent(&y.view(), &x.view(), 0.0, TOL, SWEEPS).unwrap();
        assert!(fit.converged);
        let expected = x.t().dot(&y) / n as f64;
        for j in 0..p {
            assert_abs_diff_eq!(fit.beta[j], expected[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn large_lambda_kills_everything() {
        let (y, x) = random_instance(30, 8, 2);
        let n = y.len() as f64;
        let lambda_max = x
            .columns()
            .into_iter()
            .map(|c| c.dot(&y).abs() / n)
            .fold(0.0, f64::max);
        let fit =
            lasso_coordinate_descent(&y.view(), &x.view(), lambda_max, TOL, SWEEPS).unwrap();
        assert!(fit.converged);
        assert!(fit.beta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn objective_not_worse_than_projected_gradient_reference() {
        let (y, x) = random_instance(20, 10, 3);
        let lambda = 0.05;
        let fit = lasso_coordinate_descent(&y.view(), &x.view(), lambda, 1e-12, 5000).unwrap();
        let reference = ista_reference(&y, &x, lambda, 20_000);
        let cd_obj = objective(&y, &x, &fit.beta, lambda);
        let ref_obj = objective(&y, &x, &reference, lambda);
        assert!(
            cd_obj <= ref_obj + 1e-6,
            "cd {cd_obj} vs reference {ref_obj}"
        );
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        for seed in 0..10u64 {
            let (y, x) = random_instance(40, 12, 100 + seed);
            let lambda = 0.05;
            let tol = 1e-8;
            let fit = lasso_coordinate_descent(&y.view(), &x.view(), lambda, tol, 5000).unwrap();
            assert!(fit.converged);
            let n = y.len() as f64;
            let r = &y - &x.dot(&fit.beta);
            for j in 0..x.ncols() {
                let grad = x.column(j).dot(&r) / n;
                let b = fit.beta[j];
                if b != 0.0 {
                    assert!(
                        (grad - lambda * b.signum()).abs() <= 10.0 * tol,
                        "active KKT violation {} at seed {seed}, j {j}",
                        (grad - lambda * b.signum()).abs()
                    );
                } else {
                    assert!(
                        grad.abs() <= lambda + 10.0 * tol,
                        "inactive KKT violation {} at seed {seed}, j {j}",
                        grad.abs()
                    );
                }
            }
        }
    }

    #[test]
    fn thresholded_lasso_recovers_clean_sparse_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100;
        let p = 10;
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0f64..1.0));
        let beta_true = array![0.0, 2.0, 0.0, 0.0, -1.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let y = x.dot(&beta_true);
        let inst = RegressionInstance::new(y, x, 2).unwrap();
        let out = solve_thresholded_lasso(&inst, 0.01, 1e-8, 2000).unwrap();
        assert_eq!(out.support(), &[1, 4]);
    }

    #[test]
    fn thresholded_lasso_empty_when_overpenalized() {
        let (y, x) = random_instance(25, 6, 5);
        let inst = RegressionInstance::new(y, x, 3).unwrap();
        let out = solve_thresholded_lasso(&inst, 1e6, 1e-8, 100).unwrap();
        assert_eq!(out.nnz(), 0);
        assert!(out.beta().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_negative_lambda_and_bad_shapes() {
        let (y, x) = random_instance(10, 3, 6);
        assert!(lasso_coordinate_descent(&y.view(), &x.view(), -1.0, TOL, 10).is_err());
        let short = Array1::<f64>::zeros(5);
        assert!(lasso_coordinate_descent(&short.view(), &x.view(), 0.1, TOL, 10).is_err());
    }

    #[test]
    fn zero_column_stays_zero() {
        let (y, mut x) = random_instance(15, 5, 7);
        x.column_mut(2).fill(0.0);
        let fit = lasso_coordinate_descent(&y.view(), &x.view(), 0.01, TOL, SWEEPS).unwrap();
        assert_eq!(fit.beta[2], 0.0);
    }
}
