//! Small dense linear-algebra kernels: SPD solves, a Jacobi eigensolver for
//! symmetric matrices, minimum-norm least squares, and a shifted power
//! iteration for leading eigenpairs.
//!
//! Everything here is deterministic and allocation-simple; target scale is
//! d up to a couple thousand, so dense storage is fine.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::num::Real;
use crate::{Error, Result};

/// Soft-thresholding operator: sign(x) * max(|x| - t, 0).
pub fn soft_threshold<F: Real>(x: F, t: F) -> F {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        F::zero()
    }
}

/// Symmetrize in place as (M + Mᵀ)/2.
pub fn symmetrize<F: Real>(m: &mut Array2<F>) {
    let n = m.nrows();
    let half = F::cast(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[[i, j]] + m[[j, i]]) * half;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// Solve `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn cholesky_solve<F: Real>(a: &ArrayView2<F>, b: &ArrayView1<F>) -> Result<Array1<F>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky_solve: a is {}x{}, b has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    // Lower-triangular factor, stored dense.
    let mut l = Array2::<F>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= F::zero() {
                    return Err(Error::Singular(
                        "cholesky_solve: matrix is not positive definite".into(),
                    ));
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = Array1::<F>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<F>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Ok(x)
}

/// Full eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
pub struct SymmetricEigen<F> {
    /// Eigenvalues in ascending order.
    pub values: Array1<F>,
    /// Orthonormal eigenvectors, column `j` pairing with `values[j]`.
    pub vectors: Array2<F>,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
///
/// Intended for the modest sizes used by oracles and subproblem refits; for
/// leading eigenpairs of large matrices use [`leading_eigen_sym`].
pub fn symmetric_eigen<F: Real>(a: &ArrayView2<F>) -> Result<SymmetricEigen<F>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(
            "symmetric_eigen: matrix must be square".into(),
        ));
    }
    if n == 1 {
        return Ok(SymmetricEigen {
            values: Array1::from_vec(vec![a[[0, 0]]]),
            vectors: Array2::eye(1),
        });
    }
    // Flat row-major buffers; rotations touch rows p and q only.
    let mut m: Vec<F> = a.iter().copied().collect();
    let mut v: Vec<F> = vec![F::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = F::one();
    }

    let eps = F::cast(1e-14);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        let scale: F = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum::<F>() + off + F::one();
        if off <= eps * eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == F::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (F::cast(2.0) * apq);
                // Smaller-angle rotation root for stability.
                let t = if tau >= F::zero() {
                    F::one() / (tau + (F::one() + tau * tau).sqrt())
                } else {
                    -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                // Columns p and q of every row.
                for k in 0..n {
                    let kp = k * n + p;
                    let kq = k * n + q;
                    let mkp = m[kp];
                    let mkq = m[kq];
                    m[kp] = c * mkp - s * mkq;
                    m[kq] = s * mkp + c * mkq;
                }
                // Rows p and q, operating on contiguous slices.
                {
                    let (head, tail) = m.split_at_mut(q * n);
                    let row_p = &mut head[p * n..p * n + n];
                    let row_q = &mut tail[..n];
                    for k in 0..n {
                        let mpk = row_p[k];
                        let mqk = row_q[k];
                        row_p[k] = c * mpk - s * mqk;
                        row_q[k] = s * mpk + c * mqk;
                    }
                }
                for k in 0..n {
                    let kp = k * n + p;
                    let kq = k * n + q;
                    let vkp = v[kp];
                    let vkq = v[kq];
                    v[kp] = c * vkp - s * vkq;
                    v[kq] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&i| m[i * n + i]));
    let mut vectors = Array2::<F>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = v[k * n + src];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Moore–Penrose pseudoinverse of a symmetric PSD matrix applied to a
/// vector, via its eigendecomposition with a relative cutoff on small
/// eigenvalues.
pub(crate) fn solve_symmetric_pinv<F: Real>(
    g: &ArrayView2<F>,
    rhs: &ArrayView1<F>,
) -> Result<Array1<F>> {
    let eig = symmetric_eigen(g)?;
    let n = g.nrows();
    let lam_max = eig
        .values
        .iter()
        .fold(F::zero(), |acc, &l| if l.abs() > acc { l.abs() } else { acc });
    let cutoff = lam_max * F::cast(n as f64) * F::cast(1e-13);
    let mut x = Array1::<F>::zeros(n);
    for j in 0..n {
        let lam = eig.values[j];
        if lam.abs() <= cutoff {
            continue;
        }
        let vj = eig.vectors.column(j);
        let coef = vj.dot(rhs) / lam;
        for i in 0..n {
            x[i] = x[i] + coef * vj[i];
        }
    }
    Ok(x)
}

/// Minimum-norm least-squares solution of `min ||y - X b||₂`.
///
/// Uses the normal equations with a pseudoinverse fallback, so rank-deficient
/// designs are handled (the minimum-norm solution is returned).
pub fn least_squares<F: Real>(x: &ArrayView2<F>, y: &ArrayView1<F>) -> Result<Array1<F>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "least_squares: design has {} rows, response has length {}",
            x.nrows(),
            y.len()
        )));
    }
    let gram = x.t().dot(x);
    let rhs = x.t().dot(y);
    match cholesky_solve(&gram.view(), &rhs.view()) {
        Ok(b) => Ok(b),
        Err(Error::Singular(_)) => solve_symmetric_pinv(&gram.view(), &rhs.view()),
        Err(e) => Err(e),
    }
}

/// Leading eigenpair of a symmetric matrix.
pub struct LeadingEigen<F> {
    /// Largest (algebraic) eigenvalue estimate.
    pub value: F,
    /// Unit-norm eigenvector estimate.
    pub vector: Array1<F>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest-eigenvalue power iteration with a Gershgorin shift.
///
/// The shift makes the iterated matrix PSD so the dominant eigenvalue in
/// magnitude is the algebraically largest one of the input. The default
/// start vector is 1/√d, which keeps the whole routine equivariant under
/// coordinate permutations.
pub fn leading_eigen_sym<F: Real>(
    m: &ArrayView2<F>,
    tol: F,
    max_iter: usize,
    init: Option<&ArrayView1<F>>,
) -> Result<LeadingEigen<F>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(
            "leading_eigen_sym: matrix must be square".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("leading_eigen_sym: empty matrix".into()));
    }
    // Gershgorin lower bound on the spectrum.
    let mut lower = F::infinity();
    for i in 0..n {
        let mut radius = F::zero();
        for j in 0..n {
            if j != i {
                radius = radius + m[[i, j]].abs();
            }
        }
        let lo = m[[i, i]] - radius;
        if lo < lower {
            lower = lo;
        }
    }
    let shift = if lower < F::zero() { -lower } else { F::zero() };

    let mut v = match init {
        Some(v0) => {
            let norm = v0.dot(v0).sqrt();
            if norm == F::zero() {
                return Err(Error::InvalidParameter(
                    "leading_eigen_sym: zero start vector".into(),
                ));
            }
            v0.mapv(|x| x / norm)
        }
        None => Array1::from_elem(n, F::one() / F::cast(n as f64).sqrt()),
    };

    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut w = m.dot(&v);
        if shift > F::zero() {
            w.zip_mut_with(&v, |wi, &vi| *wi = *wi + shift * vi);
        }
        let norm = w.dot(&w).sqrt();
        if norm == F::zero() {
            // Input annihilates the iterate; spectrum is {0} on this subspace.
            return Ok(LeadingEigen {
                value: F::zero(),
                vector: v,
                iterations,
                converged: true,
            });
        }
        w.mapv_inplace(|x| x / norm);
        let delta = (&w - &v).mapv(|x| x * x).sum().sqrt();
        v = w;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let value = v.dot(&m.dot(&v));
    Ok(LeadingEigen {
        value,
        vector: v,
        iterations,
        converged,
    })
}
