//! Exhaustive best-subset regression: enumerate every size-k support,
//! least-squares on each, keep the global residual minimizer.
//!
//! With the Gram matrix precomputed once, each support costs only a k×k
//! solve: the residual is ‖y‖² − cₛᵀβₛ at the least-squares optimum, so
//! maximizing the explained term is enough. Supports are visited in
//! lexicographic order and only strict improvements are accepted, which
//! pins ties to the lexicographically smallest support.

use ndarray::Array1;

use crate::num::Real;
use crate::slr::{RegressionInstance, SparseCoefficients};
use crate::{Error, Result};

const MAX_SUPPORTS: u128 = 1_000_000;

/// Binomial coefficient with overflow reporting.
pub fn combination_count(p: usize, k: usize) -> Option<u128> {
    if k > p {
        return Some(0);
    }
    let k = k.min(p - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((p - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Visit all size-k subsets of {0..p-1} in lexicographic order.
pub(crate) fn for_each_combination<C: FnMut(&[usize])>(p: usize, k: usize, mut visit: C) {
    if k == 0 || k > p {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + p - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// In-place Cholesky solve of the k×k system `g x = rhs` stored row-major.
/// Returns false if the block is not positive definite.
fn solve_small_spd<F: Real>(g: &mut [F], rhs: &mut [F], k: usize) -> bool {
    // Factor g = L Lᵀ in the lower triangle.
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[i * k + j];
            for t in 0..j {
                s = s - g[i * k + t] * g[j * k + t];
            }
            if i == j {
                if s <= F::zero() {
                    return false;
                }
                g[i * k + j] = s.sqrt();
            } else {
                g[i * k + j] = s / g[j * k + j];
            }
        }
    }
    for i in 0..k {
        let mut s = rhs[i];
        for t in 0..i {
            s = s - g[i * k + t] * rhs[t];
        }
        rhs[i] = s / g[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for t in i + 1..k {
            s = s - g[t * k + i] * rhs[t];
        }
        rhs[i] = s / g[i * k + i];
    }
    true
}

/// Exact ℓ0-constrained least squares by support enumeration.
///
/// Guarded: errors when C(p, k) exceeds 10⁶. Singular Gram blocks (e.g.
/// duplicated columns) fall back to a pseudoinverse solve for that support.
pub fn solve_l0_exact<F: Real>(instance: &RegressionInstance<F>) -> Result<SparseCoefficients<F>> {
    let (p, k) = (instance.p(), instance.k);
    match combination_count(p, k) {
        Some(c) if c <= MAX_SUPPORTS => {}
        _ => {
            return Err(Error::Capacity(format!(
                "exhaustive search over C({p},{k}) supports exceeds the 10^6 cap"
            )))
        }
    }

    let gram = instance.x.t().dot(&instance.x);
    let corr = instance.x.t().dot(&instance.y);

    let mut best_gain = F::neg_infinity();
    let mut best_support: Vec<usize> = Vec::new();
    let mut best_coefs: Vec<F> = Vec::new();

    let mut block = vec![F::zero(); k * k];
    let mut rhs = vec![F::zero(); k];
    for_each_combination(p, k, |support| {
        for (a, &i) in support.iter().enumerate() {
            rhs[a] = corr[i];
            for (b, &j) in support.iter().enumerate() {
                block[a * k + b] = gram[[i, j]];
            }
        }
        let solved = solve_small_spd(&mut block, &mut rhs, k);
        if !solved {
            // Rank-deficient block: minimum-norm solve via the eigen path.
            let mut g = ndarray::Array2::<F>::zeros((k, k));
            let mut c = Array1::<F>::zeros(k);
            for (a, &i) in support.iter().enumerate() {
                c[a] = corr[i];
                for (b, &j) in support.iter().enumerate() {
                    g[[a, b]] = gram[[i, j]];
                }
            }
            match crate::linalg::solve_symmetric_pinv(&g.view(), &c.view()) {
                Ok(solution) => {
                    for (slot, v) in rhs.iter_mut().zip(solution.iter()) {
                        *slot = *v;
                    }
                }
                Err(_) => return,
            }
        }
        // Explained sum of squares on this support.
        let mut gain = F::zero();
        for (a, &i) in support.iter().enumerate() {
            gain = gain + corr[i] * rhs[a];
        }
        if gain > best_gain {
            best_gain = gain;
            best_support = support.to_vec();
            best_coefs = rhs[..k].to_vec();
        }
    });

    let mut beta = Array1::<F>::zeros(p);
    for (a, &j) in best_support.iter().enumerate() {
        beta[j] = best_coefs[a];
    }
    Ok(SparseCoefficients::from_candidates(
        &beta.view(),
        &best_support,
    ))
}
