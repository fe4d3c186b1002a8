//! Spiked covariance model: the planted sparse direction, the population
//! covariance I + θuuᵀ, and the closed-form linear-model quantities (β*, σ²,
//! signal strength, design eigenvalues) that the detector analysis rests on.
//!
//! Coordinate convention: "deleting" coordinate `i` removes that entry and
//! shifts every index greater than `i` down by one. All closed forms have a
//! dense linear-algebra cross-check used by the self-test suite.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::cholesky_solve;
use crate::num::Real;
use crate::{Error, Result};

const UNIT_NORM_TOL: f64 = 1e-12;

/// Unit-norm sparse direction with an explicit support.
#[derive(Debug, Clone)]
pub struct Spike<F> {
    u: Array1<F>,
    support: Vec<usize>,
}

impl<F: Real> Spike<F> {
    /// Validates unit norm, exact zeros off support, and a strictly
    /// increasing in-range support.
    pub fn new(u: Array1<F>, support: Vec<usize>) -> Result<Self> {
        let d = u.len();
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "spike support must be strictly increasing".into(),
            ));
        }
        if support.iter().any(|&i| i >= d) {
            return Err(Error::InvalidParameter(
                "spike support index out of range".into(),
            ));
        }
        let mut on_support = vec![false; d];
        for &i in &support {
            on_support[i] = true;
        }
        for (i, &v) in u.iter().enumerate() {
            if !on_support[i] && v != F::zero() {
                return Err(Error::InvalidParameter(format!(
                    "spike entry {i} is nonzero but off support"
                )));
            }
        }
        let norm = u.dot(&u).sqrt();
        // 1e-12 at f64; scaled up to what the scalar can represent at f32.
        let tol = F::cast(UNIT_NORM_TOL).max(F::epsilon() * F::cast(64.0));
        if (norm - F::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "spike norm {norm} deviates from 1 beyond {}",
                tol.to_f64_lossy()
            )));
        }
        Ok(Self { u, support })
    }

    pub fn dimension(&self) -> usize {
        self.u.len()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn entries(&self) -> ArrayView1<'_, F> {
        self.u.view()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn on_support(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }
}

/// How to draw the planted direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeMode {
    /// 1/√k on the first k coordinates; deterministic.
    Uniform,
    /// ±1/√k on a uniformly random size-k support.
    RandomSigns,
    /// Uniform point of the (k−1)-sphere embedded at a random size-k support.
    RandomSphere,
}

impl SpikeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "random_signs" => Ok(Self::RandomSigns),
            "random_sphere" => Ok(Self::RandomSphere),
            other => Err(Error::UnknownName(format!("spike mode '{other}'"))),
        }
    }
}

/// Draw a unit-norm k-sparse spike in dimension `d`.
pub fn make_spike<F: Real>(d: usize, k: usize, mode: SpikeMode, seed: u64) -> Result<Spike<F>> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "spike sparsity k={k} must satisfy 1 <= k <= d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = F::one() / F::cast(k as f64).sqrt();
    let mut u = Array1::<F>::zeros(d);
    let support: Vec<usize> = match mode {
        SpikeMode::Uniform => {
            let support: Vec<usize> = (0..k).collect();
            for &i in &support {
                u[i] = magnitude;
            }
            support
        }
        SpikeMode::RandomSigns => {
            let support = sample_support(&mut rng, d, k);
            for &i in &support {
                u[i] = if rng.gen::<bool>() { magnitude } else { -magnitude };
            }
            support
        }
        SpikeMode::RandomSphere => {
            let support = sample_support(&mut rng, d, k);
            let mut g = vec![F::zero(); k];
            let mut norm_sq = F::zero();
            // A zero draw has probability zero but would break normalization.
            while norm_sq == F::zero() {
                for v in g.iter_mut() {
                    *v = F::standard_normal(&mut rng);
                }
                norm_sq = g.iter().map(|&v| v * v).sum();
            }
            let norm = norm_sq.sqrt();
            for (slot, &i) in support.iter().enumerate() {
                u[i] = g[slot] / norm;
            }
            support
        }
    };
    Spike::new(u, support)
}

/// Uniformly random size-k subset of {0..d-1}, returned sorted.
fn sample_support<R: Rng>(rng: &mut R, d: usize, k: usize) -> Vec<usize> {
    let mut support = rand::seq::index::sample(rng, d, k).into_vec();
    support.sort_unstable();
    support
}

/// Mass conditions on the spike entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeCondition {
    /// At least one coordinate has c²/k <= uᵢ² <= 1 − c²/k.
    C1,
    /// Every support coordinate has |uᵢ| >= c/√k.
    C2,
}

/// Check C1 or C2 with constant `c_min`.
pub fn check_condition<F: Real>(spike: &Spike<F>, c_min: F, which: SpikeCondition) -> bool {
    let k = F::cast(spike.sparsity() as f64);
    match which {
        SpikeCondition::C1 => {
            let lo = c_min * c_min / k;
            let hi = F::one() - lo;
            spike.u.iter().any(|&v| {
                let sq = v * v;
                sq >= lo && sq <= hi
            })
        }
        SpikeCondition::C2 => {
            let bound = c_min / k.sqrt();
            spike.support.iter().all(|&i| spike.u[i].abs() >= bound)
        }
    }
}

/// The full generative model: X ~ N(0, I_d + θuuᵀ).
#[derive(Debug, Clone)]
pub struct SpikedModel<F> {
    d: usize,
    k: usize,
    theta: F,
    spike: Spike<F>,
}

impl<F: Real> SpikedModel<F> {
    /// θ may exceed 1 (the experiments use θ = 3, 4); `theory_regime`
    /// reports whether the θ <= 1 analysis applies. θ = 0 is the null model.
    pub fn new(d: usize, k: usize, theta: F, spike: Spike<F>) -> Result<Self> {
        if spike.dimension() != d {
            return Err(Error::DimensionMismatch(format!(
                "spike dimension {} does not match d={d}",
                spike.dimension()
            )));
        }
        if k == 0 || k > d {
            return Err(Error::InvalidParameter(format!(
                "sparsity k={k} must satisfy 1 <= k <= d={d}"
            )));
        }
        if spike.sparsity() > k {
            return Err(Error::InvalidParameter(format!(
                "spike has {} nonzeros, more than k={k}",
                spike.sparsity()
            )));
        }
        if !(theta >= F::zero()) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "signal strength theta={theta} must be finite and >= 0"
            )));
        }
        Ok(Self { d, k, theta, spike })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn sparsity(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    pub fn spike(&self) -> &Spike<F> {
        &self.spike
    }

    /// True when θ <= 1, the regime the tail bounds are stated for.
    pub fn theory_regime(&self) -> bool {
        self.theta <= F::one()
    }
}

/// Population covariance I_d + θuuᵀ.
pub fn population_covariance<F: Real>(model: &SpikedModel<F>) -> Array2<F> {
    let d = model.d;
    let u = &model.spike.u;
    let theta = model.theta;
    let mut sigma = Array2::<F>::eye(d);
    for &i in model.spike.support() {
        for &j in model.spike.support() {
            sigma[[i, j]] = sigma[[i, j]] + theta * u[i] * u[j];
        }
    }
    sigma
}

/// Copy of `v` with coordinate `i` removed (indices above `i` shift down).
pub fn delete_coordinate<F: Real>(v: &ArrayView1<F>, i: usize) -> Array1<F> {
    Array1::from_iter(
        v.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &x)| x),
    )
}

/// Closed-form description of the regression y = X₋ᵢ β* + w induced by
/// treating column `i` as the response.
#[derive(Debug, Clone)]
pub struct LinearModelOracle<F> {
    pub target_index: usize,
    /// Length d−1, indexed in the deleted-coordinate convention.
    pub beta_star: Array1<F>,
    /// Residual noise variance of the response given the other coordinates.
    pub sigma_sq: F,
    /// (β*)ᵀ Σ₋ᵢ β*, the population gain the Q statistic detects.
    pub signal: F,
}

/// Closed-form β*, σ², and signal for coordinate `i`.
///
/// Off support these are (0, 1, 0): the response is independent noise.
pub fn lmmse_oracle<F: Real>(model: &SpikedModel<F>, i: usize) -> Result<LinearModelOracle<F>> {
    let d = model.d;
    if i >= d {
        return Err(Error::InvalidParameter(format!(
            "coordinate {i} out of range for d={d}"
        )));
    }
    let u = &model.spike.u;
    let theta = model.theta;
    if !model.spike.on_support(i) || theta == F::zero() {
        return Ok(LinearModelOracle {
            target_index: i,
            beta_star: Array1::zeros(d - 1),
            sigma_sq: F::one(),
            signal: F::zero(),
        });
    }
    let ui = u[i];
    let ui_sq = ui * ui;
    let denom = F::one() + (F::one() - ui_sq) * theta;
    let coef = theta * ui / denom;
    let u_rest = delete_coordinate(&u.view(), i);
    let beta_star = u_rest.mapv(|x| coef * x);
    let sigma_sq = F::one() + theta * ui_sq / denom;
    let signal = theta * theta * ui_sq * (F::one() - ui_sq) / denom;
    Ok(LinearModelOracle {
        target_index: i,
        beta_star,
        sigma_sq,
        signal,
    })
}

/// Dense-solver cross-check of [`lmmse_oracle`].
///
/// Recomputes β* = (Σ₋ᵢ)⁻¹ Σ₋ᵢ,ᵢ and σ² = Σᵢᵢ − Σᵢ,₋ᵢ(Σ₋ᵢ)⁻¹Σ₋ᵢ,ᵢ by a
/// direct SPD solve and returns the oracle together with the largest
/// absolute deviation observed across β*, σ², and the signal term.
pub fn lmmse_oracle_checked<F: Real>(
    model: &SpikedModel<F>,
    i: usize,
) -> Result<(LinearModelOracle<F>, F)> {
    let oracle = lmmse_oracle(model, i)?;
    let sigma = population_covariance(model);
    let d = model.d;
    // Σ with row/column i deleted, and the deleted column as RHS.
    let mut sub = Array2::<F>::zeros((d - 1, d - 1));
    let mut cross = Array1::<F>::zeros(d - 1);
    let mut r = 0usize;
    for a in 0..d {
        if a == i {
            continue;
        }
        cross[r] = sigma[[a, i]];
        let mut c = 0usize;
        for b in 0..d {
            if b == i {
                continue;
            }
            sub[[r, c]] = sigma[[a, b]];
            c += 1;
        }
        r += 1;
    }
    let beta_numeric = cholesky_solve(&sub.view(), &cross.view())?;
    let sigma_sq_numeric = sigma[[i, i]] - cross.dot(&beta_numeric);
    let signal_numeric = beta_numeric.dot(&sub.dot(&beta_numeric));

    let mut dev = (oracle.sigma_sq - sigma_sq_numeric).abs();
    let sig_dev = (oracle.signal - signal_numeric).abs();
    if sig_dev > dev {
        dev = sig_dev;
    }
    for j in 0..d - 1 {
        let e = (oracle.beta_star[j] - beta_numeric[j]).abs();
        if e > dev {
            dev = e;
        }
    }
    Ok((oracle, dev))
}

/// (I + c·vvᵀ)⁻¹ in closed form: I − (c/(1 + c·vᵀv))·vvᵀ.
pub fn sherman_morrison_inverse<F: Real>(v: &ArrayView1<F>, c: F) -> Result<Array2<F>> {
    let n = v.len();
    let vtv = v.dot(v);
    let denom = F::one() + c * vtv;
    if denom == F::zero() || !denom.is_finite() {
        return Err(Error::Singular(
            "sherman_morrison_inverse: 1 + c·vᵀv vanishes".into(),
        ));
    }
    let scale = c / denom;
    let mut inv = Array2::<F>::eye(n);
    for i in 0..n {
        for j in 0..n {
            inv[[i, j]] = inv[[i, j]] - scale * v[i] * v[j];
        }
    }
    Ok(inv)
}

/// Extreme eigenvalues (λ_min, λ_max) of the design covariance
/// I_{d−1} + θ·u₋ᵢu₋ᵢᵀ, i.e. (1, 1 + θ(1 − uᵢ²)).
pub fn design_eigenvalues<F: Real>(model: &SpikedModel<F>, i: usize) -> Result<(F, F)> {
    if i >= model.d {
        return Err(Error::InvalidParameter(format!(
            "coordinate {i} out of range for d={}",
            model.d
        )));
    }
    let ui = model.spike.u[i];
    let lam_max = F::one() + model.theta * (F::one() - ui * ui);
    Ok((F::one(), lam_max))
}
