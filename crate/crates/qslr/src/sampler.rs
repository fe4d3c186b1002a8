//! Deterministic seeded sampling from the null and spiked models, diagonal
//! rescaling, and the empirical covariance.
//!
//! The population mean is assumed to be zero everywhere: no centering is
//! performed, and second moments are taken around zero. Feeding real data
//! through these routines would require centering first.
//!
//! Reproducibility contract: every draw is a pure function of its `(params,
//! seed)` arguments, using ChaCha8 so streams are identical across platforms.
//! Parallel trial runners derive per-trial seeds with [`derive_seed`], which
//! makes results independent of scheduling.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::SpikedModel;
use crate::num::Real;
use crate::{Error, Result};

/// SplitMix64 finalizer, used to spread trial indices into seed space.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for sub-stream `tag` of `base`: `base XOR splitmix64(tag)`.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    base ^ splitmix64(tag)
}

/// n×d matrix of samples, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix<F> {
    data: Array2<F>,
}

impl<F: Real> SampleMatrix<F> {
    pub fn from_array(data: Array2<F>) -> Result<Self> {
        if data.nrows() < 1 || data.ncols() < 2 {
            return Err(Error::InvalidParameter(format!(
                "sample matrix must be at least 1x2, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(
                "sample matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<F> {
        &self.data
    }

    pub fn column(&self, i: usize) -> Array1<F> {
        self.data.column(i).to_owned()
    }

    /// Dump as CSV: one sample per line, '.' decimal separator, no header.
    /// Values are written in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.data.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{}", v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Parse the format produced by [`Self::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<Vec<F>> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<F> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map(F::cast)
                        .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Config(format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Config("empty sample matrix file".into()));
        }
        let n = rows.len();
        let d = rows[0].len();
        let data = Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
            .expect("shape checked above");
        Self::from_array(data)
    }
}

/// Draw `n` samples from N(0, I + θuuᵀ).
///
/// Each row is g + √θ·ξ·u with g ~ N(0, I_d) and an independent scalar
/// ξ ~ N(0,1), so the covariance is exact by construction. Per row, the d
/// entries of g are drawn first, then ξ.
pub fn sample_spiked<F: Real>(model: &SpikedModel<F>, n: usize, seed: u64) -> Result<SampleMatrix<F>> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let d = model.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt_theta = model.theta().sqrt();
    let u = model.spike().entries();
    let support = model.spike().support();
    let mut data = Array2::<F>::zeros((n, d));
    for mut row in data.rows_mut() {
        for x in row.iter_mut() {
            *x = F::standard_normal(&mut rng);
        }
        let xi = F::standard_normal(&mut rng);
        let scale = sqrt_theta * xi;
        for &j in support {
            row[j] = row[j] + scale * u[j];
        }
    }
    SampleMatrix::from_array(data)
}

/// Draw `n` samples from the isotropic null N(0, I_d).
pub fn sample_null<F: Real>(d: usize, n: usize, seed: u64) -> Result<SampleMatrix<F>> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if d < 2 {
        return Err(Error::InvalidParameter("need dimension >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Array2::<F>::zeros((n, d));
    for x in data.iter_mut() {
        *x = F::standard_normal(&mut rng);
    }
    SampleMatrix::from_array(data)
}

/// Column rescaling policy.
#[derive(Debug, Clone)]
pub enum Rescale<F> {
    /// Multiply column i by `scales[i]`; all scales must be positive.
    Scales(Vec<F>),
    /// Divide each column by its zero-mean sample standard deviation, i.e.
    /// by √((1/n)Σₜ xₜᵢ²), so every column's second moment becomes 1.
    UnitVariance,
}

/// Apply a diagonal rescaling to the columns.
pub fn rescale_columns<F: Real>(x: &SampleMatrix<F>, how: &Rescale<F>) -> Result<SampleMatrix<F>> {
    let d = x.d();
    let n_inv = F::one() / F::cast(x.n() as f64);
    let scales: Vec<F> = match how {
        Rescale::Scales(s) => {
            if s.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "expected {d} scales, got {}",
                    s.len()
                )));
            }
            if let Some(bad) = s.iter().find(|&&v| !(v > F::zero()) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "column scales must be positive and finite, got {bad}"
                )));
            }
            s.clone()
        }
        Rescale::UnitVariance => {
            let mut scales = Vec::with_capacity(d);
            for j in 0..d {
                let second_moment =
                    x.data.column(j).iter().map(|&v| v * v).sum::<F>() * n_inv;
                if second_moment == F::zero() {
                    return Err(Error::DegenerateInput(format!(
                        "column {j} has zero variance; cannot rescale to unit variance"
                    )));
                }
                scales.push(F::one() / second_moment.sqrt());
            }
            scales
        }
    };
    let mut data = x.data.clone();
    for (j, &s) in scales.iter().enumerate() {
        data.column_mut(j).mapv_inplace(|v| v * s);
    }
    SampleMatrix::from_array(data)
}

/// Empirical covariance (1/n)XᵀX around the known zero mean, symmetrized
/// exactly as (M + Mᵀ)/2.
pub fn empirical_covariance<F: Real>(x: &SampleMatrix<F>) -> Array2<F> {
    let n_inv = F::one() / F::cast(x.n() as f64);
    let mut m = x.data.t().dot(&x.data);
    m.mapv_inplace(|v| v * n_inv);
    crate::linalg::symmetrize(&mut m);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_spike, population_covariance, SpikeMode, SpikedModel};
    use approx::assert_abs_diff_eq;

    fn uniform_model(d: usize, k: usize, theta: f64) -> SpikedModel<f64> {
        let spike = make_spike(d, k, SpikeMode::Uniform, 0).unwrap();
        SpikedModel::new(d, k, theta, spike).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = uniform_model(3, 2, 0.5);
        let a = sample_spiked(&m, 5, 42).unwrap();
        let b = sample_spiked(&m, 5, 42).unwrap();
        assert_eq!(a.data(), b.data());

        let a = sample_null::<f64>(3, 2, 0).unwrap();
        let b = sample_null::<f64>(3, 2, 0).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn null_moments() {
        let n = 100_000;
        let d = 6;
        let x = sample_null::<f64>(d, n, 7).unwrap();
        for j in 0..d {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.02, "column {j} mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "column {j} variance {var}");
        }
    }

    #[test]
    fn spiked_covariance_matches_population() {
        let m = uniform_model(8, 4, 1.0);
        let n = 100_000;
        let x = sample_spiked(&m, n, 3).unwrap();
        let emp = empirical_covariance(&x);
        let pop = population_covariance(&m);
        for i in 0..8 {
            for j in 0..8 {
                assert!(
                    (emp[[i, j]] - pop[[i, j]]).abs() < 0.05,
                    "entry ({i},{j}): {} vs {}",
                    emp[[i, j]],
                    pop[[i, j]]
                );
            }
        }
    }

    #[test]
    fn theta_zero_matches_null_distribution() {
        let m = uniform_model(5, 3, 0.0);
        let n = 100_000;
        let spiked = sample_spiked(&m, n, 9).unwrap();
        let null = sample_null::<f64>(5, n, 10).unwrap();
        for j in 0..5 {
            let mean_s = spiked.column(j).sum() / n as f64;
            let mean_0 = null.column(j).sum() / n as f64;
            assert!((mean_s - mean_0).abs() < 0.02);
            let var_s = spiked.column(j).iter().map(|v| v * v).sum::<f64>() / n as f64;
            let var_0 = null.column(j).iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((var_s - var_0).abs() < 0.05);
        }
    }

    #[test]
    fn rescale_identity() {
        let x = sample_null::<f64>(4, 10, 1).unwrap();
        let y = rescale_columns(&x, &Rescale::Scales(vec![1.0; 4])).unwrap();
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn rescale_unit_variance_forces_ones() {
        let m = uniform_model(6, 3, 4.0);
        let x = sample_spiked(&m, 500, 2).unwrap();
        let y = rescale_columns(&x, &Rescale::UnitVariance).unwrap();
        let n = y.n() as f64;
        let mut diag = Vec::new();
        for j in 0..6 {
            let var = y.column(j).iter().map(|v| v * v).sum::<f64>() / n;
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
            diag.push(var);
        }
        let max = diag.iter().cloned().fold(f64::MIN, f64::max);
        let min = diag.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 1e-12);
    }

    #[test]
    fn rescale_round_trip() {
        let x = sample_null::<f64>(5, 50, 4).unwrap();
        let scales: Vec<f64> = (0..5).map(|j| 0.5 + 0.3 * j as f64).collect();
        let inverse: Vec<f64> = scales.iter().map(|s| 1.0 / s).collect();
        let y = rescale_columns(&x, &Rescale::Scales(scales)).unwrap();
        let z = rescale_columns(&y, &Rescale::Scales(inverse)).unwrap();
        for (a, b) in x.data().iter().zip(z.data().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rescale_rejects_bad_input() {
        let x = sample_null::<f64>(3, 10, 5).unwrap();
        assert!(matches!(
            rescale_columns(&x, &Rescale::Scales(vec![1.0, -1.0, 1.0])),
            Err(Error::InvalidParameter(_))
        ));

        let zero_col =
            SampleMatrix::from_array(Array2::from_shape_fn((4, 3), |(i, j)| {
                if j == 1 { 0.0 } else { (i + j) as f64 + 1.0 }
            }))
            .unwrap();
        assert!(matches!(
            rescale_columns(&zero_col, &Rescale::UnitVariance),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn empirical_covariance_single_row() {
        let row = vec![1.0, -2.0, 3.0];
        let x = SampleMatrix::from_array(
            Array2::from_shape_vec((1, 3), row.clone()).unwrap(),
        )
        .unwrap();
        let cov = empirical_covariance(&x);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(cov[[i, j]], row[i] * row[j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn empirical_covariance_exactly_symmetric() {
        let x = sample_null::<f64>(7, 64, 8).unwrap();
        let cov = empirical_covariance(&x);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(cov[[i, j]], cov[[j, i]]);
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = uniform_model(4, 2, 2.5);
        let x = sample_spiked(&m, 9, 77).unwrap();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let back = SampleMatrix::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(x.data(), back.data());
    }

    #[test]
    fn derive_seed_spreads_trials() {
        let base = 12345;
        let a = derive_seed(base, 0);
        let b = derive_seed(base, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(base, 0));
    }
}
