//! Built-in self-checks behind the `verify` CLI subcommand: analytic
//! oracles against dense linear algebra, the chi-squared null law of n·Q,
//! solver sanity (KKT, ℓ0 dominance, OMP recovery), and CSV determinism.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::detect::coordinate_instance;
use crate::harness::{run_recovery_experiment, ExperimentConfig, ExperimentKind};
use crate::linalg::symmetric_eigen;
use crate::model::{
    delete_coordinate, design_eigenvalues, lmmse_oracle_checked, make_spike,
    sherman_morrison_inverse, SpikeMode, SpikedModel,
};
use crate::sampler::{derive_seed, sample_null};
use crate::slr::{
    solve_l0_exact, solve_omp, solve_thresholded_lasso, FixedSupportLeastSquares,
    RegressionInstance, SlrSolver,
};
use crate::Result;

/// Outcome of one named self-check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Kolmogorov–Smirnov distance between a sample and a reference CDF.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = (f - (i as f64 + 1.0) / n).abs();
        worst = worst.max(lo).max(hi);
    }
    worst
}

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
pub fn chi_squared_cdf(x: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("valid dof").cdf(x)
}

/// Draw `trials` samples of n·Q under the null with the fixed-support
/// least-squares solver, whose exact law is chi-squared with k degrees of
/// freedom.
pub fn null_nq_samples(
    n: usize,
    d: usize,
    k: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    let solver = FixedSupportLeastSquares::new((0..k).collect())?;
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let x = sample_null::<f64>(d, n, derive_seed(base_seed, t as u64))?;
        let instance = coordinate_instance(&x, 0, k)?;
        let beta = SlrSolver::<f64>::solve(&solver, &instance)?;
        let zero = crate::slr::SparseCoefficients::<f64>::zeros(instance.p());
        let y_sq = zero.residual_sq_norm(&instance.y.view(), &instance.x.view());
        let res_sq = beta.residual_sq_norm(&instance.y.view(), &instance.x.view());
        out.push(y_sq - res_sq);
    }
    Ok(out)
}

fn check_analytic_oracles(seed: u64) -> CheckOutcome {
    let mut worst = 0.0f64;
    let models = 25;
    for m in 0..models {
        let s = derive_seed(seed, m);
        let d = 8 + (s % 20) as usize;
        let k = 1 + (s % 6) as usize;
        let k = k.min(d - 1);
        let theta = 0.05 + 0.9 * ((s % 11) as f64 / 11.0);
        let mode = [SpikeMode::Uniform, SpikeMode::RandomSigns, SpikeMode::RandomSphere]
            [(s % 3) as usize];
        let spike = match make_spike::<f64>(d, k, mode, s) {
            Ok(v) => v,
            Err(e) => return CheckOutcome::new("analytic_oracles", false, e.to_string()),
        };
        let model = match SpikedModel::new(d, k, theta, spike) {
            Ok(v) => v,
            Err(e) => return CheckOutcome::new("analytic_oracles", false, e.to_string()),
        };
        for i in 0..d {
            match lmmse_oracle_checked(&model, i) {
                Ok((_, dev)) => worst = worst.max(dev),
                Err(e) => return CheckOutcome::new("analytic_oracles", false, e.to_string()),
            }
        }
        // Eigenvalue oracle against the dense eigensolver for one support
        // coordinate per model.
        let i = model.spike().support()[0];
        let u_rest = delete_coordinate(&model.spike().entries(), i);
        let mut a = ndarray::Array2::<f64>::eye(d - 1);
        for r in 0..d - 1 {
            for c in 0..d - 1 {
                a[[r, c]] += theta * u_rest[r] * u_rest[c];
            }
        }
        let eig = match symmetric_eigen(&a.view()) {
            Ok(v) => v,
            Err(e) => return CheckOutcome::new("analytic_oracles", false, e.to_string()),
        };
        let (lo, hi) = design_eigenvalues(&model, i).expect("in range");
        worst = worst.max((eig.values[0] - lo).abs());
        worst = worst.max((eig.values[d - 2] - hi).abs());
    }
    CheckOutcome::new(
        "analytic_oracles",
        worst < 1e-10,
        format!("max deviation {worst:.3e} over {models} models (tolerance 1e-10)"),
    )
}

fn check_sherman_morrison(seed: u64) -> CheckOutcome {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = 5 + rng.gen_range(0..10);
        let v = ndarray::Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
        let c: f64 = rng.gen_range(0.0..2.0);
        let inv = match sherman_morrison_inverse(&v.view(), c) {
            Ok(m) => m,
            Err(e) => return CheckOutcome::new("sherman_morrison", false, e.to_string()),
        };
        let mut m = ndarray::Array2::<f64>::eye(n);
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] += c * v[i] * v[j];
            }
        }
        let prod = m.dot(&inv);
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[[i, j]] - expected).abs());
            }
        }
    }
    CheckOutcome::new(
        "sherman_morrison",
        worst < 1e-12,
        format!("max |M·M⁻¹ − I| = {worst:.3e} (tolerance 1e-12)"),
    )
}

fn check_chi_squared_null(seed: u64) -> CheckOutcome {
    let (n, d, k, trials) = (500, 30, 5, 1000);
    match null_nq_samples(n, d, k, trials, seed) {
        Ok(mut samples) => {
            let ks = ks_distance(&mut samples, |x| chi_squared_cdf(x, k as f64));
            CheckOutcome::new(
                "chi_squared_null",
                ks < 0.05,
                format!("KS distance to chi²({k}) = {ks:.4} over {trials} trials (bound 0.05)"),
            )
        }
        Err(e) => CheckOutcome::new("chi_squared_null", false, e.to_string()),
    }
}

fn check_lasso_kkt(seed: u64) -> CheckOutcome {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let lambda = 0.05;
    let tol = 1e-8;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (n, p) = (40, 12);
        let x = ndarray::Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let y = ndarray::Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
        let fit = match crate::slr::lasso_coordinate_descent(&y.view(), &x.view(), lambda, tol, 5000)
        {
            Ok(f) => f,
            Err(e) => return CheckOutcome::new("lasso_kkt", false, e.to_string()),
        };
        let r = &y - &x.dot(&fit.beta);
        for j in 0..p {
            let grad = x.column(j).dot(&r) / n as f64;
            let b = fit.beta[j];
            let violation = if b != 0.0 {
                (grad - lambda * b.signum()).abs()
            } else {
                (grad.abs() - lambda).max(0.0)
            };
            worst = worst.max(violation);
        }
    }
    CheckOutcome::new(
        "lasso_kkt",
        worst <= 10.0 * 1e-8,
        format!("max KKT violation {worst:.3e} (tolerance 1e-7)"),
    )
}

fn check_l0_dominance(seed: u64) -> CheckOutcome {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..20 {
        let (n, p, k) = (15, 8, 2);
        let x = ndarray::Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let y = ndarray::Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
        let inst = match RegressionInstance::new(y, x, k) {
            Ok(i) => i,
            Err(e) => return CheckOutcome::new("l0_dominance", false, e.to_string()),
        };
        let l0 = solve_l0_exact(&inst);
        let lasso = solve_thresholded_lasso(&inst, 0.01, 1e-8, 2000);
        let omp = solve_omp(&inst);
        match (l0, lasso, omp) {
            (Ok(a), Ok(b), Ok(c)) => {
                let ra = a.residual_sq_norm(&inst.y.view(), &inst.x.view());
                let rb = b.residual_sq_norm(&inst.y.view(), &inst.x.view());
                let rc = c.residual_sq_norm(&inst.y.view(), &inst.x.view());
                if ra > rb + 1e-9 || ra > rc + 1e-9 {
                    return CheckOutcome::new(
                        "l0_dominance",
                        false,
                        format!("trial {trial}: l0 residual {ra} above lasso {rb} / omp {rc}"),
                    );
                }
            }
            _ => return CheckOutcome::new("l0_dominance", false, "solver failure".into()),
        }
    }
    CheckOutcome::new(
        "l0_dominance",
        true,
        "l0 residual minimal on 20 random instances".into(),
    )
}

fn check_omp_orthogonal_recovery(_seed: u64) -> CheckOutcome {
    let n = 24;
    let p = 6;
    let block = n / p;
    let value = (n as f64 / block as f64).sqrt();
    let mut x = ndarray::Array2::<f64>::zeros((n, p));
    for j in 0..p {
        for r in 0..block {
            x[[j * block + r, j]] = value;
        }
    }
    let mut beta = ndarray::Array1::<f64>::zeros(p);
    beta[1] = 1.5;
    beta[4] = -0.7;
    let y = x.dot(&beta);
    let inst = RegressionInstance::new(y, x, 2).expect("valid");
    match solve_omp(&inst) {
        Ok(out) => {
            let ok = out.support() == [1, 4]
                && (out.beta()[1] - 1.5).abs() < 1e-9
                && (out.beta()[4] + 0.7).abs() < 1e-9;
            CheckOutcome::new(
                "omp_orthogonal_recovery",
                ok,
                format!("recovered support {:?}", out.support()),
            )
        }
        Err(e) => CheckOutcome::new("omp_orthogonal_recovery", false, e.to_string()),
    }
}

fn check_csv_determinism(seed: u64) -> CheckOutcome {
    let mut config = ExperimentConfig::new(ExperimentKind::Recovery);
    config.n = 60;
    config.d = 30;
    config.k_values = vec![3];
    config.trials = 4;
    config.methods = vec!["dt".into(), "qslr".into()];
    config.base_seed = seed;
    let a = run_recovery_experiment(&config).map(|o| o.to_csv());
    let b = run_recovery_experiment(&config).map(|o| o.to_csv());
    match (a, b) {
        (Ok(a), Ok(b)) => CheckOutcome::new(
            "csv_determinism",
            a == b,
            format!("two runs produced {} identical bytes", a.len()),
        ),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::new("csv_determinism", false, e.to_string()),
    }
}

/// Run every self-check and collect the outcomes.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_analytic_oracles(derive_seed(seed, 1)),
        check_sherman_morrison(derive_seed(seed, 2)),
        check_chi_squared_null(derive_seed(seed, 3)),
        check_lasso_kkt(derive_seed(seed, 4)),
        check_l0_dominance(derive_seed(seed, 5)),
        check_omp_orthogonal_recovery(derive_seed(seed, 6)),
        check_csv_determinism(derive_seed(seed, 7)),
    ]
}
