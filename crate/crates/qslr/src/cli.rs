//! Command-line front end.
//!
//! Subcommands: `gen` (dump a sampled matrix), `qtest` (threshold test on a
//! synthetic draw), `recover` (support recovery on a synthetic draw),
//! `bench-recovery` / `bench-testing` (trial-averaged CSV benchmarks), and
//! `verify` (built-in self-checks).
//!
//! Every option can also come from a `--config` file of `key=value` lines;
//! explicit flags win. Exit codes: 0 success, 1 parameter/usage error,
//! 2 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::detect::{hypothesis_test_diagnostic, recover_topk, support_recovery};
use crate::harness::config::{parse_config_text, parse_name_list, parse_usize_list};
use crate::harness::{
    run_recovery_experiment, run_testing_experiment, ExperimentConfig, ExperimentKind,
};
use crate::model::{make_spike, SpikeMode, SpikedModel};
use crate::sampler::{derive_seed, rescale_columns, sample_null, sample_spiked, Rescale};
use crate::slr::{solver_by_name, LambdaRule, SolverConfig};
use crate::{Error, Result};

const TAG_SPIKE: u64 = 1;
const TAG_DATA: u64 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qslr",
    about = "Sparse PCA via a sparse-regression black box: Q-statistic testing, support \
             recovery, and baseline benchmarks on the spiked covariance model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic dataset and dump it as CSV (one sample per row).
    Gen(CommonOpts),
    /// Run the Q hypothesis test on a synthetic draw and report the decision.
    Qtest(CommonOpts),
    /// Run Q support recovery on a synthetic draw and report the sets.
    Recover(CommonOpts),
    /// Support-recovery benchmark over a sparsity grid; emits CSV rows.
    BenchRecovery(CommonOpts),
    /// Hypothesis-testing benchmark with paired H0/H1 statistics; emits CSV.
    BenchTesting(CommonOpts),
    /// Run the built-in self-checks and print one pass/fail line each.
    Verify(CommonOpts),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// Number of samples per dataset
    #[arg(long)]
    n: Option<usize>,
    /// Ambient dimension
    #[arg(long)]
    d: Option<usize>,
    /// Sparsity; benchmarks accept a comma-separated list (e.g. 5,10,15)
    #[arg(long)]
    k: Option<String>,
    /// Signal strength theta (0 = isotropic null)
    #[arg(long)]
    theta: Option<f64>,
    /// Trials per grid point (benchmarks only)
    #[arg(long)]
    trials: Option<usize>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// SLR solver name: lasso_topk, omp, l0
    #[arg(long)]
    solver: Option<String>,
    /// Lasso penalty: a number, or "plugin" for 4·sigma_hat·sqrt(log d / n)
    #[arg(long)]
    lambda: Option<String>,
    /// Methods, comma-separated (recovery: dt,ct,tpower,qslr; testing: dt,mdp,qslr)
    #[arg(long)]
    method: Option<String>,
    /// Rescale every column to unit variance before analysis
    #[arg(long)]
    rescale: bool,
    /// Output file (benchmarks default to stdout; gen requires it)
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Options after merging flags over config-file entries over defaults.
struct Resolved {
    n: usize,
    d: usize,
    k_values: Vec<usize>,
    theta: f64,
    trials: usize,
    seed: u64,
    solver: SolverConfig<f64>,
    methods: Option<Vec<String>>,
    rescale: bool,
    out: Option<PathBuf>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => parse_config_text(&fs::read_to_string(path)?)?,
            None => Default::default(),
        };
        let from_file = |key: &str| file.get(key).cloned();

        let parse_num = |name: &str, text: String| {
            text.parse::<usize>()
                .map_err(|e| Error::Config(format!("bad value for {name}: {e}")))
        };

        let n = match (self.n, from_file("n")) {
            (Some(v), _) => v,
            (None, Some(v)) => parse_num("n", v)?,
            (None, None) => 200,
        };
        let d = match (self.d, from_file("d")) {
            (Some(v), _) => v,
            (None, Some(v)) => parse_num("d", v)?,
            (None, None) => 50,
        };
        let k_values = match (&self.k, from_file("k")) {
            (Some(v), _) => parse_usize_list(v)?,
            (None, Some(v)) => parse_usize_list(&v)?,
            (None, None) => vec![10],
        };
        let theta = match (self.theta, from_file("theta")) {
            (Some(v), _) => v,
            (None, Some(v)) => v
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad value for theta: {e}")))?,
            (None, None) => 3.0,
        };
        let trials = match (self.trials, from_file("trials")) {
            (Some(v), _) => v,
            (None, Some(v)) => parse_num("trials", v)?,
            (None, None) => 20,
        };
        let seed = match (self.seed, from_file("seed")) {
            (Some(v), _) => v,
            (None, Some(v)) => v
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("bad value for seed: {e}")))?,
            (None, None) => 0,
        };
        let lambda_text = self.lambda.clone().or_else(|| from_file("lambda"));
        let lambda = match lambda_text.as_deref() {
            None => LambdaRule::Fixed(0.1),
            Some("plugin") => LambdaRule::ScaledPlugIn { factor: 4.0 },
            Some(text) => LambdaRule::Fixed(text.parse::<f64>().map_err(|e| {
                Error::Config(format!("bad lambda '{text}' (number or \"plugin\"): {e}"))
            })?),
        };
        let solver = SolverConfig {
            name: self
                .solver
                .clone()
                .or_else(|| from_file("solver"))
                .unwrap_or_else(|| "lasso_topk".into()),
            lambda,
            ..SolverConfig::default()
        };
        let methods = self
            .method
            .clone()
            .or_else(|| from_file("method"))
            .map(|m| parse_name_list(&m));
        let rescale = self.rescale
            || matches!(
                from_file("rescale").as_deref(),
                Some("true") | Some("1") | Some("yes")
            );
        let out = self
            .out
            .clone()
            .or_else(|| from_file("out").map(PathBuf::from));

        Ok(Resolved {
            n,
            d,
            k_values,
            theta,
            trials,
            seed,
            solver,
            methods,
            rescale,
            out,
        })
    }
}

impl Resolved {
    fn single_k(&self) -> Result<usize> {
        match self.k_values.as_slice() {
            [k] => Ok(*k),
            _ => Err(Error::InvalidParameter(
                "this subcommand takes a single k".into(),
            )),
        }
    }

    /// Synthetic draw under the configured parameters: spiked when θ > 0,
    /// isotropic null when θ = 0.
    fn draw_dataset(&self, k: usize) -> Result<crate::SampleMatrix64> {
        if k == 0 || k >= self.d {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k < d, got k={k}, d={}",
                self.d
            )));
        }
        let mut x = if self.theta > 0.0 {
            let spike = make_spike::<f64>(
                self.d,
                k,
                SpikeMode::RandomSigns,
                derive_seed(self.seed, TAG_SPIKE),
            )?;
            let model = SpikedModel::new(self.d, k, self.theta, spike)?;
            sample_spiked(&model, self.n, derive_seed(self.seed, TAG_DATA))?
        } else {
            sample_null(self.d, self.n, derive_seed(self.seed, TAG_DATA))?
        };
        if self.rescale {
            x = rescale_columns(&x, &Rescale::UnitVariance)?;
        }
        Ok(x)
    }

    fn experiment_config(&self, kind: ExperimentKind) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(kind);
        config.n = self.n;
        config.d = self.d;
        config.k_values = self.k_values.clone();
        config.theta = self.theta;
        config.trials = self.trials;
        config.solver = self.solver.clone();
        config.rescale = self.rescale;
        config.base_seed = self.seed;
        if let Some(methods) = &self.methods {
            config.methods = methods.clone();
        } else {
            config.methods = match kind {
                ExperimentKind::Recovery => vec![
                    "dt".into(),
                    "ct".into(),
                    "tpower".into(),
                    "qslr".into(),
                ],
                ExperimentKind::Testing => vec!["dt".into(), "mdp".into(), "qslr".into()],
            };
        }
        config
    }
}

fn cmd_gen(opts: &CommonOpts) -> Result<()> {
    let resolved = opts.resolve()?;
    let k = resolved.single_k()?;
    let out = resolved
        .out
        .clone()
        .ok_or_else(|| Error::InvalidParameter("gen requires --out".into()))?;
    let x = resolved.draw_dataset(k)?;
    let file = fs::File::create(&out)?;
    x.write_csv(std::io::BufWriter::new(file))?;
    println!(
        "wrote {}x{} samples to {} (theta={}, k={}, seed={})",
        x.n(),
        x.d(),
        out.display(),
        resolved.theta,
        k,
        resolved.seed
    );
    Ok(())
}

fn cmd_qtest(opts: &CommonOpts) -> Result<()> {
    let resolved = opts.resolve()?;
    let k = resolved.single_k()?;
    let x = resolved.draw_dataset(k)?;
    let solver = solver_by_name(&resolved.solver)?;
    let (decision, report) = hypothesis_test_diagnostic(&x, k, solver.as_ref())?;
    println!("decision: {}", u8::from(decision));
    println!("threshold: {}", report.threshold);
    println!("max_q: {}", report.max_q());
    println!("exceedances: {}/{}", report.exceed_count(), x.d());
    println!("solver: {}", report.solver_name);
    Ok(())
}

fn cmd_recover(opts: &CommonOpts) -> Result<()> {
    let resolved = opts.resolve()?;
    let k = resolved.single_k()?;
    if resolved.theta <= 0.0 {
        return Err(Error::InvalidParameter(
            "recover needs theta > 0 so a spike exists to recover".into(),
        ));
    }
    let spike = make_spike::<f64>(
        resolved.d,
        k,
        SpikeMode::RandomSigns,
        derive_seed(resolved.seed, TAG_SPIKE),
    )?;
    let truth = spike.support().to_vec();
    let model = SpikedModel::new(resolved.d, k, resolved.theta, spike)?;
    let mut x = sample_spiked(&model, resolved.n, derive_seed(resolved.seed, TAG_DATA))?;
    if resolved.rescale {
        x = rescale_columns(&x, &Rescale::UnitVariance)?;
    }
    let solver = solver_by_name(&resolved.solver)?;
    let (thresholded, report) = support_recovery(&x, k, solver.as_ref())?;
    let (topk, _) = recover_topk(&x, k, solver.as_ref())?;
    let overlap = crate::harness::overlap_fraction(&topk, &truth);
    println!("true_support: {truth:?}");
    println!("threshold: {}", report.threshold);
    println!("recovered_by_threshold: {thresholded:?}");
    println!("recovered_topk: {topk:?}");
    println!("topk_overlap_fraction: {overlap}");
    Ok(())
}

fn cmd_bench(opts: &CommonOpts, kind: ExperimentKind) -> Result<()> {
    let resolved = opts.resolve()?;
    let config = resolved.experiment_config(kind);
    let output = match kind {
        ExperimentKind::Recovery => run_recovery_experiment(&config)?,
        ExperimentKind::Testing => run_testing_experiment(&config)?,
    };
    let csv = output.to_csv();
    match &resolved.out {
        Some(path) => {
            fs::write(path, csv)?;
            eprintln!(
                "wrote {} trial rows + {} summary rows to {}",
                output.trial_rows.len(),
                output.summary_rows.len(),
                path.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_verify(opts: &CommonOpts) -> Result<()> {
    let resolved = opts.resolve()?;
    let outcomes = crate::selfcheck::run_all(resolved.seed);
    let mut all_passed = true;
    for outcome in &outcomes {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} — {}", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    if all_passed {
        println!("all {} self-checks passed", outcomes.len());
        Ok(())
    } else {
        Err(Error::Numerical("one or more self-checks failed".into()))
    }
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(opts) => cmd_gen(opts),
        Command::Qtest(opts) => cmd_qtest(opts),
        Command::Recover(opts) => cmd_recover(opts),
        Command::BenchRecovery(opts) => cmd_bench(opts, ExperimentKind::Recovery),
        Command::BenchTesting(opts) => cmd_bench(opts, ExperimentKind::Testing),
        Command::Verify(opts) => cmd_verify(opts),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
