//! `ngca` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ngca::data::{self, ArtificialSpec, Distribution, Relabel};
use ngca::harness::{self, BenchmarkConfig, ExperimentConfig, MethodSettings, RunStatus};
use ngca::{io, plot, Method};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "ngca", version, about = "Non-Gaussian component analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an artificial dataset and write it as CSV.
    Generate(GenerateArgs),
    /// Fit one method on a dataset and write the basis file.
    Fit(FitArgs),
    /// Run the synthetic sweep and write results, summary and condition numbers.
    EvalSynthetic(EvalArgs),
    /// Project a LIBSVM dataset onto each method's subspace.
    ProjectBenchmark(ProjectArgs),
    /// Render plots from a results CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "gauss_mixture")]
    dist: Distribution,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, short)]
    output: PathBuf,
    /// Also write the true index space as a basis file.
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Estimator hyperparameters; each flag overrides the config-file field of
/// the same name.
#[derive(Args, Default)]
struct SettingsArgs {
    #[arg(long, value_delimiter = ',', alias = "sigma_candidates")]
    sigma_candidates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', alias = "lambda_candidates")]
    lambda_candidates: Option<Vec<f64>>,
    #[arg(long, alias = "fold_count")]
    fold_count: Option<usize>,
    #[arg(long, alias = "per_family_count")]
    per_family_count: Option<usize>,
    #[arg(long, alias = "fastica_iters")]
    fastica_iters: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, alias = "basis_count")]
    basis_count: Option<usize>,
    #[arg(long, alias = "min_eigenvalue")]
    min_eigenvalue: Option<f64>,
}

impl SettingsArgs {
    fn apply(&self, s: &mut MethodSettings) {
        if let Some(v) = &self.sigma_candidates {
            s.cv.sigma_candidates = v.clone();
        }
        if let Some(v) = &self.lambda_candidates {
            s.cv.lambda_candidates = v.clone();
        }
        if let Some(v) = self.fold_count {
            s.cv.fold_count = v;
        }
        if let Some(v) = self.per_family_count {
            s.mipp.per_family_count = v;
        }
        if let Some(v) = self.fastica_iters {
            s.mipp.fastica_iters = v;
        }
        if let Some(v) = self.tau {
            s.mipp.tau = v;
        }
        if let Some(v) = self.basis_count {
            s.basis_count = v;
        }
        if let Some(v) = self.min_eigenvalue {
            s.min_eigenvalue = v;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Data file: CSV (optional header) or LIBSVM with `--libsvm`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    libsvm: bool,
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    seed: u64,
    /// Output basis file.
    #[arg(long, short)]
    output: PathBuf,
    /// TOML file with estimator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// TOML file mirroring the experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    distributions: Option<Vec<Distribution>>,
    #[arg(long, value_delimiter = ',', alias = "r_values")]
    r_values: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, alias = "output_dir")]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args)]
struct ProjectArgs {
    /// One or more LIBSVM files; several are concatenated.
    #[arg(long, short, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "none")]
    relabel: Relabel,
    /// Feature count of the input (default: largest index seen).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, alias = "d_target")]
    d_target: usize,
    /// Projection dimension (default: the input feature count).
    #[arg(long)]
    m: Option<usize>,
    /// Samples per split.
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "pca,mipp,lsngca,wf_lsngca")]
    methods: Vec<Method>,
    #[arg(long)]
    seed: u64,
    #[arg(long, alias = "output_dir")]
    output_dir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by eval-synthetic.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, alias = "output_dir")]
    output_dir: PathBuf,
}

fn read_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let (x, truth) = data::make_artificial(&ArtificialSpec {
        dist: a.dist,
        r: a.r,
        n: a.n,
        seed: a.seed,
    })?;
    io::write_csv(&a.output, &data::artificial_header(), &x)?;
    if let Some(path) = a.truth {
        io::write_basis(&path, &truth)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let mut settings: MethodSettings = read_toml(a.config.as_deref())?;
    a.settings.apply(&mut settings);
    let x = if a.libsvm {
        data::load_libsvm(&[a.input.as_path()], None, Relabel::None)?.x
    } else {
        io::read_csv(&a.input)?.1
    };
    let (z, _, _) = ngca::numerics::standardize(&x)?;
    let est = harness::fit_method(a.method, &z, a.m, &settings, a.seed)?;
    io::write_basis(&a.output, est.basis())?;
    Ok(())
}

fn eval_synthetic(a: EvalArgs) -> Result<()> {
    let mut config: ExperimentConfig = read_toml(a.config.as_deref())?;
    config.seed = a.seed;
    if let Some(v) = a.distributions {
        config.distributions = v;
    }
    if let Some(v) = a.r_values {
        config.r_values = v;
    }
    if let Some(v) = a.n {
        config.n = v;
    }
    if let Some(v) = a.methods {
        config.methods = v;
    }
    if let Some(v) = a.seeds {
        config.seeds = v;
    }
    if let Some(v) = a.m {
        config.m = v;
    }
    if let Some(v) = a.output_dir {
        config.output_dir = v;
    }
    let mut settings = config.method_settings();
    a.settings.apply(&mut settings);
    config.cv = settings.cv;
    config.mipp = settings.mipp;
    config.basis_count = settings.basis_count;
    config.min_eigenvalue = settings.min_eigenvalue;

    let outcome = harness::run_synthetic(&config)?;
    for row in &outcome.summary {
        let med = row.median.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<10} {:<14} r={:<4} median={med} ok={}/{}",
            row.method, row.distribution, row.r, row.ok_runs, row.runs
        );
    }
    println!("wrote {}", config.output_dir.join(harness::RESULTS_FILE).display());
    Ok(())
}

fn project_benchmark(a: ProjectArgs) -> Result<()> {
    let mut settings: MethodSettings = read_toml(a.config.as_deref())?;
    a.settings.apply(&mut settings);
    let paths: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    let ds = data::load_libsvm(&paths, a.dim, a.relabel)?;
    let m = a.m.unwrap_or(ds.x.d());
    let config = BenchmarkConfig {
        d_target: a.d_target,
        m,
        n: a.n,
        methods: a.methods,
        seed: a.seed,
        settings,
        output_dir: a.output_dir,
    };
    for out in harness::run_benchmark_projection(&ds, &config)? {
        match (&out.status, &out.train_path) {
            (RunStatus::Ok, Some(path)) => println!("{}: {}", out.method, path.display()),
            (status, _) => println!("{}: {status}", out.method),
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::EvalSynthetic(a) => eval_synthetic(a),
        Command::ProjectBenchmark(a) => project_benchmark(a),
        Command::Plot(a) => {
            let files = plot::emit_plots(&a.input, &a.output_dir)?;
            if files.is_empty() {
                bail!("no plots written");
            }
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
