//! `hdwn` — white-noise testing for high-dimensional panels.
//!
//! Subcommands: `test` a CSV panel, `simulate` datasets from the built-in
//! models, `study` a size/power experiment from a JSON spec, and `verify`
//! the internal evaluators. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

mod io;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use hdwn_core::covariance::CovarianceModel;
use hdwn_core::montecarlo::{run_study, ExperimentSpec};
use hdwn_core::rng::derive_rep_rng;
use hdwn_core::simulate::{coeff_matrix, gen_null, gen_var1, gen_vma1, CoeffKind, InnovationKind};
use hdwn_core::whitenoise::{run_test, TestConfig};
use hdwn_core::{verify, SeriesMatrix};

use io::{read_series_csv, write_series_csv, ConfigEcho, InputDesc, ReportFile};

#[derive(Parser)]
#[command(name = "hdwn", version, about = "High-dimensional white-noise tests")]
struct Cli {
    /// Worker threads (overrides HDWN_THREADS; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Null,
    Var1,
    Vma1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CovArg {
    Identity,
    Factor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InnovArg {
    Gaussian,
    Gamma,
}

impl From<InnovArg> for InnovationKind {
    fn from(v: InnovArg) -> Self {
        match v {
            InnovArg::Gaussian => InnovationKind::Gaussian,
            InnovArg::Gamma => InnovationKind::ShiftedGamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoeffArg {
    Dense,
    Sparse,
    Identity,
}

impl From<CoeffArg> for CoeffKind {
    fn from(v: CoeffArg) -> Self {
        match v {
            CoeffArg::Dense => CoeffKind::Dense,
            CoeffArg::Sparse => CoeffKind::Sparse,
            CoeffArg::Identity => CoeffKind::Identity,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the white-noise test on a CSV panel (rows = time, columns = series).
    Test {
        #[arg(long)]
        input: PathBuf,
        /// The input starts with a single header row.
        #[arg(long)]
        has_header: bool,
        /// Lag cap.
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Even statistic orders, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6])]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Subtract each series' sample mean first.
        #[arg(long)]
        demean: bool,
        /// Divide each series by its sample standard deviation first.
        #[arg(long)]
        scale: bool,
        /// Write a JSON report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate a dataset and write it as a series CSV.
    Simulate {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        p: usize,
        #[arg(long = "T")]
        t_len: usize,
        #[arg(long, value_enum, default_value_t = CovArg::Identity)]
        cov: CovArg,
        #[arg(long, value_enum, default_value_t = InnovArg::Gaussian)]
        innov: InnovArg,
        /// Coefficient shape; required for var1/vma1, forbidden for null.
        #[arg(long, value_enum)]
        coeff: Option<CoeffArg>,
        /// Master seed (overrides HDWN_SEED; default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a size or power study described by a JSON spec.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Run the DP-vs-oracle and count-identity self checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

enum AppError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Runtime(e.into())
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("HDWN_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        if n > 0 {
            // Ignore the error if a pool already exists (tests).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn default_seed() -> u64 {
    std::env::var("HDWN_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn dispatch(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::Test {
            input,
            has_header,
            q,
            orders,
            alpha,
            demean,
            scale,
            output,
        } => cmd_test(input, has_header, q, orders, alpha, demean, scale, output),
        Command::Simulate {
            model,
            p,
            t_len,
            cov,
            innov,
            coeff,
            seed,
            output,
        } => cmd_simulate(model, p, t_len, cov, innov, coeff, seed, output),
        Command::Study { config, output_dir } => cmd_study(config, output_dir),
        Command::Verify => cmd_verify(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_test(
    input: PathBuf,
    has_header: bool,
    q: usize,
    orders: Vec<usize>,
    alpha: f64,
    demean: bool,
    scale: bool,
    output: Option<PathBuf>,
) -> Result<(), AppError> {
    let cfg = TestConfig {
        q,
        orders,
        alpha,
        demean,
        scale,
    };
    if let Err(e) = cfg.validate() {
        return Err(AppError::Usage(e.to_string()));
    }
    let started = Instant::now();
    let x = read_series_csv(&input, has_header)
        .with_context(|| format!("reading {}", input.display()))?;
    println!("loaded {} series of length {}", x.p(), x.t_len());

    let report = run_test(&x, &cfg).context("running the test")?;
    for o in &report.orders {
        match &o.outcome {
            Ok(s) => println!(
                "order {}: z = {:.4}, p = {:.4e}, reject at {}% level: {}",
                o.order,
                s.z,
                s.p_value,
                cfg.alpha * 100.0,
                if s.reject { "yes" } else { "no" }
            ),
            Err(e) => println!("order {}: failed: {e}", o.order),
        }
    }
    match &report.adaptive {
        Some(a) => println!(
            "adaptive: z = {:.4}, p = {:.4e}, reject at {}% level: {}",
            a.z,
            a.p_value,
            cfg.alpha * 100.0,
            if a.reject { "yes" } else { "no" }
        ),
        None => println!("adaptive: unavailable (a component order failed)"),
    }
    if report.conditioning_warning {
        println!("warning: channel terms exceed 1e6 in magnitude; consider --scale");
    }

    if let Some(path) = output {
        let file = ReportFile::from_report(
            InputDesc {
                path: input.display().to_string(),
                p: x.p(),
                t_len: x.t_len(),
            },
            ConfigEcho {
                q: cfg.q,
                orders: cfg.orders.clone(),
                alpha: cfg.alpha,
                demean: cfg.demean,
                scale: cfg.scale,
            },
            &report,
            started.elapsed().as_secs_f64(),
        );
        std::fs::write(&path, file.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    model: ModelArg,
    p: usize,
    t_len: usize,
    cov: CovArg,
    innov: InnovArg,
    coeff: Option<CoeffArg>,
    seed: Option<u64>,
    output: PathBuf,
) -> Result<(), AppError> {
    if p == 0 || t_len == 0 {
        return Err(AppError::Usage("--p and --T must be at least 1".into()));
    }
    match (model, coeff) {
        (ModelArg::Null, Some(_)) => {
            return Err(AppError::Usage(
                "--coeff is meaningless with --model null".into(),
            ))
        }
        (ModelArg::Var1 | ModelArg::Vma1, None) => {
            return Err(AppError::Usage(
                "--coeff is required for var1/vma1 models".into(),
            ))
        }
        _ => {}
    }
    let seed = seed.unwrap_or_else(default_seed);
    let mut rng = derive_rep_rng(seed, 0, 0);
    let cov_model = match cov {
        CovArg::Identity => CovarianceModel::identity(p),
        CovArg::Factor => CovarianceModel::factor(p, &mut rng),
    }
    .context("building the covariance structure")?;
    let innov: InnovationKind = innov.into();

    let x: SeriesMatrix = match model {
        ModelArg::Null => gen_null(&cov_model, innov, t_len, &mut rng),
        ModelArg::Var1 => {
            let c = coeff_matrix(coeff.expect("checked").into(), p)?;
            gen_var1(&cov_model, &c, innov, t_len, &mut rng)
        }
        ModelArg::Vma1 => {
            let c = coeff_matrix(coeff.expect("checked").into(), p)?;
            gen_vma1(&cov_model, &c, innov, t_len, &mut rng)
        }
    }
    .context("simulating")?;

    write_series_csv(&x, &output).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "wrote {} rows x {} columns to {}",
        x.t_len(),
        x.p(),
        output.display()
    );
    Ok(())
}

fn cmd_study(config: PathBuf, output_dir: PathBuf) -> Result<(), AppError> {
    let text = std::fs::read_to_string(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))?;
    if let Err(e) = spec.validate() {
        return Err(AppError::Usage(e.to_string()));
    }

    let table = run_study(&spec).context("running the study")?;
    std::fs::create_dir_all(&output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))?;
    let csv_path = output_dir.join("results.csv");
    let json_path = output_dir.join("results.json");
    std::fs::write(&csv_path, table.to_csv())?;
    std::fs::write(&json_path, table.to_json())?;

    for cell in &table.cells {
        let rates: Vec<String> = cell
            .rates
            .iter()
            .map(|r| format!("{} {:.2}%", r.stat, r.reject_pct))
            .collect();
        println!(
            "cell p={} T={} [{}]: {}",
            cell.p,
            cell.t_len,
            cell.status,
            rates.join(", ")
        );
    }
    println!(
        "study finished in {:.1}s; wrote {} and {}",
        table.total_wall_seconds,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

fn cmd_verify() -> Result<(), AppError> {
    let report = verify::run_all();
    println!(
        "dp-vs-oracle: {} random cases, max relative error {:.3e}",
        report.dp_cases, report.dp_max_rel_err
    );
    println!("count-identity: {} grid cells checked", report.count_cells);
    if report.passed() {
        println!("verify: PASS");
        Ok(())
    } else {
        for f in &report.failures {
            eprintln!("verify failure: {f}");
        }
        Err(AppError::Runtime(anyhow::anyhow!(
            "{} verification failure(s)",
            report.failures.len()
        )))
    }
}
