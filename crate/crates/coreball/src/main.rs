use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coreball::bench::{default_c_grid, run_bench, BenchOptions, CChoice};
use coreball::core::{Algorithm, InitPolicy, SolverConfig};
use coreball::libsvm::read_libsvm;
use coreball::model_file::{kernel_to_string, read_model, write_model};
use coreball::train::{accuracy, predict_all, train_ovo, write_trace, KernelChoice, Param, TrainOptions};
use coreball::{Result, EXIT_NOT_CONVERGED};

/// Kernel SVM training with Frank-Wolfe solvers for the minimal enclosing ball dual.
#[derive(Parser, Debug)]
#[command(name = "coreball", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a LIBSVM file.
    Train(TrainArgs),
    /// Predict labels for a LIBSVM file and report accuracy.
    Predict(PredictArgs),
    /// Compare solvers on a train/test pair and emit CSV.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Solver {
    Fw,
    Mfw,
    Bc,
}

impl From<Solver> for Algorithm {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Fw => Algorithm::Fw,
            Solver::Mfw => Algorithm::Mfw,
            Solver::Bc => Algorithm::Bc,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kernel {
    Rbf,
    Linear,
    Poly,
    Polyh,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: Kernel,
    /// RBF width, or `auto` for the mean squared distance between training rows.
    #[arg(long, default_value = "auto", value_parser = parse_param)]
    sigma2: Param,
    /// Homogeneous polynomial scale, or `auto` for the inverse mean squared distance.
    #[arg(long, default_value = "auto", value_parser = parse_param)]
    gamma: Param,
    #[arg(long, default_value_t = 2)]
    degree: u32,
}

impl KernelArgs {
    fn choice(&self) -> KernelChoice {
        match self.kernel {
            Kernel::Rbf => KernelChoice::Rbf { sigma2: self.sigma2 },
            Kernel::Linear => KernelChoice::Linear,
            Kernel::Poly => KernelChoice::Poly { degree: self.degree },
            Kernel::Polyh => KernelChoice::Polyh { gamma: self.gamma, degree: self.degree },
        }
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Rows sampled per furthest-point search.
    #[arg(long, default_value_t = 59)]
    sample_size: usize,
    /// `two-point` or `random-meb:<p>`.
    #[arg(long, default_value = "random-meb:20", value_parser = parse_init)]
    init: InitPolicy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_iter: u64,
    /// Kernel cache budget per solver, in MiB.
    #[arg(long, default_value_t = 64.0)]
    cache_mb: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            sample_size: self.sample_size,
            max_iterations: self.max_iter,
            seed: self.seed,
            init: self.init,
            cache_bytes: (self.cache_mb.max(0.0) * 1024.0 * 1024.0) as usize,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "mfw")]
    solver: Solver,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long = "C", short = 'C')]
    c: f64,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Where to write one predicted class id per line; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Dataset name in the report; defaults to the training file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "bc,fw,mfw")]
    solvers: Vec<Solver>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// A value, or `select` to pick from 2^0..2^12 on a validation split.
    #[arg(long = "C", short = 'C', value_parser = parse_c)]
    c: CChoice,
    /// Fraction held out when selecting C.
    #[arg(long, default_value_t = 0.3)]
    validation: f64,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Directory receiving one trace CSV per solver.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// CSV destination; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Train class pairs concurrently (distorts timings).
    #[arg(long)]
    parallel: bool,
}

fn parse_param(s: &str) -> std::result::Result<Param, String> {
    if s == "auto" {
        return Ok(Param::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Param::Value(v)),
        _ => Err(format!("expected a positive number or 'auto', got '{s}'")),
    }
}

fn parse_init(s: &str) -> std::result::Result<InitPolicy, String> {
    if s == "two-point" {
        return Ok(InitPolicy::TwoPoint);
    }
    let p = s
        .strip_prefix("random-meb:")
        .and_then(|p| p.parse::<usize>().ok())
        .ok_or_else(|| format!("expected 'two-point' or 'random-meb:<p>', got '{s}'"))?;
    if p < 2 {
        return Err("random-meb needs p >= 2".into());
    }
    Ok(InitPolicy::RandomMeb { p })
}

fn parse_c(s: &str) -> std::result::Result<CChoice, String> {
    if s == "select" {
        return Ok(CChoice::Select { grid: default_c_grid(), validation_fraction: 0.3 });
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(CChoice::Fixed(v)),
        _ => Err(format!("expected a positive number or 'select', got '{s}'")),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let data = read_libsvm(&args.data)?;
    let config = args.solver_args.config();
    let kernel = args.kernel.choice().resolve(&data, config.seed)?;
    let options = TrainOptions { config, trace: args.trace.is_some(), ..TrainOptions::new(kernel, args.c, args.solver.into()) };
    let trained = train_ovo(&data, &options)?;
    write_model(&args.model, &trained.model)?;
    if let Some(path) = &args.trace {
        write_trace(BufWriter::new(File::create(path)?), &trained.machines)?;
    }

    println!("kernel {}", kernel_to_string(&kernel));
    println!("solver {} C {}", options.algorithm.as_str(), args.c);
    for m in &trained.machines {
        let s = &m.stats;
        println!(
            "machine {} {}: rows {} iterations {} fw {} away {} drop {} coreset {} g {:.9e} kernel_evals {} cache_hits {} time {:.3}s{}",
            m.positive_class,
            m.negative_class,
            m.rows,
            s.iterations,
            s.fw_steps,
            s.away_steps,
            s.drop_steps,
            s.coreset_size,
            s.final_objective,
            s.kernel_evals,
            s.cache_hits,
            s.wall_time_seconds,
            if s.converged { "" } else { " (not converged)" }
        );
    }
    println!("training time {:.3}s", trained.wall_time_seconds);
    println!("training accuracy {:.4}%", accuracy(&trained.model, &data));
    if trained.converged() {
        Ok(0)
    } else {
        eprintln!("warning: iteration limit reached before the stopping test");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let model = read_model(&args.model)?;
    let data = read_libsvm(&args.data)?;
    let predicted = predict_all(&model, &data);
    let mut out = open_out(args.output.as_deref())?;
    for p in &predicted {
        writeln!(out, "{p}")?;
    }
    out.flush()?;
    let acc = accuracy(&model, &data);
    if args.output.is_some() {
        println!("accuracy {acc:.4}%");
    } else {
        eprintln!("accuracy {acc:.4}%");
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let train = read_libsvm(&args.train)?;
    let test = read_libsvm(&args.test)?;
    let config = args.solver_args.config();
    let kernel = args.kernel.choice().resolve(&train, config.seed)?;
    let c = match args.c {
        CChoice::Select { grid, .. } => CChoice::Select { grid, validation_fraction: args.validation },
        fixed => fixed,
    };
    if let Some(dir) = &args.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let name = args.name.clone().unwrap_or_else(|| {
        args.train.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into())
    });
    let options = BenchOptions {
        kernel,
        c,
        config,
        solvers: args.solvers.iter().map(|&s| s.into()).collect(),
        trace_dir: args.trace_dir.clone(),
        parallel: args.parallel,
    };
    let report = run_bench(&name, &train, &test, &options)?;
    let mut out = open_out(args.out.as_deref())?;
    out.write_all(report.to_csv().as_bytes())?;
    out.flush()?;
    Ok(if report.rows.iter().all(|r| r.converged) { 0 } else { EXIT_NOT_CONVERGED })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
