//! Command-line front end. All the work lives in the library; this binary
//! parses arguments, dispatches, and formats output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sniep::diagnostics::{matricize, surjectivity_test, write_spectrum_csv};
use sniep::dogleg::{solve, SolveStatus, SolverConfig};
use sniep::harness::{
    emit_report, generate, render_csv, render_json, render_table, run_benchmark, split_seed,
    verify_solution, write_trajectory, ProblemSpec, ReportFormat, RunRecord, Variant,
};

#[derive(Parser)]
#[command(
    name = "sniep",
    about = "Construct symmetric nonnegative matrices with a prescribed spectrum",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and report the run
    Solve(SolveArgs),
    /// Run a benchmark matrix of instances
    Bench(BenchArgs),
    /// Dense operator conditioning and surjectivity diagnostics
    Diag(DiagArgs),
    /// Re-run a seeded instance and verify its solution
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Explicit spectrum as a comma-separated list, e.g. --spectrum 5,0,-2,-2
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    spectrum: Option<Vec<f64>>,
    /// Problem size for the random generators
    #[arg(long)]
    n: Option<usize>,
    /// Rank of the random Gramian spectrum (selects the low-rank generator)
    #[arg(long)]
    p: Option<usize>,
    /// Start-point scale for fixed spectra
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Base seed of the run
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn to_spec(&self) -> Result<ProblemSpec, String> {
        if let Some(spectrum) = &self.spectrum {
            if let Some(n) = self.n {
                if n != spectrum.len() {
                    return Err(format!(
                        "--n {} contradicts the {}-element spectrum",
                        n,
                        spectrum.len()
                    ));
                }
            }
            return Ok(ProblemSpec::fixed(spectrum.clone(), self.scale, self.seed));
        }
        let n = self.n.ok_or("one of --spectrum or --n is required")?;
        match self.p {
            Some(p) if p >= 1 && p <= n => Ok(ProblemSpec::low_rank(n, p, self.seed)),
            Some(p) => Err(format!("--p {p} must lie in 1..={n}")),
            None => Ok(ProblemSpec::dense(n, self.seed)),
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Outer iteration cap
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    /// Residual stopping tolerance
    #[arg(long, default_value_t = 5e-10)]
    eps: f64,
}

impl SolverArgs {
    fn to_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer: self.max_outer,
            residual_tol: self.eps,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Cg,
    Pcg,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Cg => Variant::Cg,
            VariantArg::Pcg => Variant::Pcg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Table,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Table => ReportFormat::Table,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Inner-solve variant
    #[arg(long, value_enum, default_value_t = VariantArg::Pcg)]
    variant: VariantArg,
    /// Write the residual trajectory as CSV
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Write the run record to this path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of --out
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Problem sizes, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 200, 500])]
    n: Vec<usize>,
    /// Generator family to benchmark
    #[arg(long, value_enum, default_value_t = BenchKind::All)]
    kind: BenchKind,
    /// Low-rank parameter; defaults to n/4 per size
    #[arg(long)]
    p: Option<usize>,
    /// Inner-solve variants to run
    #[arg(long, value_enum, default_value_t = BenchVariant::Both)]
    variant: BenchVariant,
    /// Base seed; each cell derives its own stream from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent repetitions per cell
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Allow the long-running sizes above 1000
    #[arg(long)]
    include_slow: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write records to this path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BenchKind {
    Dense,
    Lowrank,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchVariant {
    Cg,
    Pcg,
    Both,
}

impl BenchVariant {
    fn expand(self) -> Vec<Variant> {
        match self {
            BenchVariant::Cg => vec![Variant::Cg],
            BenchVariant::Pcg => vec![Variant::Pcg],
            BenchVariant::Both => vec![Variant::Cg, Variant::Pcg],
        }
    }
}

#[derive(Args)]
struct DiagArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Relative singular-value threshold of the rank test
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Analyze the start point instead of solving first
    #[arg(long)]
    at_start: bool,
    /// Prefix for the spectrum CSV dumps
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Inner-solve variant
    #[arg(long, value_enum, default_value_t = VariantArg::Pcg)]
    variant: VariantArg,
    /// Tolerance of the three solution checks
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Diag(args) => cmd_diag(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn write_single_record(
    record: &RunRecord,
    out: &Option<PathBuf>,
    format: FormatArg,
) -> Result<(), String> {
    if let Some(path) = out {
        emit_report(std::slice::from_ref(record), format.into(), path)
            .map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let spec = args.instance.to_spec()?;
    let variant: Variant = args.variant.into();
    let cfg = solver_for(&args.solver.to_config(), variant, spec.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, x0) = generate(&spec, &mut rng);
    let start = std::time::Instant::now();
    let report = solve(&problem, &x0, &cfg);
    let trajectory = report.trajectory();
    let record = RunRecord {
        problem: spec.clone(),
        variant,
        status: report.status,
        ct_seconds: start.elapsed().as_secs_f64(),
        it: report.it,
        nf: report.nf,
        ncg: report.ncg,
        res0: trajectory[0].1,
        res: report.final_residual,
        trajectory,
    };
    print!("{}", render_table(std::slice::from_ref(&record)));

    if record.status == SolveStatus::Converged && spec.n <= 8 {
        let c = report.final_point.s().hadamard(report.final_point.s());
        println!("\nconstructed matrix C = S .* S:");
        for i in 0..spec.n {
            let row: Vec<String> =
                (0..spec.n).map(|j| format!("{:9.4}", c.matrix()[(i, j)])).collect();
            println!("  {}", row.join(" "));
        }
    }

    if let Some(path) = &args.trajectory {
        write_trajectory(path, &record.trajectory).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    write_single_record(&record, &args.out, args.format)?;
    Ok(status_code(&[record]))
}

fn solver_for(cfg: &SolverConfig, variant: Variant, seed: u64) -> SolverConfig {
    let mut local = cfg.clone();
    local.use_preconditioner = variant == Variant::Pcg;
    local.seed = seed;
    local
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, String> {
    for &n in &args.n {
        if n > 1000 && !args.include_slow {
            return Err(format!(
                "n = {n} is a long-running size; pass --include-slow to run it"
            ));
        }
    }
    // variants of one instance share a seed so their Res0 columns agree
    let mut cells: Vec<(ProblemSpec, Variant)> = Vec::new();
    let variants = args.variant.expand();
    let mut cell_index = 0u64;
    for &n in &args.n {
        for _rep in 0..args.reps.max(1) {
            if args.kind != BenchKind::Lowrank {
                let seed = split_seed(args.seed, cell_index);
                cell_index += 1;
                for &variant in &variants {
                    cells.push((ProblemSpec::dense(n, seed), variant));
                }
            }
            if args.kind != BenchKind::Dense {
                let rank = args.p.unwrap_or_else(|| (n / 4).max(1));
                if rank <= n {
                    let seed = split_seed(args.seed, cell_index);
                    cell_index += 1;
                    for &variant in &variants {
                        cells.push((ProblemSpec::low_rank(n, rank, seed), variant));
                    }
                }
            }
        }
    }
    let workers = if args.workers == 0 {
        std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
    } else {
        args.workers
    };
    let cfg = args.solver.to_config();
    let records = run_benchmark(&cells, &cfg, workers);

    match args.format {
        FormatArg::Table => print!("{}", render_table(&records)),
        FormatArg::Csv => print!("{}", render_csv(&records)),
        FormatArg::Json => println!("{}", render_json(&records).map_err(|e| e.to_string())?),
    }
    if let Some(path) = &args.out {
        emit_report(&records, args.format.into(), path).map_err(|e| e.to_string())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(status_code(&records))
}

fn cmd_diag(args: DiagArgs) -> Result<ExitCode, String> {
    let spec = args.instance.to_spec()?;
    if spec.n > 60 {
        eprintln!(
            "warning: dense assembly at n = {} builds {}^2 x {}^2 matrices; expect minutes",
            spec.n,
            spec.n,
            spec.n
        );
    }
    let cfg = args.solver.to_config();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, x0) = generate(&spec, &mut rng);

    let (point, residual_norm) = if args.at_start {
        let res = sniep::problem::residual(&problem, &x0).norm();
        (x0, res)
    } else {
        let report = solve(&problem, &x0, &solver_for(&cfg, Variant::Pcg, spec.seed));
        println!("solve status: {}, residual {:.3e}", report.status.as_str(), report.final_residual);
        (report.final_point, report.final_residual)
    };

    let sigma = cfg.sigma_max.min(residual_norm.max(f64::MIN_POSITIVE));
    let ops = matricize(&problem, &point, sigma).map_err(|e| e.to_string())?;
    println!("cond(H)              = {:.4e}", ops.cond_h);
    println!("cond(M^-1 H)         = {:.4e}", ops.cond_pre);
    println!(
        "preconditioned spectrum within [0.1, 10]: {:.1}%",
        100.0
            * ops.spectrum_pre.iter().filter(|v| (0.1..=10.0).contains(*v)).count() as f64
            / ops.spectrum_pre.len() as f64
    );

    let report = surjectivity_test(&problem, &point, args.rank_tol).map_err(|e| e.to_string())?;
    println!(
        "surjectivity: rank(J_S) = {}, rank(J_Q) = {}, joint rank = {} / {} ({})",
        report.j_s_rank,
        report.j_q_rank,
        report.joint_rank,
        spec.n * (spec.n + 1) / 2,
        if report.full_column_rank { "full column rank" } else { "rank deficient" }
    );

    if let Some(prefix) = &args.out {
        let base = prefix.display();
        let h_path = PathBuf::from(format!("{base}_operator_spectrum.csv"));
        let pre_path = PathBuf::from(format!("{base}_preconditioned_spectrum.csv"));
        write_spectrum_csv(&h_path, &ops.spectrum_h).map_err(|e| e.to_string())?;
        write_spectrum_csv(&pre_path, &ops.spectrum_pre).map_err(|e| e.to_string())?;
        println!("wrote {} and {}", h_path.display(), pre_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let spec = args.instance.to_spec()?;
    let cfg = args.solver.to_config();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, x0) = generate(&spec, &mut rng);
    let report = solve(&problem, &x0, &solver_for(&cfg, args.variant.into(), spec.seed));
    println!(
        "solve status: {}, residual {:.3e} after {} iterations",
        report.status.as_str(),
        report.final_residual,
        report.it
    );
    let verdict = verify_solution(&problem, &report.final_point, args.tol);
    println!("{verdict}");
    if report.status == SolveStatus::Converged && verdict.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn status_code(records: &[RunRecord]) -> ExitCode {
    if records.iter().all(|r| r.status == SolveStatus::Converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
