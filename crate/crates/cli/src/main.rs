use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polysinc::model::{Config, ReferenceKind, SolverMethod};
use polysinc::reference::{write_grid_csv, Lattice, DEFAULT_LATTICE};
use polysinc::sinc::{lebesgue_estimate, lebesgue_measured, SincGrid};
use polysinc::study::{polysinc_moments, reference_moments, solve_config, sweep, Competitor, MomentErrors};

const LEBESGUE_RESOLUTION: usize = 10_000;

#[derive(Parser)]
#[command(name = "polysinc", version, about = "Stochastic Galerkin solver with Poly-Sinc collocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write moment and coefficient grids.
    Solve(SolveArgs),
    /// Error sweep over grid sizes against a reference.
    Compare(CompareArgs),
    /// Estimated and measured Lebesgue constants of Sinc-point interpolation.
    Lebesgue(LebesgueArgs),
    /// Check the config and the coercivity of the diffusion coefficient.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Boundary row weight; overrides `solver.tau`.
    #[arg(long)]
    tau: Option<f64>,
    /// Reference for error reports; overrides `reference.kind`.
    #[arg(long)]
    reference: Option<ReferenceKind>,
    /// Points per axis of the output lattice.
    #[arg(long, default_value_t = DEFAULT_LATTICE)]
    lattice: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Odd points per axis, e.g. `5,7,9`; overrides `reference.sweep`.
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<usize>>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    reference: Option<ReferenceKind>,
    /// Method filling the second column pair of sweep.csv.
    #[arg(long, default_value = "fd")]
    competitor: Competitor,
    #[arg(long, default_value_t = DEFAULT_LATTICE)]
    lattice: usize,
}

#[derive(Args)]
struct LebesgueArgs {
    #[arg(long)]
    out: PathBuf,
    /// Odd point counts, each at least 3.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,9,11,13")]
    n_sweep: Vec<usize>,
    /// Takes the x interval and `solver.h` from this config instead of (-1, 1).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<polysinc::Error> for Failure {
    fn from(e: polysinc::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct SolverReport {
    method: &'static str,
    iterations: usize,
    rel_residual: f64,
}

#[derive(Serialize)]
struct Summary {
    basis_count: usize,
    unknowns: usize,
    rows: usize,
    half_count: usize,
    step: f64,
    tau: f64,
    residual_norm: f64,
    rhs_norm: f64,
    solver: SolverReport,
    lattice: usize,
    reference: Option<&'static str>,
    errors: Option<MomentErrors>,
}

#[derive(Default, Serialize)]
struct Timings {
    solve_s: f64,
    reference_s: f64,
    output_s: f64,
}

fn method_name(m: SolverMethod) -> &'static str {
    match m {
        SolverMethod::Auto => "auto",
        SolverMethod::Dense => "dense",
        SolverMethod::Iterative => "iterative",
    }
}

fn reference_name(k: ReferenceKind) -> &'static str {
    match k {
        ReferenceKind::SemiAnalytic => "semi-analytic",
        ReferenceKind::Sampled => "sampled",
        ReferenceKind::FdFine => "fd-fine",
    }
}

/// Writes `name` inside `dir` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(dir.join(name)).map_err(|e| Failure::from(e.error))?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> CliResult<()> {
    write_atomic(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn load(path: &Path, tau: Option<f64>) -> CliResult<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(t) = tau {
        cfg.solver.tau = t;
    }
    cfg.validate()?;
    cfg.problem()?.validate_coercivity(cfg.problem.coercivity_samples)?;
    Ok(cfg)
}

fn lattice_for(cfg: &Config, n: usize) -> CliResult<Lattice> {
    Ok(Lattice::new(cfg.problem()?.domain, n)?)
}

fn solve(args: SolveArgs) -> CliResult<()> {
    let cfg = load(&args.config, args.tau)?;
    let lattice = lattice_for(&cfg, args.lattice)?;
    fs::create_dir_all(&args.out)?;
    let mut timings = Timings::default();

    let start = Instant::now();
    let (basis, sol) = solve_config(&cfg, cfg.solver.n, cfg.solver.tau)?;
    let moments = polysinc_moments(&sol, &lattice)?;
    timings.solve_s = start.elapsed().as_secs_f64();

    let kind = args.reference.or(cfg.reference.kind);
    let start = Instant::now();
    let errors = match kind {
        Some(k) => Some(moments.errors(&reference_moments(&cfg, k, &lattice)?, &lattice)?),
        None => None,
    };
    timings.reference_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let domain = lattice.domain;
    write_atomic(&args.out, "mean.csv", |w| write_grid_csv(w, &domain, &moments.mean))?;
    write_atomic(&args.out, "variance.csv", |w| write_grid_csv(w, &domain, &moments.variance))?;
    for i in 0..basis.len() {
        let field = sol.coeff_lattice(i, &lattice.xs, &lattice.ys)?;
        write_atomic(&args.out, &format!("coeff_{i}.csv"), |w| write_grid_csv(w, &domain, &field))?;
    }
    let maxima = sol.coefficient_maxima();
    write_atomic(&args.out, "decay.csv", |w| {
        writeln!(w, "i,max_abs")?;
        for (i, m) in maxima.iter().enumerate() {
            writeln!(w, "{i},{m:.16e}")?;
        }
        Ok(())
    })?;
    let unknowns = sol.coeff_fields.iter().map(Vec::len).sum();
    let n = sol.gx.len();
    let summary = Summary {
        basis_count: basis.len(),
        unknowns,
        rows: basis.len() * (n * n + 4 * n),
        half_count: cfg.solver.n,
        step: cfg.step(),
        tau: cfg.solver.tau,
        residual_norm: sol.residual_norm,
        rhs_norm: sol.rhs_norm,
        solver: SolverReport {
            method: method_name(sol.info.method),
            iterations: sol.info.iterations,
            rel_residual: sol.info.rel_residual,
        },
        lattice: lattice.n,
        reference: kind.map(reference_name),
        errors,
    };
    write_json(&args.out, "summary.json", &summary)?;
    timings.output_s = start.elapsed().as_secs_f64();
    write_json(&args.out, "timings.json", &timings)?;
    println!(
        "{} basis functions, {} unknowns, residual {:.3e} (rhs {:.3e})",
        summary.basis_count, summary.unknowns, summary.residual_norm, summary.rhs_norm
    );
    if let Some(e) = errors {
        println!("L2 error: mean {:.3e}, variance {:.3e}", e.mean.l2, e.variance.l2);
    }
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let cfg = load(&args.config, args.tau)?;
    let kind = args
        .reference
        .or(cfg.reference.kind)
        .ok_or_else(|| Failure::Config("no reference: pass --reference or set reference.kind".into()))?;
    let sizes = args.n_sweep.unwrap_or_else(|| cfg.reference.sweep.clone());
    polysinc::model::config::validate_sweep(&sizes)?;
    let lattice = lattice_for(&cfg, args.lattice)?;
    fs::create_dir_all(&args.out)?;

    let start = Instant::now();
    let reference = reference_moments(&cfg, kind, &lattice)?;
    let reference_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let rows = sweep(&cfg, &reference, args.competitor, &sizes, cfg.solver.tau, &lattice)?;
    let solve_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    write_atomic(&args.out, "sweep.csv", |w| {
        writeln!(w, "n,l2_mean_polysinc,l2_mean_fd,l2_var_polysinc,l2_var_fd")?;
        for r in &rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.l2_mean_polysinc, r.l2_mean_competitor, r.l2_var_polysinc, r.l2_var_competitor
            )?;
        }
        Ok(())
    })?;
    let timings = Timings { solve_s, reference_s, output_s: start.elapsed().as_secs_f64() };
    write_json(&args.out, "timings.json", &timings)?;
    for r in &rows {
        println!("n={:2}  polysinc {:.3e}  competitor {:.3e}", r.n, r.l2_mean_polysinc, r.l2_mean_competitor);
    }
    Ok(())
}

fn lebesgue(args: LebesgueArgs) -> CliResult<()> {
    let (lo, hi, h) = match &args.config {
        Some(p) => {
            let cfg = Config::load(p)?;
            (cfg.domain.x[0], cfg.domain.x[1], cfg.solver.h)
        }
        None => (-1.0, 1.0, None),
    };
    for &n in &args.n_sweep {
        if n < 3 || n % 2 == 0 {
            return Err(Failure::Config(format!("lebesgue point counts must be odd and >= 3, got {n}")));
        }
    }
    fs::create_dir_all(&args.out)?;
    let mut rows = Vec::new();
    for &n in &args.n_sweep {
        let half = (n - 1) / 2;
        let grid = match h {
            Some(h) => SincGrid::new(lo, hi, half, h)?,
            None => SincGrid::with_default_step(lo, hi, half)?,
        };
        rows.push((n, lebesgue_estimate(n), lebesgue_measured(&grid, LEBESGUE_RESOLUTION)?));
    }
    write_atomic(&args.out, "lebesgue.csv", |w| {
        writeln!(w, "n,estimate,measured")?;
        for (n, e, m) in &rows {
            writeln!(w, "{n},{e:.16e},{m:.16e}")?;
        }
        Ok(())
    })?;
    for (n, e, m) in &rows {
        println!("n={n:2}  estimate {e:.4}  measured {m:.4}");
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> CliResult<()> {
    let cfg = Config::load(&args.config)?;
    let floor = cfg.problem()?.validate_coercivity(cfg.problem.coercivity_samples)?;
    let basis = cfg.basis()?;
    println!("ok: {} basis functions, coercivity floor {floor:.6e}", basis.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Compare(a) => compare(a),
        Command::Lebesgue(a) => lebesgue(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
