//! The `rdball` command line: argument parsing, dispatch and rendering.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 a solver did not
//! converge, 3 a verification or admissibility check failed.

mod instance;

pub use instance::{InstanceError, InstanceFile, RadiusUnit, SolverSettings};

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classical::{classical_rd, rd_curve, ClassicalSolution, CurvePoint};
use crate::coding::{converse_audit, simulate_admissibility, ConverseReport, SimConfig, SimReport};
use crate::error::Error;
use crate::oracle::{brute_force_robust, sample_ball, GridSpec};
use crate::prob::{kl_divergence, ProbVector, ProblemInstance};
use crate::robust::{
    lemma2_extremal, lemma2_radius_with, maxmin_solve, minimax_solve, robust_curve, saddle_check, worst_source_from,
    ExponentVariant, RobustOptions, RobustSolution, SaddleReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Header of every curve CSV. Rates are always in nats.
pub const CURVE_HEADER: &str = "D,rate_nats,slope_s,lambda,kl_achieved,worst_distortion";

const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "rdball",
    version,
    about = "Classical and KL-ball robust rate-distortion solvers"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Write output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all available).
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    /// Show rates in bits in reports. Curve CSVs stay in nats.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Also write the parsed instance back out as TOML to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub dump_instance: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical rate-distortion of the nominal source.
    Classical(ClassicalArgs),
    /// Robust rate-distortion over the KL ball.
    Robust(RobustArgs),
    /// Cross-check the robust solution against the oracle and audits.
    Verify(VerifyArgs),
    /// Monte-Carlo coding simulation with one shared random codebook.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    pub instance: PathBuf,
    /// Distortion budget; defaults to the instance's budget.
    #[arg(long = "D", value_name = "D", conflicts_with_all = ["slopes", "budgets"])]
    pub budget: Option<f64>,
    /// Comma-separated slopes (≤ 0); emits a curve CSV.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "budgets")]
    pub slopes: Option<Vec<f64>>,
    /// Comma-separated budgets; emits a curve CSV.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Solver tolerance; defaults to the instance's `[solver] tol` or 1e-9.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Maxmin,
    Minimax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Reciprocal,
    Literal,
}

#[derive(Debug, Args)]
pub struct RobustArgs {
    pub instance: PathBuf,
    /// Solver tolerance; defaults to the instance's `[solver] tol` or 1e-9.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Which side of the saddle to solve from.
    #[arg(long, value_enum, default_value = "maxmin")]
    pub method: MethodArg,
    /// Comma-separated budgets; emits a curve CSV instead of a report.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Append the Monte-Carlo saddle audit.
    #[arg(long)]
    pub report_saddle: bool,
    /// Ball samples used by the saddle audit.
    #[arg(long, default_value_t = 100)]
    pub saddle_samples: usize,
    /// Append the farthest ball point from the worst source and its distance.
    #[arg(long)]
    pub report_lemma2: bool,
    /// Also evaluate the worst-source formula with this exponent reading.
    #[arg(long, value_enum, default_value = "reciprocal")]
    pub exponent_variant: VariantArg,
    /// Random seed; defaults to the instance's `[solver] seed` or 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    /// Initial lattice step of the grid oracle.
    #[arg(long, default_value_t = 0.005)]
    pub grid_step: f64,
    /// Refinement rounds around the grid incumbent, each halving the step.
    #[arg(long, default_value_t = 3)]
    pub refine_rounds: usize,
    /// Samples for the ball-radius, saddle and converse audits.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Random seed; defaults to the instance's `[solver] seed` or 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Audit tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Shift the solved rate before checking (negative control).
    #[arg(long, hide = true, allow_hyphen_values = true)]
    pub perturb_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub instance: PathBuf,
    /// Block length.
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    /// Codebook rate above the robust rate, nats per symbol.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub margin: f64,
    /// Blocks per source.
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Sources sampled from the ball, including the worst and nominal ones.
    #[arg(long, default_value_t = 50)]
    pub sources: usize,
    /// Allowed excess of the mean distortion over the budget.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Random seed; defaults to the instance's `[solver] seed` or 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Some(k) = cli.global.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_INPUT;
        }
        // A pool that is already initialized (repeated runs in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match execute(&cli) {
        Ok(Outcome { text, code }) => match emit(&cli.global, &text) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

struct Outcome {
    text: String,
    code: i32,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

fn emit(global: &GlobalArgs, text: &str) -> std::io::Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = match &cli.command {
        Command::Classical(a) => &a.instance,
        Command::Robust(a) => &a.instance,
        Command::Verify(a) => &a.instance,
        Command::Simulate(a) => &a.instance,
    };
    let file = InstanceFile::read(path)?;
    if let Some(dump) = &cli.global.dump_instance {
        std::fs::write(dump, file.to_toml()).map_err(|e| CliError::Io(format!("{}: {e}", dump.display())))?;
    }
    let units = Units { bits: cli.global.bits };
    match &cli.command {
        Command::Classical(a) => classical(&file, a, units),
        Command::Robust(a) => robust(&file, a, units),
        Command::Verify(a) => verify(&file, a, units),
        Command::Simulate(a) => simulate(&file, a, units),
    }
}

#[derive(Clone, Copy)]
struct Units {
    bits: bool,
}

impl Units {
    fn name(self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }

    fn show(self, nats: f64) -> f64 {
        if self.bits {
            nats / std::f64::consts::LN_2
        } else {
            nats
        }
    }
}

fn tolerance(arg: Option<f64>, file: &InstanceFile) -> Result<f64, CliError> {
    let tol = arg.or(file.solver.tol).unwrap_or(DEFAULT_TOL);
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("--tol must be positive, got {tol}")))
    }
}

fn seed(arg: Option<u64>, file: &InstanceFile) -> u64 {
    arg.or(file.solver.seed).unwrap_or(0)
}

fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.distortion, p.rate, p.slope, p.lambda, p.kl_achieved, p.worst_distortion
        );
    }
    out
}

fn to_toml<T: Serialize>(value: &T) -> Result<String, CliError> {
    toml::to_string(value).map_err(|e| CliError::Io(format!("cannot render report: {e}")))
}

#[derive(Serialize)]
struct ClassicalReport<'a> {
    unit: &'static str,
    budget: f64,
    rate: f64,
    rate_nats: f64,
    slope: f64,
    distortion: f64,
    iterations: usize,
    converged: bool,
    output: &'a ProbVector,
    kernel: &'a crate::prob::Kernel,
}

fn classical(file: &InstanceFile, args: &ClassicalArgs, units: Units) -> Result<Outcome, CliError> {
    let tol = tolerance(args.tol, file)?;
    let p = &file.problem;
    if let Some(slopes) = &args.slopes {
        let points = rd_curve(&p.nominal, &p.rho, slopes, tol)?;
        return Ok(Outcome {
            text: curve_csv(&points),
            code: EXIT_OK,
        });
    }
    if let Some(budgets) = &args.budgets {
        let mut budgets = budgets.clone();
        budgets.sort_by(f64::total_cmp);
        let mut points = Vec::with_capacity(budgets.len());
        let mut converged = true;
        for d in budgets {
            let sol = classical_rd(&p.nominal, &p.rho, d, tol)?;
            converged &= sol.converged;
            points.push(CurvePoint {
                distortion: d,
                rate: sol.rate,
                slope: sol.slope,
                lambda: 0.0,
                kl_achieved: 0.0,
                worst_distortion: sol.distortion,
            });
        }
        return Ok(Outcome {
            text: curve_csv(&points),
            code: if converged { EXIT_OK } else { EXIT_NO_CONVERGENCE },
        });
    }
    let budget = args.budget.unwrap_or(p.budget);
    let sol: ClassicalSolution = classical_rd(&p.nominal, &p.rho, budget, tol)?;
    let report = ClassicalReport {
        unit: units.name(),
        budget,
        rate: units.show(sol.rate),
        rate_nats: sol.rate,
        slope: sol.slope,
        distortion: sol.distortion,
        iterations: sol.iterations,
        converged: sol.converged,
        output: &sol.output,
        kernel: &sol.kernel,
    };
    Ok(Outcome {
        text: to_toml(&report)?,
        code: if sol.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE },
    })
}

fn solve(problem: &ProblemInstance, method: MethodArg, tol: f64) -> Result<RobustSolution, Error> {
    let opts = RobustOptions::with_tol(tol);
    match method {
        MethodArg::Maxmin => maxmin_solve(problem, &opts),
        MethodArg::Minimax => minimax_solve(problem, &opts),
    }
}

#[derive(Serialize)]
struct RobustReport<'a> {
    unit: &'static str,
    rate: f64,
    budget: f64,
    radius: f64,
    solution: &'a RobustSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    lemma2: Option<Lemma2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent_comparison: Option<ExponentComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saddle: Option<SaddleReport>,
}

#[derive(Serialize)]
struct Lemma2Report {
    radius: f64,
    extremal: ProbVector,
    /// `KL(extremal ‖ worst source)`, which should equal `radius`.
    extremal_distance: f64,
}

#[derive(Serialize)]
struct ExponentComparison {
    variant: ExponentVariant,
    worst_source: ProbVector,
    worst_source_kl: f64,
    lemma2_radius: f64,
    reciprocal_lemma2_radius: f64,
}

fn robust(file: &InstanceFile, args: &RobustArgs, units: Units) -> Result<Outcome, CliError> {
    let tol = tolerance(args.tol, file)?;
    let p = &file.problem;
    if let Some(budgets) = &args.budgets {
        if args.method == MethodArg::Minimax {
            return Err(CliError::Usage("--budgets sweeps use the maxmin solver".into()));
        }
        let sols = robust_curve(p, budgets, &RobustOptions::with_tol(tol))?;
        let mut sorted = budgets.clone();
        sorted.sort_by(f64::total_cmp);
        let points: Vec<CurvePoint> = sols.iter().zip(&sorted).map(|(s, &d)| s.curve_point(d)).collect();
        let converged = sols.iter().all(|s| s.converged);
        return Ok(Outcome {
            text: curve_csv(&points),
            code: if converged { EXIT_OK } else { EXIT_NO_CONVERGENCE },
        });
    }
    let sol = solve(p, args.method, tol)?;
    let lemma2 = if args.report_lemma2 {
        let extremal = lemma2_extremal(&sol, p, 1e-12)?;
        Some(Lemma2Report {
            radius: sol.lemma2_radius,
            extremal_distance: kl_divergence(&extremal, &sol.worst_source)?,
            extremal,
        })
    } else {
        None
    };
    let exponent_comparison = if args.exponent_variant == VariantArg::Literal {
        let variant = ExponentVariant::Literal;
        let worst = worst_source_from(sol.slope, sol.lambda, &sol.output, p, variant)?;
        Some(ExponentComparison {
            variant,
            worst_source_kl: kl_divergence(&worst, &p.nominal)?,
            worst_source: worst,
            lemma2_radius: lemma2_radius_with(&sol, p, 1e-12, variant)?,
            reciprocal_lemma2_radius: sol.lemma2_radius,
        })
    } else {
        None
    };
    let saddle = if args.report_saddle {
        Some(saddle_check(&sol, p, args.saddle_samples, 1e-6, seed(args.seed, file))?)
    } else {
        None
    };
    let report = RobustReport {
        unit: units.name(),
        rate: units.show(sol.rate),
        budget: p.budget,
        radius: p.radius,
        solution: &sol,
        lemma2,
        exponent_comparison,
        saddle,
    };
    Ok(Outcome {
        text: to_toml(&report)?,
        code: if sol.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE },
    })
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn verify(file: &InstanceFile, args: &VerifyArgs, units: Units) -> Result<Outcome, CliError> {
    let p = &file.problem;
    let seed = seed(args.seed, file);
    let tol = args.tol;
    let mut sol = solve(p, MethodArg::Maxmin, tolerance(None, file)?.min(tol * 1e-3))?;
    if !sol.converged {
        return Ok(Outcome {
            text: format!("solver did not converge (rate {} nats)\n", sol.rate),
            code: EXIT_NO_CONVERGENCE,
        });
    }
    if let Some(delta) = args.perturb_rate {
        sol.rate += delta;
    }
    let mut checks = Vec::new();

    let grid = GridSpec {
        step: args.grid_step,
        refine_rounds: args.refine_rounds,
        ..GridSpec::default()
    };
    let oracle = brute_force_robust(p, &grid, 1e-11)?;
    let (lo, hi) = oracle.certified_interval(tol);
    checks.push(Check {
        name: "oracle",
        passed: (lo..=hi).contains(&sol.rate),
        detail: format!(
            "rate {:.9} interval [{:.9}, {:.9}] gap {:.3e}",
            units.show(sol.rate),
            units.show(lo),
            units.show(hi),
            units.show(sol.rate - oracle.value)
        ),
    });

    let samples = sample_ball(&p.nominal, p.radius, args.samples, seed)?;
    let mut farthest: f64 = 0.0;
    for s in &samples {
        farthest = farthest.max(kl_divergence(s, &sol.worst_source)?);
    }
    checks.push(Check {
        name: "lemma2-containment",
        passed: farthest <= sol.lemma2_radius + 1e-9,
        detail: format!(
            "max KL to worst source {farthest:.9} radius {:.9} gap {:.3e}",
            sol.lemma2_radius,
            sol.lemma2_radius - farthest
        ),
    });
    let extremal = lemma2_extremal(&sol, p, 1e-12)?;
    let reach = kl_divergence(&extremal, &sol.worst_source)?;
    checks.push(Check {
        name: "lemma2-attainment",
        passed: (reach - sol.lemma2_radius).abs() <= tol || (reach.is_infinite() && sol.lemma2_radius.is_infinite()),
        detail: format!("extremal KL {reach:.9} radius {:.9}", sol.lemma2_radius),
    });

    let saddle = saddle_check(&sol, p, args.samples, tol, seed)?;
    checks.push(Check {
        name: "saddle",
        passed: saddle.passed(),
        detail: format!(
            "violations {} lagrangian excess {:.3e} kernel deficit {:.3e}",
            saddle.violations.len(),
            saddle.max_lagrangian_excess,
            saddle.max_kernel_deficit
        ),
    });

    let converse: ConverseReport = converse_audit(p, &sol, args.samples, tol, seed)?;
    checks.push(Check {
        name: "converse",
        passed: converse.passed(),
        detail: format!(
            "violations {} supremum {:.9} gap {:.3e}",
            converse.violations.len(),
            units.show(converse.supremum),
            units.show(converse.gap())
        ),
    });

    let mut text = format!("seed {seed}\nsamples {}\n", args.samples);
    for c in &checks {
        let _ = writeln!(
            text,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let all = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        text,
        code: if all { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn simulate(file: &InstanceFile, args: &SimulateArgs, units: Units) -> Result<Outcome, CliError> {
    let p = &file.problem;
    let sol = solve(p, MethodArg::Maxmin, tolerance(None, file)?)?;
    if !sol.converged {
        return Ok(Outcome {
            text: format!("solver did not converge (rate {} nats)\n", sol.rate),
            code: EXIT_NO_CONVERGENCE,
        });
    }
    let config = SimConfig {
        block_len: args.n,
        rate_margin: args.margin,
        trials: args.trials,
        source_samples: args.sources,
        epsilon: args.epsilon,
        seed: seed(args.seed, file),
    };
    let report = simulate_admissibility(p, &sol, &config)?;
    let mut text = render_sim(&report, sol.rate, units);
    text.push_str("\n# machine-readable\n");
    text.push_str(&to_toml(&report)?);
    Ok(Outcome {
        text,
        code: if report.admissible() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
    })
}

fn render_sim(report: &SimReport, robust_rate: f64, units: Units) -> String {
    let unit = units.name();
    let mut t = String::new();
    let _ = writeln!(t, "seed {}", report.seed);
    let _ = writeln!(
        t,
        "robust rate {:.6} {unit}, codebook rate {:.6} {unit}, {} words of length {}",
        units.show(robust_rate),
        units.show(report.codebook_rate),
        report.codebook_size,
        report.block_len
    );
    let _ = writeln!(
        t,
        "budget {} epsilon {} trials {} per source",
        report.budget, report.epsilon, report.trials
    );
    let _ = writeln!(
        t,
        "{:>4}  {:<40} {:>10} {:>10} {:>8}",
        "#", "source", "mean", "std_err", "exceed"
    );
    for (i, s) in report.per_source.iter().enumerate() {
        let src: Vec<String> = s.source.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(
            t,
            "{i:>4}  {:<40} {:>10.6} {:>10.6} {:>8.4}",
            format!("[{}]", src.join(", ")),
            s.mean_distortion,
            s.std_err,
            s.exceed_frac
        );
    }
    let verdict = if report.admissible() {
        "ADMISSIBLE"
    } else {
        "NOT ADMISSIBLE"
    };
    let _ = writeln!(
        t,
        "worst mean {:.6} vs D + epsilon = {:.6}: {verdict}",
        report.worst_mean,
        report.budget + report.epsilon
    );
    t
}
