use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairloop::analysis::{
    analytic_equilibria, basin_map, phase_field, refine_equilibrium, stability_reports,
    Equilibrium, Grid, SpectrumEntry, StabilityReport, FIXED_POINT_TOL,
};
use fairloop::dynamics::{gap_drift, simulate, step_with_solution};
use fairloop::montecarlo::{run_trials, summarize, TrialSummary};
use fairloop::{export, parse_scenario, solve, Error, GroupState, Scenario};

const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_IO: u8 = 5;

const WORKERS_ENV: &str = "FAIRLOOP_WORKERS";

const AFTER_HELP: &str = "\
Exit status:
  0  success
  2  usage error or argument outside the model's domain
  3  scenario file could not be parsed or violates a constraint
  4  numerical failure (threshold solve, refinement, divergence)
  5  file could not be read or written

Environment:
  FAIRLOOP_WORKERS  worker threads for basin, phase and montecarlo
                    (default: available parallelism)";

/// Feedback-loop dynamics of top-n selection under a shared threshold or
/// demographic parity.
#[derive(Parser)]
#[command(name = "fairloop", version, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the acceptance threshold(s) at a state.
    Threshold(StateArgs),
    /// Apply one step of the mean update.
    Step(StateArgs),
    /// Iterate the update and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// One-step displacement on a grid, as CSV.
    Phase(GridArgs),
    /// Label grid starts by the equilibrium they converge to, as CSV.
    Basin(BasinArgs),
    /// Closed-form equilibria, as CSV.
    Equilibria(EquilibriaArgs),
    /// Jacobians, eigenvalues and verdicts for every equilibrium.
    Stability(ReportArgs),
    /// Sample finite populations and compare with the expected-value model.
    Montecarlo(MonteCarloArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct StateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Group means as `mu_c,mu_nc`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    state: (f64, f64),
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Initial group means as `mu_c,mu_nc`.
    #[arg(long, visible_alias = "start", value_parser = parse_pair, allow_hyphen_values = true)]
    state: (f64, f64),
    /// Maximum number of steps.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Stop once a step moves the state by less than this (max-norm).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Points per axis.
    #[arg(long, default_value_t = 21)]
    resolution: usize,
    /// Upper end of both axes [default: 1.05 x largest equilibrium coordinate].
    #[arg(long)]
    mu_max: Option<f64>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BasinArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Maximum steps per start.
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Distance within which a settled run is matched to an equilibrium.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct EquilibriaArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Polish closed-form points whose step residual exceeds the fixed-point
    /// tolerance.
    #[arg(long)]
    refine: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonteCarloArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Group means as `mu_c,mu_nc`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    state: (f64, f64),
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Master seed; trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write one CSV row per trial to this file.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the summary to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `mu_c,mu_nc`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Malformed(_) | Error::Constraint { .. } | Error::InvalidShape(_) => EXIT_PARSE,
            Error::Domain(_) => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let s = parse_scenario(&text).map_err(|e| Failure {
        message: format!("{}: {}", path.display(), e),
        ..Failure::from(e)
    })?;
    if s.capacity_warning() {
        eprintln!("warning: n >= m_c/5, the expected-count model is a loose approximation here");
    }
    Ok(s)
}

fn state(pair: (f64, f64)) -> Result<GroupState, Failure> {
    Ok(GroupState::new(pair.0, pair.1)?)
}

/// Run `body` against the output target, buffered, and flush.
fn emit(out: &Option<PathBuf>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome {
    let target = out.as_deref().unwrap_or(Path::new("<stdout>"));
    let result = match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| io_failure(target, e))
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Outcome {
    emit(out, |w| w.write_all(text.as_bytes()))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn threshold(a: StateArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let x = state(a.state)?;
    let sol = solve(&s, x)?;
    let text = match a.format {
        Format::Json => json(&sol),
        Format::Text => {
            let mut t = String::new();
            let _ = writeln!(t, "policy {}", sol.policy.as_str());
            let _ = writeln!(t, "theta_c {}", sol.theta_c);
            let _ = writeln!(t, "theta_nc {}", sol.theta_nc);
            let _ = writeln!(t, "P_c {}", sol.p_c);
            let _ = writeln!(t, "P_nc {}", sol.p_nc);
            let _ = writeln!(t, "residual {}", sol.residual);
            let _ = writeln!(t, "iterations {}", sol.iterations);
            if sol.unreachable_c || sol.unreachable_nc {
                let _ = writeln!(t, "unreachable_c {}", sol.unreachable_c);
                let _ = writeln!(t, "unreachable_nc {}", sol.unreachable_nc);
            }
            t
        }
    };
    emit_text(&a.out, &text)
}

fn step_cmd(a: StateArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let x = state(a.state)?;
    let (next, sol) = step_with_solution(&s, x)?;
    let drift = gap_drift(&s, x)?;
    let text = match a.format {
        Format::Json => json(&serde_json::json!({
            "state": x,
            "next": next,
            "threshold": sol,
            "gap_drift": drift,
        })),
        Format::Text => {
            let mut t = String::new();
            let _ = writeln!(t, "mu_c {}", next.mu_c);
            let _ = writeln!(t, "mu_nc {}", next.mu_nc);
            let _ = writeln!(t, "theta_c {}", sol.theta_c);
            let _ = writeln!(t, "theta_nc {}", sol.theta_nc);
            let _ = writeln!(t, "P_c {}", sol.p_c);
            let _ = writeln!(t, "P_nc {}", sol.p_nc);
            let _ = writeln!(t, "gap_drift {}", drift.value);
            let _ = writeln!(
                t,
                "gap {}",
                serde_json::to_value(drift.verdict)
                    .unwrap()
                    .as_str()
                    .unwrap()
            );
            t
        }
    };
    emit_text(&a.out, &text)
}

fn simulate_cmd(a: SimulateArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let x = state(a.state)?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(usage(format!("--tol must be > 0, got {}", a.tol)));
    }
    let traj = simulate(&s, x, a.steps, a.tol)?;
    if !traj.converged {
        eprintln!("note: no convergence within {} steps", a.steps);
    }
    emit(&a.out, |w| export::write_trajectory(w, &traj))
}

fn grid(s: &Scenario, a: &GridArgs) -> Result<Grid, Failure> {
    let mu_max = match a.mu_max {
        Some(v) => v,
        None => {
            let eqs = analytic_equilibria(s)
                .map_err(|_| usage("no closed-form equilibria to size the grid; pass --mu-max"))?;
            let largest = eqs
                .iter()
                .map(|e| e.point.mu_c.max(e.point.mu_nc))
                .fold(0.0, f64::max);
            if largest <= 0.0 {
                return Err(usage("equilibria are all at the origin; pass --mu-max"));
            }
            1.05 * largest
        }
    };
    Ok(Grid::new(mu_max, a.resolution)?)
}

fn phase(a: GridArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let g = grid(&s, &a)?;
    let rows = phase_field(&s, g);
    emit(&a.out, |w| export::write_phase(w, &rows))
}

fn basin(a: BasinArgs) -> Outcome {
    let s = load(&a.grid.scenario)?;
    let g = grid(&s, &a.grid)?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(usage(format!("--tol must be > 0, got {}", a.tol)));
    }
    let map = basin_map(&s, g, a.steps, a.tol);
    emit(&a.grid.out, |w| export::write_basin(w, &map))
}

fn equilibria(a: EquilibriaArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let mut eqs: Vec<Equilibrium> = analytic_equilibria(&s)?;
    if a.refine {
        for e in eqs.iter_mut().filter(|e| !e.verified) {
            match refine_equilibrium(&s, e.point, FIXED_POINT_TOL) {
                Ok(r) if r.label == e.label => *e = r,
                Ok(_) => eprintln!(
                    "note: {} drifted to another equilibrium while refining",
                    e.label.as_str()
                ),
                Err(err) => eprintln!("note: {} not refined: {err}", e.label.as_str()),
            }
        }
    }
    emit(&a.out, |w| export::write_equilibria(w, &eqs))
}

fn spectrum_text(t: &mut String, name: &str, entry: &Option<SpectrumEntry>) {
    match entry {
        None => {
            let _ = writeln!(t, "  {name}: unavailable");
        }
        Some(e) => {
            let verdict = serde_json::to_value(e.verdict).unwrap();
            let _ = writeln!(t, "  {name}: {}", verdict.as_str().unwrap());
            for row in &e.matrix {
                let _ = writeln!(t, "    [{}, {}]", row[0], row[1]);
            }
            for ev in &e.eigenvalues {
                let _ = writeln!(t, "    eigenvalue {} {:+}i |{}|", ev.re, ev.im, ev.modulus);
            }
        }
    }
}

fn report_text(reports: &[StabilityReport]) -> String {
    let mut t = String::new();
    for r in reports {
        let e = &r.equilibrium;
        let _ = writeln!(
            t,
            "{} ({}, {}) residual {}",
            e.label.as_str(),
            e.point.mu_c,
            e.point.mu_nc,
            e.residual
        );
        spectrum_text(&mut t, "jacobian_fd", &r.jacobian_fd);
        spectrum_text(&mut t, "jacobian_theta_frozen", &r.jacobian_theta_frozen);
        spectrum_text(&mut t, "jacobian_analytic", &r.jacobian_analytic);
        if let Some(c) = &r.criterion {
            let _ = writeln!(t, "  criterion ({}): holds {}", c.family, c.holds);
            for cond in &c.conditions {
                let _ = writeln!(
                    t,
                    "    {}: holds {} margin {} boundary {}",
                    cond.name, cond.holds, cond.margin, cond.boundary
                );
            }
        }
        for note in &r.notes {
            let _ = writeln!(t, "  note: {note}");
        }
    }
    t
}

fn stability(a: ReportArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let reports = stability_reports(&s)?;
    let text = match a.format {
        Format::Json => json(&reports),
        Format::Text => report_text(&reports),
    };
    emit_text(&a.out, &text)
}

fn summary_text(sum: &TrialSummary) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "trials {}", sum.trials);
    let _ = writeln!(t, "seed {}", sum.seed);
    let _ = writeln!(t, "policy {}", sum.policy.as_str());
    let _ = writeln!(t, "P_c {}", sum.p_c);
    let _ = writeln!(t, "P_nc {}", sum.p_nc);
    for (name, g) in [
        ("accepted_c", &sum.accepted_c),
        ("accepted_nc", &sum.accepted_nc),
    ] {
        let _ = writeln!(
            t,
            "{name} mean {} variance {} expected {} expected_variance {} z {}",
            g.mean, g.variance, g.expected, g.expected_variance, g.z
        );
    }
    let _ = writeln!(t, "accuracy_mean {}", sum.accuracy_mean);
    let _ = writeln!(t, "accuracy_min {}", sum.accuracy_min);
    let _ = writeln!(t, "dp_gap_mean {}", sum.dp_gap_mean);
    t
}

fn montecarlo(a: MonteCarloArgs) -> Outcome {
    let s = load(&a.scenario)?;
    let x = state(a.state)?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let outcomes = run_trials(&s, x, a.trials, a.seed)?;
    let sum = summarize(&s, x, &outcomes, a.seed)?;
    if let Some(path) = &a.trials_csv {
        emit(&Some(path.clone()), |w| export::write_trials(w, &outcomes))?;
    }
    let text = match a.format {
        Format::Json => json(&sum),
        Format::Text => summary_text(&sum),
    };
    emit_text(&a.out, &text)
}

fn configure_workers() -> Outcome {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(format!(
            "{WORKERS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("{WORKERS_ENV}: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_workers()?;
    match cli.command {
        Command::Threshold(a) => threshold(a),
        Command::Step(a) => step_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Phase(a) => phase(a),
        Command::Basin(a) => basin(a),
        Command::Equilibria(a) => equilibria(a),
        Command::Stability(a) => stability(a),
        Command::Montecarlo(a) => montecarlo(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
