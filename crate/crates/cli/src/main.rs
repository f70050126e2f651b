//! `bertrand` command-line driver.
//!
//! Exit status: 0 success, 1 I/O failure, 2 usage error, 3 invalid scenario
//! or unsupported case, 4 solver did not converge, 5 a reproduction check
//! failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bertrand::error::ErrorCategory;
use bertrand::harness::experiments::{audit_table, selection_table, stability_table};
use bertrand::harness::file::{load_scenario, ExperimentMode};
use bertrand::harness::plot::gnuplot_script;
use bertrand::harness::{
    repro, run_sweep, summary_table, trajectory_table, write_tables, Format, ResultTable,
};
use bertrand::selection::feasibility_report;
use bertrand::solver::{jacobian_stability, solve_cig, solve_icig, EquilibriumResult};
use bertrand::{select_sus, Error, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_CHECK_FAILED: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "bertrand",
    version,
    about = "Price competition between computation sellers and one offloading buyer",
    after_help = "Exit status: 0 ok, 1 I/O error, 2 usage error, 3 invalid scenario or \
                  unsupported case, 4 no convergence, 5 reproduction check failed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best-response iteration with complete information.
    SolveCig(ScenarioArgs),
    /// Projected-gradient learning with incomplete information.
    SolveIcig(ScenarioArgs),
    /// Choose the SUs to trade with and solve on the final set.
    Select(ScenarioArgs),
    /// Run the sweep in the scenario's [experiment] section.
    Sweep(ScenarioArgs),
    /// Jacobian eigenvalues of the best-response map at the equilibrium (2 SUs).
    Stability(ScenarioArgs),
    /// Reproduce the reference experiments and check their qualitative outcomes.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file (TOML). Relative paths not found in the working
    /// directory are looked up in the scenario directory.
    scenario: PathBuf,

    /// Override a scenario value, e.g. `system.v=0.3` or `su.2.workload=0.1`.
    #[arg(short = 'O', long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(flatten)]
    output: OutputArgs,

    /// Directory searched for relative scenario paths.
    #[arg(long, env = "BERTRAND_SCENARIO_DIR", value_name = "DIR")]
    scenario_dir: Option<PathBuf>,

    /// Print the effective scenario (defaults and overrides applied) to stderr.
    #[arg(long)]
    echo: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write results here instead of standard output.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(short, long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct ReproArgs {
    /// Directory for one file per table; standard output when omitted.
    #[arg(short, long, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(short, long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Also write gnuplot scripts next to the tables (needs --output).
    #[arg(long, requires = "output")]
    plot: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Io => EXIT_IO,
                ErrorCategory::Validation => EXIT_INVALID,
                ErrorCategory::Solver => EXIT_NOT_CONVERGED,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::SolveCig(args) => run_solve(&args, solve_cig),
        Command::SolveIcig(args) => run_solve(&args, solve_icig),
        Command::Select(args) => {
            let (scenario, file) = load(&args)?;
            let config = file.solver_config()?;
            let outcome = select_sus(&scenario, &scenario.all_sus(), &config)?;
            let mut tables = vec![selection_table(&scenario, &outcome)?];
            if let Some(eq) = &outcome.final_equilibrium {
                tables.push(summary_table(eq)?);
                tables.push(audit_table(&feasibility_report(&outcome, &scenario)?)?);
            }
            emit(&tables, &args.output)?;
            Ok(convergence_code(outcome.final_equilibrium.as_ref()))
        }
        Command::Sweep(args) => {
            let (_, file) = load(&args)?;
            let is_sweep = file
                .experiment
                .as_ref()
                .is_some_and(|e| e.mode == ExperimentMode::Sweep);
            if !is_sweep {
                return Err(Error::InvalidParameter {
                    name: "experiment.mode".into(),
                    reason: "the scenario has no sweep experiment".into(),
                });
            }
            let result = run_sweep(&file)?;
            emit(&[result.table], &args.output)?;
            let all_converged = result.points.iter().all(|p| {
                p.outcome
                    .final_equilibrium
                    .as_ref()
                    .is_none_or(|e| e.converged)
            });
            Ok(if all_converged {
                0
            } else {
                report_not_converged()
            })
        }
        Command::Stability(args) => {
            let (scenario, file) = load(&args)?;
            let active = scenario.all_sus();
            if active.len() != 2 {
                return Err(Error::Unsupported(format!(
                    "stability analysis needs exactly 2 SUs, the scenario has {}",
                    active.len()
                )));
            }
            let eq = solve_cig(&scenario, &active, &file.solver_config()?)?;
            let report = jacobian_stability(&scenario, &active, eq.prices())?;
            emit(&[stability_table(&report)?], &args.output)?;
            Ok(convergence_code(Some(&eq)))
        }
        Command::Repro(args) => run_repro(&args),
    }
}

type Solver = fn(
    &Scenario,
    &bertrand::ActiveSet,
    &bertrand::SolverConfig,
) -> bertrand::Result<EquilibriumResult>;

fn run_solve(args: &ScenarioArgs, solver: Solver) -> Result<u8, Error> {
    let (scenario, file) = load(args)?;
    let result = solver(&scenario, &scenario.all_sus(), &file.solver_config()?)?;
    let tables = [
        trajectory_table(&scenario, &result)?,
        summary_table(&result)?,
    ];
    emit(&tables, &args.output)?;
    Ok(convergence_code(Some(&result)))
}

fn convergence_code(result: Option<&EquilibriumResult>) -> u8 {
    match result {
        Some(r) if !r.converged => {
            eprintln!(
                "solver stopped after {} iterations without converging (max |gradient| {:e}, residual {:e})",
                r.iterations_used, r.diagnostics.final_gradient_norm, r.diagnostics.final_residual
            );
            EXIT_NOT_CONVERGED
        }
        _ => 0,
    }
}

fn report_not_converged() -> u8 {
    eprintln!("at least one sweep point did not converge");
    EXIT_NOT_CONVERGED
}

fn resolve(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, bertrand::harness::ScenarioFile), Error> {
    let path = resolve(&args.scenario, args.scenario_dir.as_deref());
    let (scenario, file) = load_scenario(&path, &args.overrides)?;
    if args.echo {
        eprint!("{}", file.to_toml()?);
    }
    Ok((scenario, file))
}

fn emit(tables: &[ResultTable], out: &OutputArgs) -> Result<(), Error> {
    let format = out.format.into();
    match &out.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_tables(tables, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_tables(tables, format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_repro(args: &ReproArgs) -> Result<u8, Error> {
    let report = repro()?;
    let format: Format = args.format.into();
    let mut tables = report.tables.clone();
    tables.push(report.checks_table()?);
    match &args.output {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for t in &tables {
                let path = dir.join(format!("{}.{}", t.name, format.extension()));
                let mut w = BufWriter::new(File::create(path)?);
                t.write(format, &mut w)?;
                w.flush()?;
            }
            if args.plot {
                let plots = [
                    (&report.fig1.table, "q_", "price [J/Mb]"),
                    (&report.fig23.allocations, "l_", "allocation [Mb]"),
                    (&report.fig23.utilities, "u_", "utility [J]"),
                    (&report.fig4.table, "l_", "allocation [Mb]"),
                ];
                for (t, prefix, ylabel) in plots {
                    let csv = format!("{}.csv", t.name);
                    std::fs::write(
                        dir.join(format!("{}.gp", t.name)),
                        gnuplot_script(t, &csv, prefix, ylabel),
                    )?;
                }
            }
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_tables(&tables, format, &mut w)?;
            w.flush()?;
        }
    }
    for c in &report.checks {
        eprintln!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(if report.all_passed() {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn overrides_accumulate() {
        let cli = Cli::try_parse_from([
            "bertrand",
            "solve-cig",
            "s.toml",
            "-O",
            "v=0",
            "--override",
            "su.1.workload=0.1",
        ])
        .unwrap();
        let Command::SolveCig(args) = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(args.overrides, ["v=0", "su.1.workload=0.1"]);
    }
}
