use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use esg_incentives_cli::experiments::{
    constrained_csv, constrained_summary, convergence_csv, flip_threshold, parse_decades,
    run_simulate, run_solve, run_sweep, simulate_csv, simulate_summary, solve_csv, sweep_csv,
};
use esg_incentives_cli::grid::GridSpec;
use esg_incentives_cli::{presets, resolve_config, CliError};

/// Batch experiments for optimal ESG-disclosure incentive schemes.
#[derive(Parser)]
#[command(name = "esg-incentives", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArg {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one economy and dump sensitivities, actions, and the objective.
    Solve {
        /// Config file path or bundled preset name (table1, table2, table3).
        #[arg(long)]
        config: String,
        /// Override the config's principal risk aversion.
        #[arg(long = "gamma-p")]
        gamma_p: Option<f64>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Solve along a gamma_P grid and emit the figure-data series.
    Sweep {
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<String>,
        /// Grid as start:stop:step.
        #[arg(long)]
        grid: Option<String>,
        /// Figure preset (fig3, fig4, fig5) binding a calibration to its grid.
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Bisect the gamma_P at which one diagonal loading crosses zero.
    FlipThreshold {
        #[arg(long)]
        config: String,
        /// Contract row (1-based).
        #[arg(long)]
        row: usize,
        /// Bisection bracket as a,b.
        #[arg(long, default_value = "0.001,10")]
        bracket: String,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Solve the infinite-penalty limit and report its sign diagnostics.
    Constrained {
        #[arg(long)]
        config: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Penalty-convergence rate table over whole decades of gamma_P.
    Convergence {
        #[arg(long)]
        config: String,
        /// Decade range as a:b (gamma_P = 10^a .. 10^b).
        #[arg(long)]
        decades: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Monte Carlo equilibrium verification of the optimal contract.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
}

fn emit(output: &OutputArg, csv: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_bracket(text: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "bracket must look like a,b, got '{text}'"
        )));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse bracket bound '{}'", parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse bracket bound '{}'", parts[1])))?;
    Ok((a, b))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            config,
            gamma_p,
            output,
        } => {
            let mut params = resolve_config(&config)?;
            if let Some(g) = gamma_p {
                params = params
                    .with_gamma_p(g)
                    .validate()
                    .map_err(esg_incentives::ConfigError::Param)?;
            }
            let report = run_solve(&params)?;
            emit(&output, &solve_csv(&report))
        }
        Command::Sweep {
            config,
            grid,
            preset,
            output,
        } => {
            let (params, grid_spec) = match preset {
                Some(name) => {
                    let fig = presets::figure(&name).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown figure preset '{name}' (expected fig3, fig4, or fig5)"
                        ))
                    })?;
                    let params = esg_incentives::load_config(fig.config)?;
                    let grid_spec = match grid {
                        Some(text) => GridSpec::parse(&text)?,
                        None => fig.grid,
                    };
                    (params, grid_spec)
                }
                None => {
                    let params = resolve_config(config.as_deref().expect("clap enforces"))?;
                    let text = grid.ok_or_else(|| {
                        CliError::Usage("sweep needs --grid start:stop:step or --preset".into())
                    })?;
                    (params, GridSpec::parse(&text)?)
                }
            };
            let result = run_sweep(&params, &grid_spec.values())?;
            emit(&output, &sweep_csv(&result))
        }
        Command::FlipThreshold {
            config,
            row,
            bracket,
            tol,
            output,
        } => {
            let params = resolve_config(&config)?;
            if row == 0 {
                return Err(CliError::Usage("rows are numbered from 1".into()));
            }
            let bracket = parse_bracket(&bracket)?;
            let gamma = flip_threshold(&params, row - 1, bracket, tol, 60)?;
            emit(&output, &format!("row,gamma_P_dagger\n{row},{gamma}\n"))
        }
        Command::Constrained { config, output } => {
            let params = resolve_config(&config)?;
            let csv = constrained_csv(&params)?;
            let summary = constrained_summary(&params)?;
            emit(&output, &csv)?;
            // Diagnostics always land on stdout, keeping the CSV artifact
            // purely tabular.
            print!("{summary}");
            Ok(())
        }
        Command::Convergence {
            config,
            decades,
            output,
        } => {
            let params = resolve_config(&config)?;
            let gammas = parse_decades(&decades)?;
            let csv = convergence_csv(&params, &gammas)?;
            emit(&output, &csv)
        }
        Command::Simulate {
            config,
            paths,
            seed,
            output,
        } => {
            let params = resolve_config(&config)?;
            let report = run_simulate(&params, paths, seed)?;
            emit(&output, &simulate_csv(&report))?;
            print!("{}", simulate_summary(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
