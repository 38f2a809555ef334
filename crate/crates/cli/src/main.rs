use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use minkowski_tasks::scenario::{
    catalog_names, load_catalog, parse_scenario, render_machine, render_text, run_scenario, Report, RunOptions,
    Scenario, Selection, SimMode,
};

#[derive(Parser, Debug)]
#[command(name = "mtasks", version, about = "Analyse and simulate relativistic information tasks")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    /// Grid resolution for routing in 3+1 dimensions.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the static analyses of a scenario file.
    Check { file: PathBuf },
    /// Simulate the strategies of a scenario file.
    Simulate {
        file: PathBuf,
        /// Replaces the mode of every simulation request.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Trials for `--mode mc`.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run built-in scenarios, all of them when no name is given.
    Catalog {
        name: Option<String>,
        /// List the built-in scenario names and exit.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load_file(path: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(reports: &[Report], format: Format) {
    match format {
        Format::Text => {
            for r in reports {
                print!("{}", render_text(r));
            }
        }
        Format::Machine if reports.len() == 1 => print!("{}", render_machine(&reports[0])),
        Format::Machine => {
            let s = serde_json::to_string_pretty(reports).expect("reports serialize");
            println!("{s}");
        }
    }
}

fn run(cli: Cli) -> Result<Vec<Report>, String> {
    let base = RunOptions {
        resolution: cli.resolution,
        ..RunOptions::default()
    };
    match cli.command {
        Command::Check { file } => {
            let s = load_file(&file)?;
            let opts = RunOptions {
                selection: Selection::Analyses,
                ..base
            };
            Ok(vec![run_scenario(&s, &opts)])
        }
        Command::Simulate {
            file,
            mode,
            trials,
            seed,
        } => {
            let s = load_file(&file)?;
            let opts = RunOptions {
                selection: Selection::Simulations,
                seed,
                mode: mode.map(|m| match m {
                    ModeArg::Exact => SimMode::Exact,
                    ModeArg::Mc => SimMode::MonteCarlo { trials },
                }),
                ..base
            };
            Ok(vec![run_scenario(&s, &opts)])
        }
        Command::Catalog { list: true, .. } => {
            for n in catalog_names() {
                println!("{n}");
            }
            Ok(Vec::new())
        }
        Command::Catalog { name, seed, .. } => {
            let names: Vec<String> = match name {
                Some(n) => vec![n],
                None => catalog_names().into_iter().map(String::from).collect(),
            };
            let mut scenarios = Vec::new();
            for n in &names {
                match load_catalog(n) {
                    None => return Err(format!("unknown catalog scenario `{n}`; try --list")),
                    Some(Err(e)) => return Err(format!("{n}: {e}")),
                    Some(Ok(s)) => scenarios.push(s),
                }
            }
            let opts = RunOptions { seed, ..base };
            // Scenarios are independent, so run them side by side.
            let reports = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|s| scope.spawn(|| run_scenario(s, &opts)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("scenario run panicked")).collect()
            });
            Ok(reports)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Ok(reports) => {
            emit(&reports, format);
            if reports.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_MISMATCH)
            }
        }
    }
}
