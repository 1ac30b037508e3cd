//! `hexflow` — drive discrete hexagon flows on the triangular lattice,
//! their quantized limit dynamics, and the crystalline comparison flow.

mod config;
mod plot;
mod run;

use clap::{Parser, Subcommand};

use config::ScenarioArgs;
use plot::PlotDataArgs;

#[derive(Debug, Parser)]
#[command(
    name = "hexflow",
    version,
    about = "Hexagon shrinking flows on the triangular lattice",
    long_about = "Runs the discrete minimizing-movements scheme for interfacial \
energies on the triangular lattice, the quantized limit dynamics it converges \
to, and the crystalline comparison flow, writing reproducible CSV/JSON artifacts."
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Melt trajectory tables into long-format `t,series,value` CSV.
    PlotData(PlotDataArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::PlotData(args)) => plot::emit_plot_data(&args),
        None => cli
            .scenario
            .resolve()
            .and_then(|scenario| run::run_scenario(&scenario)),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
