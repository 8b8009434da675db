use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dobkit::stability::SweepParam;
use dobkit_cli::commands::{self, SweepArgs};

/// Disturbance-observer loop analysis, sweeps and simulation.
///
/// Exit status: 0 ok or stable, 1 usage or configuration error,
/// 2 unstable verdict (analyze) or diverged run (simulate).
#[derive(Parser)]
#[command(name = "dobkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Alpha,
    GDob,
}

#[derive(Subcommand)]
enum Command {
    /// Print alpha, compensator phase, stability verdict, Bode integral and peaks.
    Analyze {
        config: PathBuf,
        /// Also write the numbers as a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop poles and robustness figures along a parameter sweep.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: Param,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Geometric spacing between --from and --to.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-domain simulation of the configured scenario.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Magnitude responses of the inner and outer loops.
    Bode {
        config: PathBuf,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Analyze { config, out } => commands::analyze(&config, out.as_deref()),
        Command::Sweep { config, param, from, to, points, log, out } => {
            let param = match param {
                Param::Alpha => SweepParam::Alpha,
                Param::GDob => SweepParam::GDob,
            };
            commands::sweep(&config, &SweepArgs { param, from, to, points, log, out })
        }
        Command::Simulate { config, out } => commands::simulate_cmd(&config, out.as_deref()),
        Command::Bode { config, points, out } => commands::bode(&config, points, out.as_deref()),
    };
    match res {
        Ok(v) => ExitCode::from(v.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
