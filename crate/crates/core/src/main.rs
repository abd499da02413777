use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use windtopo::run::{print_summary, run, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "windtopo", version, about = "Wind farm layout optimisation on a candidate grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the layout problem described by a JSON config
    Run {
        config: PathBuf,
        /// Output directory (overrides the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed for the genetic algorithm
        #[arg(long)]
        seed: Option<u64>,
        /// Also write deficit matrices and neighbour pairs
        #[arg(long)]
        dump_tensor: bool,
        /// Wind direction of the flow-field figure [deg]
        #[arg(long, allow_negative_numbers = true)]
        flow_direction: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            dump_tensor,
            flow_direction,
        } => {
            let options = RunOptions {
                out_dir: out,
                seed,
                dump_tensor,
                flow_direction,
                flow_resolution: None,
            };
            match run(&config, &options) {
                Ok(output) => {
                    let _ = print_summary(&mut std::io::stdout(), &output);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
