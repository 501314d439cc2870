mod args;
mod commands;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Contribution(a) => commands::contribution(a),
        Command::Iop(a) => commands::iop(a),
        Command::Eop(a) => commands::eop(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Timing(a) => commands::timing(a),
        Command::Validate(a) => commands::validate(a),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code().into());
    }
}
