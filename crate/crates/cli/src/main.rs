mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AID_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lad(a) => run::run(args::Problem::Lad, &a),
        Command::Svm(a) => run::run(args::Problem::Svm, &a),
        Command::S3vm(a) => run::run(args::Problem::S3vm, &a),
        Command::Compare { problem, args } => run::compare(problem, &args),
        Command::DiagnoseRates { problem, out, args } => run::diagnose_rates(problem, out.as_deref(), &args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
