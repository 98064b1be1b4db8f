use clap::Parser;
use shakegrid_cli::config::{resolve, Cli};
use shakegrid_cli::run::execute;

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let resolved = match resolve(cli) {
        Ok(r) => r,
        Err(failure) => {
            eprintln!("{}", failure.render());
            return std::process::ExitCode::from(failure.exit_code);
        }
    };
    match execute(&resolved) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.render());
            std::process::ExitCode::from(failure.exit_code)
        }
    }
}
