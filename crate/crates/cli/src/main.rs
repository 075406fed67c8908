use clap::error::ErrorKind;
use clap::Parser;
use stratflow_cli::{main_with, Cli, EXIT_CONFIG};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            std::process::exit(code);
        }
    };
    std::process::exit(main_with(&cli));
}
