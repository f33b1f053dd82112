use advdefer_cli::cli::Cli;
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    match cli.into_run_config().and_then(|c| advdefer_cli::run(&c)) {
        Ok(summary) => print!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
