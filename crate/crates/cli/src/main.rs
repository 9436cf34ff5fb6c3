use clap::Parser;
use saegt_cli::{error_code, execute, Cli, EXIT_USAGE};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = execute(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        error_code(&e)
    });
    std::process::exit(code);
}
