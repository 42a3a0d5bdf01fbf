use clap::Parser;
use lpr_service::{init_logging, run, ServerOptions};

#[derive(Parser)]
#[command(name = "lpr-server", about = "License plate recognition HTTP service")]
struct Cli {
    #[command(flatten)]
    server: ServerOptions,
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    init_logging();
    match run(Cli::parse().server).await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lpr-server: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
