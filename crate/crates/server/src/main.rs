use clap::Parser;
use std::process::ExitCode;

use voxchat_server::{router, AppState, ServerConfig};

#[tokio::main]
async fn main() -> ExitCode {
    let config = ServerConfig::parse();
    let deps = match config.session_deps() {
        Ok(deps) => deps,
        Err(e) => {
            eprintln!("voxchat-server: {e}");
            return ExitCode::from(2);
        }
    };
    let listener = match tokio::net::TcpListener::bind(config.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("voxchat-server: cannot bind {}: {e}", config.bind);
            return ExitCode::FAILURE;
        }
    };
    eprintln!("voxchat-server listening on http://{} ({:?} provider)", config.bind, config.provider);
    if let Err(e) = axum::serve(listener, router(AppState::new(deps))).await {
        eprintln!("voxchat-server: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
