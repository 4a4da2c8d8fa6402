use std::net::SocketAddr;

use axum::http::HeaderValue;
use contactkit_service::{app, AppState};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

const USAGE: &str = "usage: contactkit-service [--addr HOST:PORT] [--allow-origin ORIGIN]";

#[tokio::main]
async fn main() {
    let mut addr: SocketAddr = ([127, 0, 0, 1], 8080).into();
    let mut origin: Option<String> = None;
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        let value = args.next();
        match (arg.as_str(), value) {
            ("--addr", Some(v)) => match v.parse() {
                Ok(a) => addr = a,
                Err(e) => exit(&format!("bad --addr {v}: {e}")),
            },
            ("--allow-origin", Some(v)) => origin = Some(v),
            _ => exit(USAGE),
        }
    }
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match origin {
        Some(o) => match HeaderValue::from_str(&o) {
            Ok(v) => cors.allow_origin(AllowOrigin::exact(v)),
            Err(e) => exit(&format!("bad --allow-origin {o}: {e}")),
        },
        None => cors.allow_origin(Any),
    };
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => exit(&format!("cannot bind {addr}: {e}")),
    };
    eprintln!("listening on http://{addr}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, app(AppState::new(), cors)).with_graceful_shutdown(shutdown).await {
        exit(&format!("server error: {e}"));
    }
}

fn exit(message: &str) -> ! {
    eprintln!("{message}");
    std::process::exit(2)
}
