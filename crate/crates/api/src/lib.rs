//! HTTP facade over the EcoQ domain.
//!
//! [`route_request`] does all the work and knows nothing about sockets; the
//! [`http`] module only adapts axum requests to it.

pub mod auth;
pub mod config;
pub mod error;
pub mod http;
pub mod routes;
pub mod service;

pub use auth::{ApiToken, AuthError, Role, TokenAuthority};
pub use config::Config;
pub use error::ApiError;
pub use routes::{route_request, ApiRequest, ApiResponse, PREFIX};
pub use service::Service;

/// Opens the configured storage and serves on `config.addr` until the process exits.
pub fn serve(config: Config) -> Result<(), Box<dyn std::error::Error>> {
    let addr = config.addr;
    let service = std::sync::Arc::new(Service::open(config)?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        http::serve_listener(listener, service).await
    })?;
    Ok(())
}
