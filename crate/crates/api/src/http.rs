//! axum adapter: turns HTTP requests into [`ApiRequest`]s.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::{Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Router;
use chrono::{DateTime, Utc};

use crate::routes::{route_request, ApiRequest, ApiResponse};
use crate::service::Service;

/// Optional header carrying the request time (RFC 3339).
pub const TIME_HEADER: &str = "x-ecoq-time";
const MAX_BODY_BYTES: usize = 1 << 20;

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(handle).with_state(service)
}

fn plain(status: StatusCode, message: &str) -> Response {
    let body = serde_json::json!({ "error": "bad_request", "message": message });
    (status, [(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response()
}

async fn handle(State(service): State<Arc<Service>>, request: Request) -> Response {
    let (parts, body) = request.into_parts();
    let now = match parts.headers.get(TIME_HEADER).map(HeaderValue::to_str) {
        None => Utc::now(),
        Some(Ok(text)) => match DateTime::parse_from_rfc3339(text) {
            Ok(t) => t.with_timezone(&Utc),
            Err(_) => return plain(StatusCode::BAD_REQUEST, "X-Ecoq-Time must be RFC 3339"),
        },
        Some(Err(_)) => return plain(StatusCode::BAD_REQUEST, "X-Ecoq-Time must be RFC 3339"),
    };
    let token = parts
        .headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::to_owned);
    let body = match to_bytes(body, MAX_BODY_BYTES).await {
        Ok(b) => b.to_vec(),
        Err(_) => return plain(StatusCode::PAYLOAD_TOO_LARGE, "body too large"),
    };
    let api_request = ApiRequest {
        method: parts.method.as_str().to_owned(),
        path: parts.uri.path().to_owned(),
        query: parts.uri.query().unwrap_or_default().to_owned(),
        body,
        token,
        now,
    };
    // handlers take blocking locks and fsync
    let response = tokio::task::spawn_blocking(move || route_request(&service, &api_request)).await;
    match response {
        Ok(r) => into_http(r),
        Err(_) => plain(StatusCode::INTERNAL_SERVER_ERROR, "handler panicked"),
    }
}

fn into_http(r: ApiResponse) -> Response {
    let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let mut response = Response::new(Body::from(r.body));
    *response.status_mut() = status;
    response
        .headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(r.content_type));
    response
}

/// Serves until the process ends.
pub async fn serve_listener(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}

/// A server running on its own thread and runtime.
pub struct Background {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl Background {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Background {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<Background> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            axum::serve(listener, router(service))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(Background {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
