//! Blocking HTTP client for the `/api/v1` endpoints.

use thiserror::Error;
use ureq::Agent;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request to {url} failed: {source}")]
    Transport { url: String, source: ureq::Error },
    #[error("{method} {path} returned {status}: {body}")]
    Status {
        method: String,
        path: String,
        status: u16,
        body: String,
    },
}

#[derive(Debug, Clone)]
pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or(serde_json::Value::Null)
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

#[derive(Clone)]
pub struct Client {
    base: String,
    agent: Agent,
}

/// `host:port` or a full `http://` URL.
pub fn base_url(addr: &str) -> String {
    let addr = addr.trim_end_matches('/');
    if addr.starts_with("http://") || addr.starts_with("https://") {
        addr.to_owned()
    } else {
        format!("http://{addr}")
    }
}

impl Client {
    pub fn new(addr: &str) -> Self {
        let agent: Agent = Agent::config_builder().http_status_as_error(false).build().into();
        Self {
            base: base_url(addr),
            agent,
        }
    }

    /// Sends one request; `path` is relative to `/api/v1`. Any status is returned.
    pub fn send(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        time: Option<&str>,
        body: Option<&[u8]>,
    ) -> Result<Reply, ClientError> {
        let url = format!("{}{}{}", self.base, ecoq_api::PREFIX, path);
        let request = ureq::http::Request::builder().method(method).uri(&url);
        let request = match token {
            Some(t) => request.header("Authorization", format!("Bearer {t}")),
            None => request,
        };
        let request = match time {
            Some(t) => request.header(ecoq_api::http::TIME_HEADER, t),
            None => request,
        };
        let request = match body {
            Some(_) => request.header("Content-Type", "application/json"),
            None => request,
        };
        let transport = |source: ureq::Error| ClientError::Transport {
            url: url.clone(),
            source,
        };
        let request = request
            .body(body.map(<[u8]>::to_vec).unwrap_or_default())
            .map_err(|e| transport(ureq::Error::Http(e)))?;
        let mut response = self.agent.run(request).map_err(transport)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_vec().map_err(transport)?;
        Ok(Reply { status, body })
    }

    /// Like [`send`](Self::send) but any non-2xx status is an error.
    pub fn ok(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        time: Option<&str>,
        body: Option<&serde_json::Value>,
    ) -> Result<Reply, ClientError> {
        let bytes = body.map(|b| serde_json::to_vec(b).expect("values always serialize"));
        let reply = self.send(method, path, token, time, bytes.as_deref())?;
        if !(200..300).contains(&reply.status) {
            return Err(ClientError::Status {
                method: method.to_owned(),
                path: path.to_owned(),
                status: reply.status,
                body: reply.text(),
            });
        }
        Ok(reply)
    }
}
