//! Demo scenario files.
//!
//! One JSON object per line, blank lines and lines starting with `#` skipped:
//!
//! ```text
//! {"method": "POST", "path": "/events", "token": "organizer", "time": "...", "body": {...},
//!  "expect": 201, "save": {"event": "/event_id"}}
//! ```
//!
//! `path` is relative to `/api/v1`. `token` is `organizer`, omitted (none), or a
//! literal. `save` stores JSON-pointer lookups of the response under a name;
//! later lines refer to them as `${name}` anywhere in the line.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::client::{Client, ClientError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedStep {
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub token: Option<String>,
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub body: Option<serde_json::Value>,
    #[serde(default)]
    pub expect: Option<u16>,
    #[serde(default)]
    pub save: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Request { line: usize, source: ClientError },
    #[error("line {line}: expected status {expected}, got {got}: {body}")]
    Unexpected {
        line: usize,
        expected: String,
        got: u16,
        body: String,
    },
    #[error("line {line}: response has nothing at `{pointer}`")]
    Missing { line: usize, pointer: String },
}

/// Replaces every `${name}` with its saved value.
pub fn substitute(text: &str, vars: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or("unterminated `${`")?;
        let name = &after[..end];
        let value = vars.get(name).ok_or_else(|| format!("unknown variable `{name}`"))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Default)]
pub struct SeedReport {
    pub requests: usize,
    pub vars: BTreeMap<String, String>,
}

pub fn run_seed(client: &Client, organizer_token: &str, script: &str) -> Result<SeedReport, SeedError> {
    let mut report = SeedReport::default();
    for (i, raw) in script.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let text = substitute(raw, &report.vars).map_err(|reason| SeedError::Parse { line, reason })?;
        let step: SeedStep = serde_json::from_str(&text).map_err(|e| SeedError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let token = match step.token.as_deref() {
            Some("organizer") => Some(organizer_token),
            other => other,
        };
        let body = step.body.as_ref().map(|b| serde_json::to_vec(b).expect("values always serialize"));
        let reply = client
            .send(&step.method, &step.path, token, step.time.as_deref(), body.as_deref())
            .map_err(|source| SeedError::Request { line, source })?;
        let accepted = match step.expect {
            Some(code) => reply.status == code,
            None => (200..300).contains(&reply.status),
        };
        if !accepted {
            return Err(SeedError::Unexpected {
                line,
                expected: step.expect.map_or("2xx".to_owned(), |c| c.to_string()),
                got: reply.status,
                body: reply.text(),
            });
        }
        let json = reply.json();
        for (name, pointer) in &step.save {
            let value = json.pointer(pointer).ok_or_else(|| SeedError::Missing {
                line,
                pointer: pointer.clone(),
            })?;
            let value = match value {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            report.vars.insert(name.clone(), value);
        }
        report.requests += 1;
    }
    Ok(report)
}
