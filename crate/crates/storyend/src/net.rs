//! Shared plumbing for remote endpoints: retrying JSON POSTs and the
//! append-only request/response archive.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("{0}")]
    Credential(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("HTTP {status} after {attempts} attempt(s): {body}")]
    Http {
        status: u16,
        attempts: u32,
        body: String,
    },
    #[error("response was not valid JSON: {0}")]
    InvalidResponse(String),
    #[error("cannot write exchange log: {0}")]
    Log(String),
}

/// Retry schedule for rate limits and transient transport errors:
/// `max_attempts` tries total, sleeping `initial_backoff` doubled after
/// each failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            initial_backoff_ms: 1000,
        }
    }
}

/// One archived remote call.
#[derive(Debug, Serialize)]
struct Exchange<'a> {
    unix_ms: u128,
    context: &'a str,
    attempt: u32,
    status: Option<u16>,
    latency_ms: u128,
    request: &'a Value,
    response: Value,
}

/// Append-only JSONL archive of remote exchanges; safe to share across
/// worker threads.
pub struct ExchangeLog {
    file: Mutex<std::fs::File>,
}

impl ExchangeLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path.as_ref())
            .map_err(|e| NetError::Log(e.to_string()))?;
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    fn append(&self, exchange: &Exchange<'_>) -> Result<(), NetError> {
        let line = serde_json::to_string(exchange).map_err(|e| NetError::Log(e.to_string()))?;
        let mut file = self.file.lock().expect("exchange log lock");
        writeln!(file, "{line}").map_err(|e| NetError::Log(e.to_string()))?;
        file.flush().map_err(|e| NetError::Log(e.to_string()))
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..=599).contains(&status)
}

/// POSTs `body` as JSON, retrying rate limits (429), server errors (5xx),
/// and transport failures per `policy`. Client errors other than 429 fail
/// immediately. Every attempt, including failures, is appended to `log`
/// when one is given. Returns the parsed response and how many attempts
/// were used.
pub fn post_json_with_retry(
    client: &reqwest::blocking::Client,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    policy: &RetryPolicy,
    log: Option<(&ExchangeLog, &str)>,
) -> Result<(Value, u32), NetError> {
    let max_attempts = policy.max_attempts.max(1);
    let mut backoff = Duration::from_millis(policy.initial_backoff_ms);

    for attempt in 1..=max_attempts {
        let started = Instant::now();
        let mut request = client.post(url).json(body);
        if let Some(token) = bearer {
            request = request.bearer_auth(token);
        }
        let outcome = request.send();
        let latency_ms = started.elapsed().as_millis();

        match outcome {
            Ok(response) => {
                let status = response.status().as_u16();
                let text = response.text().unwrap_or_default();
                let parsed: Value = serde_json::from_str(&text)
                    .unwrap_or_else(|_| Value::String(text.clone()));
                if let Some((log, context)) = log {
                    log.append(&Exchange {
                        unix_ms: now_ms(),
                        context,
                        attempt,
                        status: Some(status),
                        latency_ms,
                        request: body,
                        response: parsed.clone(),
                    })?;
                }
                if (200..300).contains(&status) {
                    if parsed.is_string() && serde_json::from_str::<Value>(&text).is_err() {
                        return Err(NetError::InvalidResponse(truncate(&text)));
                    }
                    return Ok((parsed, attempt));
                }
                if retryable_status(status) && attempt < max_attempts {
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    continue;
                }
                return Err(NetError::Http {
                    status,
                    attempts: attempt,
                    body: truncate(&text),
                });
            }
            Err(e) => {
                if let Some((log, context)) = log {
                    log.append(&Exchange {
                        unix_ms: now_ms(),
                        context,
                        attempt,
                        status: None,
                        latency_ms,
                        request: body,
                        response: Value::String(e.to_string()),
                    })?;
                }
                if attempt < max_attempts {
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    continue;
                }
                return Err(NetError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                });
            }
        }
    }
    unreachable!("loop returns on the last attempt")
}

fn truncate(text: &str) -> String {
    const LIMIT: usize = 400;
    if text.len() <= LIMIT {
        text.to_string()
    } else {
        let cut = text
            .char_indices()
            .take_while(|(i, _)| *i < LIMIT)
            .last()
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        format!("{}…", &text[..cut])
    }
}
