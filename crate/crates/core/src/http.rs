//! Minimal JSON-over-HTTP client shared by all remote providers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HttpClient {
    base_url: String,
    agent: ureq::Agent,
    retries: usize,
}

impl HttpClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(120))
            .build();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent,
            retries: 2,
        }
    }

    pub fn with_retries(mut self, retries: usize) -> Self {
        self.retries = retries;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = ureq::AgentBuilder::new().timeout(timeout).build();
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// POSTs `body` to `path`. Transport failures are retried; any non-200
    /// status is a provider error without retry.
    pub fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R> {
        let url = format!("{}{}", self.base_url, path);
        let payload = serde_json::to_value(body)?;
        let mut attempt = 0;
        loop {
            match self.agent.post(&url).send_json(payload.clone()) {
                Ok(resp) if resp.status() == 200 => {
                    return resp
                        .into_json::<R>()
                        .map_err(|e| Error::Provider(format!("{url}: malformed response: {e}")));
                }
                Ok(resp) => {
                    return Err(Error::Provider(format!("{url}: HTTP {}", resp.status())));
                }
                Err(ureq::Error::Status(code, _)) => {
                    return Err(Error::Provider(format!("{url}: HTTP {code}")));
                }
                Err(ureq::Error::Transport(t)) => {
                    if attempt >= self.retries {
                        // ureq transport errors already name the URL
                        return Err(Error::Provider(t.to_string()));
                    }
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(50 * attempt as u64));
                }
            }
        }
    }
}
