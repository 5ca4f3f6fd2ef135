use std::io::Read;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("network access is disabled")]
    Offline,
    #[error("not found")]
    NotFound,
    #[error("{0}")]
    Failed(String),
}

/// Source of remote bytes, injected so publication can run hermetically.
pub trait Fetcher: Sync {
    fn fetch(&self, url: &str) -> Result<Vec<u8>, FetchError>;
}

/// Refuses every request.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineFetcher;

impl Fetcher for OfflineFetcher {
    fn fetch(&self, _url: &str) -> Result<Vec<u8>, FetchError> {
        Err(FetchError::Offline)
    }
}

/// HTTP(S) GET with a per-request timeout and a fixed number of retries.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    agent: ureq::Agent,
    retries: u32,
}

const MAX_BODY_BYTES: u64 = 64 * 1024 * 1024;

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new(Duration::from_secs(15), 2)
    }
}

impl HttpFetcher {
    pub fn new(timeout: Duration, retries: u32) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            retries,
        }
    }

    fn attempt(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        match self.agent.get(url).call() {
            Ok(resp) => {
                let mut body = Vec::new();
                resp.into_reader()
                    .take(MAX_BODY_BYTES)
                    .read_to_end(&mut body)
                    .map_err(|e| FetchError::Failed(e.to_string()))?;
                Ok(body)
            }
            Err(ureq::Error::Status(404 | 410, _)) => Err(FetchError::NotFound),
            Err(e) => Err(FetchError::Failed(e.to_string())),
        }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        let mut last = FetchError::Failed("no attempt made".into());
        for _ in 0..=self.retries {
            match self.attempt(url) {
                Ok(body) => return Ok(body),
                Err(FetchError::NotFound) => return Err(FetchError::NotFound),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}
