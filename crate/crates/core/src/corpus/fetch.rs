//! Question-search client: paged advanced search with back-off compliance,
//! bounded retries, and an on-disk response cache keyed by query.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;

use crate::config::FetchConfig;
use crate::error::{Error, Result};

/// Environment variable holding the optional API key.
pub const API_KEY_ENV: &str = "TACTICSCAN_SE_KEY";

/// A question as returned by the search endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize, serde::Serialize)]
pub struct RawQuestion {
    pub question_id: u64,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub link: String,
}

#[derive(Debug, Deserialize)]
struct SearchPage {
    #[serde(default)]
    items: Vec<RawQuestion>,
    #[serde(default)]
    has_more: bool,
    /// Seconds the client must wait before its next request.
    backoff: Option<u64>,
    error_message: Option<String>,
    error_name: Option<String>,
}

type Sleeper = Box<dyn FnMut(Duration) + Send>;

/// Sequential client for the `/search/advanced` endpoint.
pub struct SearchClient {
    agent: ureq::Agent,
    api_base: String,
    api_key: Option<String>,
    max_retries: usize,
    cache_dir: Option<PathBuf>,
    sleeper: Sleeper,
}

impl SearchClient {
    pub fn new(api_base: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
            api_base: api_base.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            max_retries: 3,
            cache_dir: None,
            sleeper: Box::new(std::thread::sleep),
        }
    }

    pub fn from_config(config: &FetchConfig) -> Self {
        let mut client = Self::new(config.api_base.clone());
        client.max_retries = config.max_retries;
        client.cache_dir = config.cache_dir.clone();
        client
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_cache_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    pub fn with_max_retries(mut self, retries: usize) -> Self {
        self.max_retries = retries;
        self
    }

    /// Replace the sleep function; lets tests observe back-off compliance.
    pub fn with_sleeper(mut self, sleeper: impl FnMut(Duration) + Send + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    fn cache_path(&self, keyword: &str, page: usize, page_size: usize) -> Option<PathBuf> {
        let dir = self.cache_dir.as_ref()?;
        let slug: String = keyword
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        Some(dir.join(format!("{slug}-p{page}-s{page_size}.json")))
    }

    fn request_page(&mut self, keyword: &str, page: usize, page_size: usize) -> Result<String> {
        let url = format!("{}/search/advanced", self.api_base);
        let mut last_error = String::new();
        for attempt in 1..=self.max_retries.max(1) {
            let mut request = self
                .agent
                .get(&url)
                .query("q", keyword)
                .query("site", "stackoverflow")
                .query("filter", "withbody")
                .query("page", page.to_string())
                .query("pagesize", page_size.to_string());
            if let Some(key) = &self.api_key {
                request = request.query("key", key);
            }
            match request.call() {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    let text = response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| Error::Http {
                            attempts: attempt,
                            message: e.to_string(),
                        })?;
                    if status == 400 {
                        // the API names its complaint in the body
                        let message = serde_json::from_str::<SearchPage>(&text)
                            .ok()
                            .and_then(|p| match (p.error_name, p.error_message) {
                                (Some(name), Some(msg)) => Some(format!("{name}: {msg}")),
                                (_, Some(msg)) => Some(msg),
                                _ => None,
                            })
                            .unwrap_or_else(|| format!("HTTP 400: {text}"));
                        return Err(Error::Api { message });
                    }
                    if (200..300).contains(&status) {
                        return Ok(text);
                    }
                    last_error = format!("HTTP {status}");
                    log::warn!("attempt {attempt}: {last_error}; retrying");
                }
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("attempt {attempt}: {last_error}; retrying");
                }
            }
            if attempt < self.max_retries.max(1) {
                (self.sleeper)(Duration::from_millis(200 * attempt as u64));
            }
        }
        Err(Error::Http {
            attempts: self.max_retries.max(1),
            message: last_error,
        })
    }

    /// Fetch up to `max_pages` pages of questions matching the keyword.
    ///
    /// Pages are requested sequentially; an advertised back-off is slept
    /// before the next request. The result is deduplicated by question id
    /// and sorted ascending. Cached pages are served from disk without
    /// touching the network.
    pub fn fetch_questions(
        &mut self,
        keyword: &str,
        max_pages: usize,
        page_size: usize,
    ) -> Result<Vec<RawQuestion>> {
        if page_size == 0 || page_size > 100 {
            return Err(Error::Config(format!(
                "page size must be between 1 and 100, got {page_size}"
            )));
        }
        let mut questions = Vec::new();
        let mut pending_backoff: Option<u64> = None;
        for page in 1..=max_pages.max(1) {
            let cache_path = self.cache_path(keyword, page, page_size);
            let cached = cache_path.as_ref().and_then(|p| fs::read_to_string(p).ok());
            let text = match cached {
                Some(text) => text,
                None => {
                    if let Some(seconds) = pending_backoff.take() {
                        (self.sleeper)(Duration::from_secs(seconds));
                    }
                    let text = self.request_page(keyword, page, page_size)?;
                    if let Some(path) = &cache_path {
                        if let Some(parent) = path.parent() {
                            fs::create_dir_all(parent)?;
                        }
                        fs::write(path, &text)?;
                    }
                    text
                }
            };
            let parsed: SearchPage = serde_json::from_str(&text)?;
            questions.extend(parsed.items);
            if let Some(seconds) = parsed.backoff {
                pending_backoff = Some(seconds);
            }
            if !parsed.has_more {
                break;
            }
        }
        questions.sort_by_key(|q| q.question_id);
        questions.dedup_by_key(|q| q.question_id);
        Ok(questions)
    }
}

impl std::fmt::Debug for SearchClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SearchClient")
            .field("api_base", &self.api_base)
            .field("max_retries", &self.max_retries)
            .field("cache_dir", &self.cache_dir)
            .finish_non_exhaustive()
    }
}
