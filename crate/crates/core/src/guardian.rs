//! Client for a Guardian-style content API. Journalist keyword tags become
//! document keywords.
//!
//! All network access goes through [`Transport`], so the client runs offline
//! against fixtures in tests.

use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;
use url::Url;

use crate::corpus::{parse_timestamp, Corpus, CorpusError, Document, LoadReport};

pub const API_KEY_ENV: &str = "GUARDIAN_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://content.guardianapis.com/search";
pub const MAX_PAGE_SIZE: u32 = 200;

#[derive(Debug, Error)]
pub enum GuardianError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited; gave up after {attempts} attempts")]
    RateLimited { attempts: usize },
    #[error("upstream returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Performs one GET request.
pub trait Transport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, GuardianError>;
}

impl<F> Transport for F
where
    F: FnMut(&str) -> Result<HttpResponse, GuardianError>,
{
    fn get(&mut self, url: &str) -> Result<HttpResponse, GuardianError> {
        self(url)
    }
}

/// Serves `page-<n>.json` from a directory, keyed by the `page` parameter.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl Transport for FixtureTransport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, GuardianError> {
        let parsed = Url::parse(url).map_err(|e| GuardianError::Transport(e.to_string()))?;
        let page = parsed
            .query_pairs()
            .find(|(k, _)| k == "page")
            .map(|(_, v)| v.into_owned())
            .unwrap_or_else(|| "1".into());
        let path = self.dir.join(format!("page-{page}.json"));
        match std::fs::read_to_string(&path) {
            Ok(body) => Ok(HttpResponse { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HttpResponse {
                status: 404,
                body: format!("no fixture {}", path.display()),
            }),
            Err(e) => Err(GuardianError::Transport(format!("{}: {e}", path.display()))),
        }
    }
}

#[derive(Clone)]
pub struct ApiQuery {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub section: Option<String>,
    pub page_size: u32,
    pub api_key: String,
}

impl fmt::Debug for ApiQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApiQuery")
            .field("from", &self.from)
            .field("to", &self.to)
            .field("section", &self.section)
            .field("page_size", &self.page_size)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl ApiQuery {
    pub fn new(
        from: NaiveDate,
        to: NaiveDate,
        section: Option<String>,
        page_size: u32,
        api_key: impl Into<String>,
    ) -> Result<Self, GuardianError> {
        let q = Self {
            from,
            to,
            section,
            page_size,
            api_key: api_key.into(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), GuardianError> {
        if self.from > self.to {
            return Err(GuardianError::InvalidQuery(format!(
                "from {} is after to {}",
                self.from, self.to
            )));
        }
        if !(1..=MAX_PAGE_SIZE).contains(&self.page_size) {
            return Err(GuardianError::InvalidQuery(format!(
                "page size {} outside 1..={MAX_PAGE_SIZE}",
                self.page_size
            )));
        }
        if self.api_key.trim().is_empty() {
            return Err(GuardianError::InvalidQuery("empty API key".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match &self.section {
            Some(s) => format!("guardian:{}..{}:{s}", self.from, self.to),
            None => format!("guardian:{}..{}", self.from, self.to),
        }
    }

    fn url(&self, base: &str, page: usize) -> Result<String, GuardianError> {
        let mut params: Vec<(&str, String)> = vec![
            ("from-date", self.from.to_string()),
            ("to-date", self.to.to_string()),
        ];
        if let Some(s) = &self.section {
            params.push(("section", s.clone()));
        }
        params.extend([
            ("page", page.to_string()),
            ("page-size", self.page_size.to_string()),
            ("show-tags", "keyword".to_string()),
            ("api-key", self.api_key.clone()),
        ]);
        Url::parse_with_params(base, &params)
            .map(String::from)
            .map_err(|e| GuardianError::InvalidQuery(format!("base url `{base}`: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RawTag {
    #[serde(rename = "id")]
    pub tag_id: String,
    #[serde(rename = "webTitle")]
    pub tag_title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RawArticle {
    #[serde(rename = "id")]
    pub api_id: String,
    #[serde(rename = "webTitle", default)]
    pub web_title: String,
    #[serde(rename = "webUrl", default)]
    pub web_url: String,
    #[serde(rename = "webPublicationDate", default)]
    pub publication_date: String,
    #[serde(default)]
    pub tags: Vec<RawTag>,
}

#[derive(Debug, Deserialize)]
struct Envelope {
    response: Page,
}

#[derive(Debug, Deserialize)]
struct Page {
    total: usize,
    pages: usize,
    #[serde(default)]
    results: Vec<RawArticle>,
}

/// Tag titles become case-folded keywords. An unparseable date leaves the
/// document undated and logs a warning.
pub fn map_article(raw: &RawArticle) -> Result<Document, GuardianError> {
    if raw.api_id.trim().is_empty() {
        return Err(GuardianError::Malformed("article with empty id".into()));
    }
    let mut doc = Document::new(
        raw.api_id.clone(),
        raw.web_title.clone(),
        raw.tags.iter().map(|t| t.tag_title.as_str()),
    );
    doc.published = parse_timestamp(&raw.publication_date);
    if doc.published.is_none() {
        log::warn!(
            "article {}: unparseable publication date `{}`",
            raw.api_id,
            raw.publication_date
        );
    }
    if !raw.web_url.is_empty() {
        doc.url = Some(raw.web_url.clone());
    }
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    /// Stop after this many pages even if more are reported.
    pub max_pages: Option<usize>,
    /// Retries after a 429 response.
    pub max_retries: usize,
    /// First backoff delay; doubled on every retry.
    pub backoff: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            max_pages: None,
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Delay before retry `attempt` (0-based).
pub fn backoff_delay(base: Duration, attempt: usize) -> Duration {
    base.saturating_mul(1u32 << attempt.min(16))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub requests: usize,
    pub pages: usize,
    pub total_reported: usize,
    pub load: LoadReport,
}

fn get_page<T: Transport>(
    transport: &mut T,
    url: &str,
    cfg: &ClientConfig,
    report: &mut FetchReport,
) -> Result<Page, GuardianError> {
    let mut attempt = 0;
    loop {
        report.requests += 1;
        let resp = transport.get(url)?;
        match resp.status {
            200..=299 => {
                let env: Envelope = serde_json::from_str(&resp.body)
                    .map_err(|e| GuardianError::Malformed(e.to_string()))?;
                return Ok(env.response);
            }
            401 | 403 => return Err(GuardianError::Auth { status: resp.status }),
            429 if attempt < cfg.max_retries => {
                let delay = backoff_delay(cfg.backoff, attempt);
                log::info!("rate limited, retrying in {delay:?}");
                std::thread::sleep(delay);
                attempt += 1;
            }
            429 => {
                return Err(GuardianError::RateLimited {
                    attempts: attempt + 1,
                })
            }
            status => {
                let body: String = resp.body.chars().take(200).collect();
                return Err(GuardianError::Http { status, body });
            }
        }
    }
}

/// Pages through the search results and maps every article to a document.
pub fn fetch_articles<T: Transport>(
    query: &ApiQuery,
    transport: &mut T,
    cfg: &ClientConfig,
) -> Result<(Corpus, FetchReport), GuardianError> {
    query.validate()?;
    let mut report = FetchReport::default();
    let mut docs = Vec::new();
    let mut page_no = 1;
    loop {
        let url = query.url(&cfg.base_url, page_no)?;
        let page = get_page(transport, &url, cfg, &mut report)?;
        report.pages += 1;
        report.total_reported = page.total;
        for raw in &page.results {
            docs.push(map_article(raw)?);
        }
        let capped = cfg.max_pages.is_some_and(|m| page_no >= m);
        if page_no >= page.pages || docs.len() >= page.total || page.results.is_empty() || capped {
            break;
        }
        page_no += 1;
    }
    docs.truncate(report.total_reported);
    let (corpus, load) = Corpus::from_documents(docs, query.describe())?;
    report.load = load;
    Ok((corpus, report))
}
