//! Document–keyword corpora: loading, validation, serialization, windowing.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("duplicate document id `{id}`")]
    DuplicateId { id: String },
    #[error("inverted window: from {from} is after to {to}")]
    InvertedRange {
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    },
    #[error("unknown corpus format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            _ => Err(CorpusError::UnknownFormat(s.to_string())),
        }
    }
}

/// A news item. Its keyword set is the vertex set of one simplex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub keywords: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    /// Builds a document, case-folding and deduplicating keywords and
    /// discarding blank ones.
    pub fn new<I, S>(id: impl Into<String>, title: impl Into<String>, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            id: id.into(),
            title: title.into(),
            keywords: normalize_keywords(keywords),
            published: None,
            url: None,
        }
    }

    pub fn with_published(mut self, published: DateTime<Utc>) -> Self {
        self.published = Some(published);
        self
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }
}

pub fn normalize_keywords<I, S>(keywords: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    keywords
        .into_iter()
        .map(|k| k.as_ref().trim().to_lowercase())
        .filter(|k| !k.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub source: String,
}

/// Outcome of validating a raw document list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub dropped_empty: usize,
    pub dropped_ids: Vec<String>,
}

impl Corpus {
    /// Validates `documents`: ids must be unique, zero-keyword documents are
    /// dropped and listed in the report.
    pub fn from_documents(
        documents: Vec<Document>,
        source: impl Into<String>,
    ) -> Result<(Self, LoadReport), CorpusError> {
        let mut seen = HashSet::new();
        let mut report = LoadReport::default();
        let mut kept = Vec::with_capacity(documents.len());
        for doc in documents {
            if !seen.insert(doc.id.clone()) {
                return Err(CorpusError::DuplicateId { id: doc.id });
            }
            if doc.keywords.is_empty() {
                report.dropped_empty += 1;
                report.dropped_ids.push(doc.id);
                continue;
            }
            kept.push(doc);
        }
        report.loaded = kept.len();
        Ok((
            Self {
                documents: kept,
                source: source.into(),
            },
            report,
        ))
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.id.as_str()).collect()
    }

    /// Documents with `from <= published < to`, in original order.
    /// Undated documents never fall inside a window.
    pub fn window(&self, from: DateTime<Utc>, to: DateTime<Utc>) -> Result<Self, CorpusError> {
        if from > to {
            return Err(CorpusError::InvertedRange { from, to });
        }
        let documents = self
            .documents
            .iter()
            .filter(|d| d.published.is_some_and(|p| from <= p && p < to))
            .cloned()
            .collect();
        Ok(Self {
            documents,
            source: format!("{} [{} .. {})", self.source, from.to_rfc3339(), to.to_rfc3339()),
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for doc in &self.documents {
            let rec = JsonRecord {
                id: doc.id.clone(),
                title: doc.title.clone(),
                keywords: doc.keywords.iter().cloned().collect(),
                published: doc.published.map(|p| p.to_rfc3339()),
                url: doc.url.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["id", "title", "keywords", "published", "url"])?;
        for doc in &self.documents {
            let keywords = doc.keywords.iter().cloned().collect::<Vec<_>>().join("|");
            let published = doc.published.map(|p| p.to_rfc3339()).unwrap_or_default();
            wtr.write_record([
                doc.id.as_str(),
                doc.title.as_str(),
                keywords.as_str(),
                published.as_str(),
                doc.url.as_deref().unwrap_or(""),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// [`Corpus::window`] as a free function.
pub fn window_corpus(
    corpus: &Corpus,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Result<Corpus, CorpusError> {
    corpus.window(from, to)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    title: String,
    keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    published: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    url: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CsvRecord {
    id: String,
    title: String,
    keywords: String,
    #[serde(default)]
    published: Option<String>,
    #[serde(default)]
    url: Option<String>,
}

/// Parses an ISO-8601 timestamp. Bare dates mean midnight UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(ndt) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(ndt.and_utc());
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|ndt| ndt.and_utc())
}

fn record_to_document(
    path: &Path,
    line: usize,
    id: String,
    title: String,
    keywords: Vec<String>,
    published: Option<String>,
    url: Option<String>,
) -> Result<Document, CorpusError> {
    if id.trim().is_empty() {
        return Err(CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            msg: "empty id".into(),
        });
    }
    let published = match published.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(p) => Some(parse_timestamp(p).ok_or_else(|| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            msg: format!("unparseable timestamp `{p}`"),
        })?),
    };
    let url = url.filter(|u| !u.trim().is_empty());
    let mut doc = Document::new(id, title, keywords);
    doc.published = published;
    doc.url = url;
    Ok(doc)
}

fn read_jsonl(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.to_path_buf(),
                line: lineno,
                msg: e.to_string(),
            })?;
        docs.push(record_to_document(
            path,
            lineno,
            rec.id,
            rec.title,
            rec.keywords,
            rec.published,
            rec.url,
        )?);
    }
    Ok(docs)
}

fn read_csv(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CorpusError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("{other:?}"),
        },
    })?;
    let mut docs = Vec::new();
    for result in rdr.deserialize::<CsvRecord>() {
        let rec = result.map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let keywords = rec.keywords.split('|').map(str::to_string).collect();
        // header is line 1
        let line = docs.len() + 2;
        docs.push(record_to_document(
            path,
            line,
            rec.id,
            rec.title,
            keywords,
            rec.published,
            rec.url,
        )?);
    }
    Ok(docs)
}

/// Loads a corpus file, returning it along with a report of dropped records.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(Corpus, LoadReport), CorpusError> {
    let docs = match format {
        CorpusFormat::Jsonl => read_jsonl(path)?,
        CorpusFormat::Csv => read_csv(path)?,
    };
    Corpus::from_documents(docs, path.display().to_string())
}
