//! Renders a document cycle as JSON-ready data, a DOT graph, and a static
//! HTML reading list.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::aco::DocumentCycle;
use crate::corpus::Corpus;
use crate::qanalysis::DistanceMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("order is not a cycle over the {n} documents: {reason}")]
    InvalidCycle { n: usize, reason: String },
}

fn check_cycle(n: usize, order: &[usize]) -> Result<(), ReportError> {
    let invalid = |reason: String| Err(ReportError::InvalidCycle { n, reason });
    if order.len() != n {
        return invalid(format!("{} entries", order.len()));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return invalid(format!("bad or repeated index {i}"));
        }
    }
    Ok(())
}

/// Mean hop distance around the cycle; lower reads more coherently.
pub fn coherence_score(matrix: &DistanceMatrix, order: &[usize]) -> Result<f64, ReportError> {
    let n = matrix.len();
    check_cycle(n, order)?;
    if n == 0 {
        return Err(ReportError::InvalidCycle {
            n,
            reason: "empty".into(),
        });
    }
    let total: f64 = (0..n).map(|k| matrix.get(order[k], order[(k + 1) % n])).sum();
    Ok(total / n as f64)
}

/// The cycle as written to `cycle.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub ids: Vec<String>,
    pub hops: Vec<f64>,
    pub total_length: f64,
    /// Mean hop distance (total length / n).
    pub coherence_score: f64,
    pub cap: f64,
}

impl CycleReport {
    pub fn new(cycle: &DocumentCycle, matrix: &DistanceMatrix) -> Result<Self, ReportError> {
        Ok(Self {
            ids: cycle.ids.clone(),
            hops: cycle.hops.clone(),
            total_length: cycle.total_length,
            coherence_score: coherence_score(matrix, &cycle.order)?,
            cap: matrix.cap,
        })
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Undirected DOT graph with one node per document and one edge per hop.
pub fn cycle_dot(cycle: &DocumentCycle, corpus: &Corpus) -> String {
    let mut out = String::from("graph cycle {\n  node [shape=box];\n");
    for id in &cycle.ids {
        let title = corpus
            .documents
            .iter()
            .find(|d| &d.id == id)
            .map_or("", |d| d.title.as_str());
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", dot_escape(id), dot_escape(title));
    }
    let n = cycle.ids.len();
    for k in 0..n {
        let _ = writeln!(
            out,
            "  \"{}\" -- \"{}\" [label=\"{:.4}\"];",
            dot_escape(&cycle.ids[k]),
            dot_escape(&cycle.ids[(k + 1) % n]),
            cycle.hops[k]
        );
    }
    out.push_str("}\n");
    out
}

fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Static reading list: one `<li class="doc">` per document in cycle order.
pub fn cycle_html(report: &CycleReport, corpus: &Corpus) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>News cycle</title>\n\
<style>body{font-family:sans-serif;max-width:50em;margin:2em auto}\
li.doc{margin:0.8em 0}.kw{color:#555;font-size:0.9em}.hop{color:#888;font-size:0.8em}</style>\n\
</head>\n<body>\n<h1>News in semantic order</h1>\n",
    );
    let _ = writeln!(
        out,
        "<p>{} documents. Coherence score (mean hop distance, lower is better): {:.4}. Total cycle length: {:.4}.</p>",
        report.ids.len(),
        report.coherence_score,
        report.total_length
    );
    out.push_str("<ol>\n");
    for (k, id) in report.ids.iter().enumerate() {
        let doc = corpus.documents.iter().find(|d| &d.id == id);
        let title = doc.map_or(id.as_str(), |d| d.title.as_str());
        let _ = write!(out, "<li class=\"doc\" id=\"{}\">", html_escape(id));
        match doc.and_then(|d| d.url.as_deref()) {
            Some(url) => {
                let _ = write!(out, "<a href=\"{}\">{}</a>", html_escape(url), html_escape(title));
            }
            None => out.push_str(&html_escape(title)),
        }
        if let Some(p) = doc.and_then(|d| d.published) {
            let _ = write!(out, " <small>{}</small>", p.format("%Y-%m-%d"));
        }
        if let Some(d) = doc {
            let kws: Vec<String> = d.keywords.iter().map(|k| html_escape(k)).collect();
            let _ = write!(out, "<div class=\"kw\">{}</div>", kws.join(", "));
        }
        let _ = write!(out, "<div class=\"hop\">next: {:.4}</div>", report.hops[k]);
        out.push_str("</li>\n");
    }
    out.push_str("</ol>\n</body>\n</html>\n");
    out
}
