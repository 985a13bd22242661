//! Q-analysis of the document–keyword simplicial complex.
//!
//! Every document is a simplex whose vertices are its keywords: a document
//! with `k` keywords has top dimension `k − 1`. Two documents share a face of
//! dimension `|K_i ∩ K_j| − 1`, which is `−1` when they are disjoint. The
//! directed eccentricity of `i` relative to `j`,
//!
//! ```text
//! ecc(i|j) = (top_dim(i) − shared(i, j)) / (shared(i, j) + 1)
//! ```
//!
//! measures how much of simplex `i` is not covered by its overlap with `j`.
//! It is symmetrized into a dissimilarity and assembled into the cost matrix
//! consumed by the cycle solver.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::tsp::{InstanceSource, TspInstance};

#[derive(Debug, Error, PartialEq)]
pub enum QError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("document {id} has no keywords")]
    EmptySimplex { id: String },
    #[error("document index {index} out of range for {n} documents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("distance matrix needs at least 2 documents, got {0}")]
    TooFewDocuments(usize),
}

/// How the two directed eccentricities of a pair are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizePolicy {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for SymmetrizePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            _ => Err(format!("unknown policy `{s}` (expected mean or max)")),
        }
    }
}

impl std::fmt::Display for SymmetrizePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mean => "mean",
            Self::Max => "max",
        })
    }
}

/// Binary document × keyword incidence, stored as packed bit rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceStructure {
    docs: Vec<String>,
    keywords: Vec<String>,
    words_per_row: usize,
    bits: Vec<u64>,
    counts: Vec<usize>,
}

impl IncidenceStructure {
    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    /// Sorted keyword vocabulary (column order).
    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Number of keywords of document `i`.
    pub fn keyword_count(&self, i: usize) -> usize {
        self.counts[i]
    }

    pub fn contains(&self, doc: usize, keyword: usize) -> bool {
        self.row(doc)[keyword / 64] >> (keyword % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    fn check(&self, i: usize) -> Result<(), QError> {
        if i >= self.docs.len() {
            return Err(QError::IndexOutOfRange {
                index: i,
                n: self.docs.len(),
            });
        }
        Ok(())
    }

    /// `q̂_i = |K_i| − 1`.
    pub fn top_dim(&self, i: usize) -> i64 {
        self.counts[i] as i64 - 1
    }

    fn shared(&self, i: usize, j: usize) -> i64 {
        let common: u32 = self
            .row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        common as i64 - 1
    }

    fn ecc(&self, i: usize, j: usize) -> Option<f64> {
        let q = self.shared(i, j);
        if q < 0 {
            return None;
        }
        Some((self.top_dim(i) - q) as f64 / (q + 1) as f64)
    }

    fn dissim(&self, i: usize, j: usize, policy: SymmetrizePolicy) -> Option<f64> {
        if i == j {
            return Some(0.0);
        }
        let (a, b) = (self.ecc(i, j)?, self.ecc(j, i)?);
        Some(match policy {
            SymmetrizePolicy::Mean => (a + b) / 2.0,
            SymmetrizePolicy::Max => a.max(b),
        })
    }
}

/// Builds the incidence over the sorted union of all keywords.
pub fn build_incidence(corpus: &Corpus) -> Result<IncidenceStructure, QError> {
    if corpus.is_empty() {
        return Err(QError::EmptyCorpus);
    }
    let vocab: BTreeSet<&str> = corpus
        .documents
        .iter()
        .flat_map(|d| d.keywords.iter().map(String::as_str))
        .collect();
    let keywords: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
    let words_per_row = keywords.len().div_ceil(64).max(1);
    let mut bits = vec![0u64; corpus.len() * words_per_row];
    let mut counts = Vec::with_capacity(corpus.len());
    for (i, doc) in corpus.documents.iter().enumerate() {
        if doc.keywords.is_empty() {
            return Err(QError::EmptySimplex { id: doc.id.clone() });
        }
        for kw in &doc.keywords {
            let k = keywords
                .binary_search_by(|probe| probe.as_str().cmp(kw.as_str()))
                .expect("keyword is in the vocabulary");
            bits[i * words_per_row + k / 64] |= 1 << (k % 64);
        }
        counts.push(doc.keywords.len());
    }
    Ok(IncidenceStructure {
        docs: corpus.documents.iter().map(|d| d.id.clone()).collect(),
        keywords,
        words_per_row,
        bits,
        counts,
    })
}

/// `q_ij = |K_i ∩ K_j| − 1`; `−1` means the documents are disjoint.
pub fn shared_face_dim(inc: &IncidenceStructure, i: usize, j: usize) -> Result<i64, QError> {
    inc.check(i)?;
    inc.check(j)?;
    Ok(inc.shared(i, j))
}

/// Directed eccentricity `ecc(i|j)`; `None` when `i` and `j` are disjoint.
pub fn eccentricity_directed(
    inc: &IncidenceStructure,
    i: usize,
    j: usize,
) -> Result<Option<f64>, QError> {
    inc.check(i)?;
    inc.check(j)?;
    Ok(inc.ecc(i, j))
}

/// Symmetrized eccentricity; `None` when disjoint, `0` on the diagonal.
pub fn dissimilarity(
    inc: &IncidenceStructure,
    i: usize,
    j: usize,
    policy: SymmetrizePolicy,
) -> Result<Option<f64>, QError> {
    inc.check(i)?;
    inc.check(j)?;
    Ok(inc.dissim(i, j, policy))
}

/// Dense symmetric matrix of document dissimilarities. Disjoint pairs hold
/// `cap`, which exceeds every finite entry by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub cap: f64,
    pub rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn to_instance(&self, name: impl Into<String>) -> TspInstance {
        TspInstance::from_matrix(name, &self.rows, InstanceSource::Qanalysis)
            .expect("distance matrices are symmetric with zero diagonal")
    }

    /// Header row of ids, then one row of entries per document.
    pub fn to_csv(&self) -> String {
        let mut out = self.ids.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Assembles the capped distance matrix for all documents.
pub fn distance_matrix(
    inc: &IncidenceStructure,
    policy: SymmetrizePolicy,
) -> Result<DistanceMatrix, QError> {
    let n = inc.len();
    if n < 2 {
        return Err(QError::TooFewDocuments(n));
    }
    let mut raw = vec![vec![Some(0.0); n]; n];
    let mut max_finite: Option<f64> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = inc.dissim(i, j, policy);
            if let Some(v) = d {
                max_finite = Some(max_finite.map_or(v, |m: f64| m.max(v)));
            }
            raw[i][j] = d;
            raw[j][i] = d;
        }
    }
    let cap = max_finite.map_or(1.0, |m| m + 1.0);
    let rows = raw
        .into_iter()
        .map(|row| row.into_iter().map(|d| d.unwrap_or(cap)).collect())
        .collect();
    Ok(DistanceMatrix {
        ids: inc.docs.clone(),
        cap,
        rows,
    })
}

/// q-connected components among documents with `q̂ ≥ q`. Each component is
/// sorted; components are ordered by their smallest member.
pub fn q_components(inc: &IncidenceStructure, q: usize) -> Vec<Vec<usize>> {
    let q = q as i64;
    let eligible: Vec<usize> = (0..inc.len()).filter(|&i| inc.top_dim(i) >= q).collect();
    let mut parent: Vec<usize> = (0..inc.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, &i) in eligible.iter().enumerate() {
        for &j in &eligible[a + 1..] {
            if inc.shared(i, j) >= q {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; inc.len()];
    for &i in &eligible {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Component counts for `q = max q̂, …, 0`.
pub fn structure_vector(inc: &IncidenceStructure) -> Vec<usize> {
    let top = (0..inc.len()).map(|i| inc.top_dim(i)).max().unwrap_or(-1);
    (0..=top.max(-1))
        .rev()
        .map(|q| q_components(inc, q as usize).len())
        .collect()
}
