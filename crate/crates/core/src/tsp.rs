//! Symmetric TSP instances, a TSPLIB subset parser, and small exact oracles.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest instance accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum TspError {
    #[error("TSPLIB: missing mandatory key {0}")]
    MissingKey(&'static str),
    #[error("TSPLIB: unsupported {key} `{value}`")]
    Unsupported { key: &'static str, value: String },
    #[error("TSPLIB: line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("TSPLIB: DIMENSION is {expected} but {found} {what} were given")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        what: &'static str,
    },
    #[error("cost matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("invalid cost {value} at ({row}, {col})")]
    InvalidCost { row: usize, col: usize, value: f64 },
    #[error("not a permutation of 0..{n}: {reason}")]
    NotAPermutation { n: usize, reason: String },
    #[error("city {city} out of range for {n} cities")]
    CityOutOfRange { city: usize, n: usize },
    #[error("brute force refused: {n} cities exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("instance needs at least {min} cities, got {n}")]
    TooSmall { n: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceSource {
    TsplibEuc2d,
    TsplibExplicit,
    Qanalysis,
    Synthetic,
}

/// A symmetric cost matrix over `n` cities.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    name: String,
    n: usize,
    cost: Vec<f64>,
    source: InstanceSource,
    coords: Option<Vec<(f64, f64)>>,
}

impl TspInstance {
    /// Builds an instance from a row-major `n × n` matrix, checking symmetry,
    /// a zero diagonal and finite nonnegative entries.
    pub fn from_matrix(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        source: InstanceSource,
    ) -> Result<Self, TspError> {
        let n = rows.len();
        let mut cost = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TspError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                    what: "matrix columns",
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 || (i == j && v != 0.0) {
                    return Err(TspError::InvalidCost {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            cost.extend_from_slice(row);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if cost[i * n + j] != cost[j * n + i] {
                    return Err(TspError::Asymmetric(i, j));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            cost,
            source,
            coords: None,
        })
    }

    /// Euclidean instance with TSPLIB `EUC_2D` rounding.
    pub fn euc_2d(name: impl Into<String>, coords: Vec<(f64, f64)>) -> Self {
        let n = coords.len();
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euc_2d_distance(coords[i], coords[j]);
                cost[i * n + j] = d;
                cost[j * n + i] = d;
            }
        }
        Self {
            name: name.into(),
            n,
            cost,
            source: InstanceSource::TsplibEuc2d,
            coords: Some(coords),
        }
    }

    /// Unrounded Euclidean distances between points, tagged synthetic.
    pub fn euclidean(name: impl Into<String>, points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                let d = (dx * dx + dy * dy).sqrt();
                cost[i * n + j] = d;
                cost[j * n + i] = d;
            }
        }
        Self {
            name: name.into(),
            n,
            cost,
            source: InstanceSource::Synthetic,
            coords: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn source(&self) -> InstanceSource {
        self.source
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.n..(i + 1) * self.n]
    }

    /// Errors unless the instance admits a Hamiltonian cycle problem (n ≥ 3).
    pub fn require_cycle(&self) -> Result<(), TspError> {
        if self.n < 3 {
            return Err(TspError::TooSmall { n: self.n, min: 3 });
        }
        Ok(())
    }

    /// Serializes to TSPLIB text: coordinates for `EUC_2D`, otherwise a
    /// `FULL_MATRIX` explicit section.
    pub fn to_tsplib(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NAME : {}", self.name);
        let _ = writeln!(out, "TYPE : TSP");
        let _ = writeln!(out, "DIMENSION : {}", self.n);
        match &self.coords {
            Some(coords) => {
                let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
                let _ = writeln!(out, "NODE_COORD_SECTION");
                for (i, (x, y)) in coords.iter().enumerate() {
                    let _ = writeln!(out, "{} {} {}", i + 1, x, y);
                }
            }
            None => {
                let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EXPLICIT");
                let _ = writeln!(out, "EDGE_WEIGHT_FORMAT : FULL_MATRIX");
                let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
                for i in 0..self.n {
                    let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(out, "{}", row.join(" "));
                }
            }
        }
        out.push_str("EOF\n");
        out
    }
}

/// TSPLIB `nint` of the Euclidean distance: round half up.
pub fn euc_2d_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    ((dx * dx + dy * dy).sqrt() + 0.5).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WeightFormat {
    FullMatrix,
    UpperRow,
    LowerDiagRow,
}

enum Section {
    Header,
    Coords,
    Weights,
    Skip,
}

/// Parses the supported TSPLIB subset (`EUC_2D`, and `EXPLICIT` with
/// `FULL_MATRIX`, `UPPER_ROW` or `LOWER_DIAG_ROW`).
pub fn parse_tsplib(text: &str) -> Result<TspInstance, TspError> {
    let mut header: HashMap<String, String> = HashMap::new();
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut section = Section::Header;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let upper = line.to_ascii_uppercase();
        if upper.ends_with("_SECTION") {
            section = match upper.as_str() {
                "NODE_COORD_SECTION" => Section::Coords,
                "EDGE_WEIGHT_SECTION" => Section::Weights,
                _ => Section::Skip,
            };
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim().to_ascii_uppercase();
            if key.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                header.insert(key, value.trim().to_string());
                section = Section::Header;
                continue;
            }
        }
        match section {
            Section::Coords => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(TspError::Syntax {
                        line: lineno,
                        msg: format!("expected `index x y`, got `{line}`"),
                    });
                }
                let parse = |s: &str| {
                    s.parse::<f64>().map_err(|_| TspError::Syntax {
                        line: lineno,
                        msg: format!("bad number `{s}`"),
                    })
                };
                coords.push((parse(fields[1])?, parse(fields[2])?));
            }
            Section::Weights => {
                for tok in line.split_whitespace() {
                    let v = tok.parse::<f64>().map_err(|_| TspError::Syntax {
                        line: lineno,
                        msg: format!("bad number `{tok}`"),
                    })?;
                    weights.push(v);
                }
            }
            Section::Skip => {}
            Section::Header => {
                return Err(TspError::Syntax {
                    line: lineno,
                    msg: format!("unexpected line `{line}`"),
                });
            }
        }
    }

    let n: usize = header
        .get("DIMENSION")
        .ok_or(TspError::MissingKey("DIMENSION"))?
        .parse()
        .map_err(|_| TspError::Syntax {
            line: 0,
            msg: "DIMENSION is not an integer".into(),
        })?;
    let name = header.get("NAME").cloned().unwrap_or_else(|| "unnamed".into());
    if let Some(kind) = header.get("TYPE") {
        if !kind.eq_ignore_ascii_case("TSP") {
            return Err(TspError::Unsupported {
                key: "TYPE",
                value: kind.clone(),
            });
        }
    }
    let weight_type = header
        .get("EDGE_WEIGHT_TYPE")
        .ok_or(TspError::MissingKey("EDGE_WEIGHT_TYPE"))?
        .to_ascii_uppercase();

    match weight_type.as_str() {
        "EUC_2D" => {
            if coords.len() != n {
                return Err(TspError::DimensionMismatch {
                    expected: n,
                    found: coords.len(),
                    what: "coordinates",
                });
            }
            Ok(TspInstance::euc_2d(name, coords))
        }
        "EXPLICIT" => {
            let fmt_name = header
                .get("EDGE_WEIGHT_FORMAT")
                .ok_or(TspError::MissingKey("EDGE_WEIGHT_FORMAT"))?
                .to_ascii_uppercase();
            let fmt = match fmt_name.as_str() {
                "FULL_MATRIX" => WeightFormat::FullMatrix,
                "UPPER_ROW" => WeightFormat::UpperRow,
                "LOWER_DIAG_ROW" => WeightFormat::LowerDiagRow,
                _ => {
                    return Err(TspError::Unsupported {
                        key: "EDGE_WEIGHT_FORMAT",
                        value: fmt_name,
                    })
                }
            };
            let rows = explicit_rows(n, fmt, &weights)?;
            TspInstance::from_matrix(name, &rows, InstanceSource::TsplibExplicit)
        }
        _ => Err(TspError::Unsupported {
            key: "EDGE_WEIGHT_TYPE",
            value: weight_type,
        }),
    }
}

fn explicit_rows(n: usize, fmt: WeightFormat, w: &[f64]) -> Result<Vec<Vec<f64>>, TspError> {
    let expected = match fmt {
        WeightFormat::FullMatrix => n * n,
        WeightFormat::UpperRow => n * n.saturating_sub(1) / 2,
        WeightFormat::LowerDiagRow => n * (n + 1) / 2,
    };
    if w.len() != expected {
        return Err(TspError::DimensionMismatch {
            expected,
            found: w.len(),
            what: "edge weights",
        });
    }
    let mut rows = vec![vec![0.0; n]; n];
    let mut it = w.iter().copied();
    match fmt {
        WeightFormat::FullMatrix => {
            for row in rows.iter_mut() {
                for v in row.iter_mut() {
                    *v = it.next().unwrap_or_default();
                }
            }
        }
        WeightFormat::UpperRow => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = it.next().unwrap_or_default();
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
        }
        WeightFormat::LowerDiagRow => {
            for i in 0..n {
                for j in 0..=i {
                    let v = it.next().unwrap_or_default();
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
        }
    }
    Ok(rows)
}

/// A Hamiltonian cycle and its total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    /// Evaluates `order` on `inst`.
    pub fn new(inst: &TspInstance, order: Vec<usize>) -> Result<Self, TspError> {
        let length = tour_length(inst, &order)?;
        Ok(Self { order, length })
    }

    /// Undirected edges `(min, max)` of the cycle, closing edge included.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |k| {
            let (a, b) = (self.order[k], self.order[(k + 1) % n]);
            (a.min(b), a.max(b))
        })
    }
}

fn check_permutation(n: usize, order: &[usize]) -> Result<(), TspError> {
    if order.len() != n {
        return Err(TspError::NotAPermutation {
            n,
            reason: format!("length {}", order.len()),
        });
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n {
            return Err(TspError::NotAPermutation {
                n,
                reason: format!("city {c} out of range"),
            });
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(TspError::NotAPermutation {
                n,
                reason: format!("city {c} repeated"),
            });
        }
    }
    Ok(())
}

/// Total cost of the closed cycle `order`.
pub fn tour_length(inst: &TspInstance, order: &[usize]) -> Result<f64, TspError> {
    check_permutation(inst.len(), order)?;
    Ok(cycle_cost(inst, order))
}

/// Summation used everywhere a cycle is priced, in visiting order.
#[inline]
pub(crate) fn cycle_cost(inst: &TspInstance, order: &[usize]) -> f64 {
    let n = order.len();
    let mut total = 0.0;
    for k in 0..n {
        total += inst.cost(order[k], order[(k + 1) % n]);
    }
    total
}

/// Rotates the cycle to start at city 0 and orients it so the second city
/// is smaller than the last one.
pub fn canonical_order(order: &[usize]) -> Vec<usize> {
    let n = order.len();
    if n == 0 {
        return Vec::new();
    }
    let start = order.iter().position(|&c| c == 0).unwrap_or(0);
    let mut out: Vec<usize> = (0..n).map(|k| order[(start + k) % n]).collect();
    if n > 2 && out[1] > out[n - 1] {
        out[1..].reverse();
    }
    out
}

/// Exact optimum by enumerating the (n−1)!/2 distinct cycles through city 0.
/// Ties resolve to the lexicographically smallest order.
pub fn brute_force_optimum(inst: &TspInstance) -> Result<Tour, TspError> {
    let n = inst.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n == 0 {
        return Err(TspError::TooSmall { n, min: 1 });
    }
    if n <= 3 {
        let order: Vec<usize> = (0..n).collect();
        return Tour::new(inst, order);
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if rest[0] < rest[rest.len() - 1] {
            let mut order = Vec::with_capacity(n);
            order.push(0);
            order.extend_from_slice(&rest);
            let len = cycle_cost(inst, &order);
            if best.as_ref().is_none_or(|(b, _)| len < *b) {
                best = Some((len, order));
            }
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let (length, order) = best.expect("at least one cycle exists");
    Ok(Tour { order, length })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Greedy tour from `start`; ties go to the lowest city index.
pub fn nearest_neighbour(inst: &TspInstance, start: usize) -> Result<Tour, TspError> {
    let n = inst.len();
    if start >= n {
        return Err(TspError::CityOutOfRange { city: start, n });
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = start;
    visited[current] = true;
    order.push(current);
    for _ in 1..n {
        let mut next = None;
        let mut best = f64::INFINITY;
        for (j, &c) in inst.row(current).iter().enumerate() {
            if !visited[j] && c < best {
                best = c;
                next = Some(j);
            }
        }
        let next = next.expect("an unvisited city remains");
        visited[next] = true;
        order.push(next);
        current = next;
    }
    Tour::new(inst, order)
}

/// Best-known tour lengths for named instances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimumCatalog {
    entries: HashMap<String, f64>,
}

/// The catalog shipped with the crate.
pub const BUNDLED_OPTIMA: &str = include_str!("../data/optima.csv");

impl OptimumCatalog {
    /// Parses `instance,best_known` CSV with a header row.
    pub fn parse(text: &str) -> Result<Self, TspError> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed = line
                .split_once(',')
                .and_then(|(name, v)| Some((name.trim(), v.trim().parse::<f64>().ok()?)));
            let Some((name, value)) = parsed else {
                return Err(TspError::Syntax {
                    line: idx + 1,
                    msg: format!("expected `instance,best_known`, got `{line}`"),
                });
            };
            entries.insert(name.to_string(), value);
        }
        Ok(Self { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_OPTIMA).expect("bundled catalog parses")
    }

    pub fn get(&self, instance: &str) -> Option<f64> {
        self.entries.get(instance).copied()
    }
}
