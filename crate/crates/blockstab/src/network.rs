//! Publication records and co-authorship networks.
//!
//! The input is a delimited text file with one row per authorship
//! (`pub_id,author_id,year` plus an optional `discipline` column). Rows are
//! grouped into [`PublicationRecord`]s, records are sliced into time periods
//! and each slice becomes an undirected [`Network`] in which two researchers
//! are tied iff they co-authored at least one record in the period.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: invalid year `{value}`")]
    InvalidYear { line: usize, value: String },
    #[error("line {line}: publication `{pub_id}` already has year {previous}, got {conflicting}")]
    ConflictingYear {
        line: usize,
        pub_id: String,
        previous: i32,
        conflicting: i32,
    },
    #[error("input header must contain columns pub_id, author_id, year (got `{0}`)")]
    BadHeader(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("no vertices fall inside period `{0}`")]
    EmptyNetwork(String),
    #[error("density is undefined for networks with fewer than 2 vertices")]
    UndefinedDensity,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("invalid period `{label}`: start {start} > end {end}")]
    InvalidPeriod { label: String, start: i32, end: i32 },
    #[error("periods `{0}` and `{1}` overlap or are out of order")]
    OverlappingPeriods(String, String),
}

/// One publication with its deduplicated author set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub author_ids: BTreeSet<String>,
    pub year: i32,
}

/// Inclusive year range with a label used in file names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub label: String,
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodSpec {
    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

/// Checks that every period is well-formed and the list is ordered and
/// non-overlapping.
pub fn validate_periods(periods: &[PeriodSpec]) -> Result<(), NetworkError> {
    for p in periods {
        if p.start_year > p.end_year {
            return Err(NetworkError::InvalidPeriod {
                label: p.label.clone(),
                start: p.start_year,
                end: p.end_year,
            });
        }
    }
    for w in periods.windows(2) {
        if w[1].start_year <= w[0].end_year {
            return Err(NetworkError::OverlappingPeriods(
                w[0].label.clone(),
                w[1].label.clone(),
            ));
        }
    }
    Ok(())
}

/// Undirected simple graph over researcher IDs.
///
/// Vertices are kept sorted; the tie weight counts co-authored records and a
/// tie exists iff its weight is positive. No self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major n*n weight matrix; `w[i*n+j] > 0` ⇔ tie between i and j.
    weights: Vec<u32>,
}

impl Network {
    /// Builds a network from explicit vertices and weighted edges. Vertex
    /// order is preserved as given.
    pub fn from_edges(
        vertices: Vec<String>,
        edges: &[(usize, usize, u32)],
    ) -> Result<Self, NetworkError> {
        let n = vertices.len();
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let mut weights = vec![0u32; n * n];
        for &(i, j, w) in edges {
            assert!(i < n && j < n && i != j, "edge endpoints out of range");
            if w > 0 {
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Ok(Network {
            vertices,
            index,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn has_tie(&self, i: usize, j: usize) -> bool {
        i != j && self.weights[i * self.n() + j] > 0
    }

    pub fn weight(&self, i: usize, j: usize) -> u32 {
        self.weights[i * self.n() + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        let n = self.n();
        (0..n).filter(|&j| self.weights[i * n + j] > 0).count()
    }

    /// Edges as (i, j, weight) with i < j.
    pub fn edges(&self) -> Vec<(usize, usize, u32)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[i * n + j];
                if w > 0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Share of realized ties out of all possible ties.
    pub fn density(&self) -> Result<f64, NetworkError> {
        let n = self.n();
        if n < 2 {
            return Err(NetworkError::UndefinedDensity);
        }
        Ok(2.0 * self.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
    }

    /// Vertices with no ties.
    pub fn isolates(&self) -> BTreeSet<String> {
        (0..self.n())
            .filter(|&i| self.degree(i) == 0)
            .map(|i| self.vertices[i].clone())
            .collect()
    }

    /// Restriction to `keep`, preserving vertex order.
    pub fn induced_subnetwork(&self, keep: &BTreeSet<String>) -> Result<Network, NetworkError> {
        for v in keep {
            if !self.index.contains_key(v) {
                return Err(NetworkError::UnknownVertex(v.clone()));
            }
        }
        let old_ids: Vec<usize> = (0..self.n())
            .filter(|&i| keep.contains(&self.vertices[i]))
            .collect();
        let vertices: Vec<String> = old_ids.iter().map(|&i| self.vertices[i].clone()).collect();
        let m = vertices.len();
        let mut weights = vec![0u32; m * m];
        for (a, &i) in old_ids.iter().enumerate() {
            for (b, &j) in old_ids.iter().enumerate() {
                weights[a * m + b] = self.weights[i * self.n() + j];
            }
        }
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        Ok(Network {
            vertices,
            index,
            weights,
        })
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            vertices: self.vertices.clone(),
            edges: self.edges(),
        }
    }

    pub fn from_json(json: &NetworkJson) -> Result<Network, NetworkError> {
        Network::from_edges(json.vertices.clone(), &json.edges)
    }
}

/// Serialized form: `{vertices: [...], edges: [[i, j, weight], ...]}` with
/// i < j indices into `vertices`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkJson {
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize, u32)>,
}

/// A parsed authorship row; `discipline` is carried through for batch runs.
#[derive(Debug, Clone)]
pub struct AuthorshipRow {
    pub pub_id: String,
    pub author_id: String,
    pub year: i32,
    pub discipline: Option<String>,
    pub line: usize,
}

fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Reads authorship rows from delimited text. The delimiter (comma or tab)
/// is detected from the header row, which must name `pub_id`, `author_id`
/// and `year`.
pub fn read_rows<R: Read>(mut reader: R) -> Result<Vec<AuthorshipRow>, NetworkError> {
    let mut raw = String::new();
    reader
        .read_to_string(&mut raw)
        .map_err(|e| NetworkError::Csv(csv::Error::from(e)))?;
    let header_line = raw.lines().next().unwrap_or("");
    let delim = detect_delimiter(header_line);

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .flexible(true)
        .from_reader(raw.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (pub_col, author_col, year_col) = match (col("pub_id"), col("author_id"), col("year")) {
        (Some(p), Some(a), Some(y)) => (p, a, y),
        _ => return Err(NetworkError::BadHeader(header_line.to_string())),
    };
    let disc_col = col("discipline");

    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = idx + 2; // 1-based, after the header
        let field = |c: usize, name: &'static str| -> Result<String, NetworkError> {
            match rec.get(c) {
                Some(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
                _ => Err(NetworkError::MissingField { line, field: name }),
            }
        };
        let pub_id = field(pub_col, "pub_id")?;
        let author_id = field(author_col, "author_id")?;
        let year_raw = field(year_col, "year")?;
        let year: i32 = year_raw
            .parse()
            .map_err(|_| NetworkError::InvalidYear {
                line,
                value: year_raw.clone(),
            })?;
        let discipline = disc_col
            .and_then(|c| rec.get(c))
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty());
        rows.push(AuthorshipRow {
            pub_id,
            author_id,
            year,
            discipline,
            line,
        });
    }
    Ok(rows)
}

/// Groups authorship rows into publication records. Duplicate
/// (pub_id, author_id) pairs are deduplicated; a pub_id reappearing with a
/// different year is rejected. Records come back in first-appearance order.
pub fn group_rows(rows: &[AuthorshipRow]) -> Result<Vec<PublicationRecord>, NetworkError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_pub: HashMap<String, PublicationRecord> = HashMap::new();
    for row in rows {
        match by_pub.get_mut(&row.pub_id) {
            Some(rec) => {
                if rec.year != row.year {
                    return Err(NetworkError::ConflictingYear {
                        line: row.line,
                        pub_id: row.pub_id.clone(),
                        previous: rec.year,
                        conflicting: row.year,
                    });
                }
                rec.author_ids.insert(row.author_id.clone());
            }
            None => {
                order.push(row.pub_id.clone());
                by_pub.insert(
                    row.pub_id.clone(),
                    PublicationRecord {
                        pub_id: row.pub_id.clone(),
                        author_ids: BTreeSet::from([row.author_id.clone()]),
                        year: row.year,
                    },
                );
            }
        }
    }
    Ok(order
        .into_iter()
        .map(|id| by_pub.remove(&id).unwrap())
        .collect())
}

/// Parses a delimited-text stream into publication records.
pub fn parse_publications<R: Read>(reader: R) -> Result<Vec<PublicationRecord>, NetworkError> {
    let rows = read_rows(reader)?;
    group_rows(&rows)
}

/// Parses a stream into per-discipline record lists. Rows without a
/// discipline column fall into the `None` entry.
pub fn parse_corpus<R: Read>(
    reader: R,
) -> Result<BTreeMap<Option<String>, Vec<PublicationRecord>>, NetworkError> {
    let rows = read_rows(reader)?;
    let mut by_disc: BTreeMap<Option<String>, Vec<AuthorshipRow>> = BTreeMap::new();
    for row in rows {
        by_disc
            .entry(row.discipline.clone())
            .or_default()
            .push(row);
    }
    by_disc
        .into_iter()
        .map(|(d, rows)| Ok((d, group_rows(&rows)?)))
        .collect()
}

/// Builds the co-authorship network for one period.
///
/// Vertices are the authors (restricted to `roster` when given) of records
/// whose year falls in the period, sorted lexicographically. Two authors are
/// tied iff they share at least one record; the weight counts shared
/// records. Authors whose co-authors are all outside the roster stay as
/// isolated vertices.
pub fn build_network(
    records: &[PublicationRecord],
    period: &PeriodSpec,
    roster: Option<&BTreeSet<String>>,
) -> Result<Network, NetworkError> {
    let in_roster = |a: &String| roster.is_none_or(|r| r.contains(a));
    let mut vertex_set: BTreeSet<String> = BTreeSet::new();
    let in_period: Vec<&PublicationRecord> = records
        .iter()
        .filter(|r| period.contains(r.year))
        .collect();
    for rec in &in_period {
        for a in rec.author_ids.iter().filter(|a| in_roster(a)) {
            vertex_set.insert(a.clone());
        }
    }
    if vertex_set.is_empty() {
        return Err(NetworkError::EmptyNetwork(period.label.clone()));
    }
    let vertices: Vec<String> = vertex_set.into_iter().collect();
    let index: HashMap<String, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let n = vertices.len();
    let mut weights = vec![0u32; n * n];
    for rec in &in_period {
        let members: Vec<usize> = rec
            .author_ids
            .iter()
            .filter_map(|a| index.get(a).copied())
            .collect();
        for (pos, &i) in members.iter().enumerate() {
            for &j in &members[pos + 1..] {
                weights[i * n + j] += 1;
                weights[j * n + i] += 1;
            }
        }
    }
    Ok(Network {
        vertices,
        index,
        weights,
    })
}
