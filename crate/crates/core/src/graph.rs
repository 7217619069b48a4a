//! Undirected simple graphs: storage, degree statistics, file ingestion and
//! structural validation.
//!
//! Two on-disk formats are understood. The pairs format holds one edge per
//! line as two whitespace-separated integer node labels, with `#` comment
//! lines. The GML subset honors only `node [ id N ]` and
//! `edge [ source A target B ]` records; every other key is skipped.
//!
//! Node labels are mapped to dense indices `0..n` in ascending label order,
//! so a file labelled `1..n` maps label `i` to index `i - 1`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric binary adjacency matrix with zero diagonal, stored as sorted
/// neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl AdjacencyMatrix {
    /// Builds a graph on `n` nodes. Self-loops are dropped and duplicate or
    /// reversed edges are merged.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &set {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            neighbors,
            edge_count: set.len(),
        })
    }

    /// Builds a graph from a dense 0/1 matrix, rejecting anything that is not
    /// a valid undirected simple graph.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "adjacency must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::Structure(format!("self-loop at node {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if a != b {
                    return Err(Error::Structure(format!("asymmetric entry at ({i}, {j})")));
                }
                match a {
                    x if x == 0.0 => {}
                    x if x == 1.0 => edges.push((i, j)),
                    x => {
                        return Err(Error::Structure(format!(
                            "non-binary entry {x} at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Upper-triangle edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::Dimension("permutation length differs from n".into()));
        }
        Self::from_edges(self.n(), self.edges().map(|(i, j)| (perm[i], perm[j])))
    }
}

/// Degrees and their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    pub degrees: Vec<usize>,
    pub mean: f64,
    pub max: usize,
    pub min: usize,
}

pub fn degree_stats(adj: &AdjacencyMatrix) -> DegreeVector {
    let degrees: Vec<usize> = (0..adj.n()).map(|i| adj.degree(i)).collect();
    let total: usize = degrees.iter().sum();
    DegreeVector {
        mean: if degrees.is_empty() {
            0.0
        } else {
            total as f64 / degrees.len() as f64
        },
        max: degrees.iter().copied().max().unwrap_or(0),
        min: degrees.iter().copied().min().unwrap_or(0),
        degrees,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub n: usize,
    pub edge_count: usize,
    pub asymmetric_pairs: usize,
    pub self_loops: usize,
    pub isolated: Vec<usize>,
}

impl ValidationReport {
    pub fn isolated_count(&self) -> usize {
        self.isolated.len()
    }

    pub fn is_clean(&self) -> bool {
        self.asymmetric_pairs == 0 && self.self_loops == 0 && self.isolated.is_empty()
    }
}

/// Checks the structural invariants of `adj`. With `require_positive_degrees`
/// set, the first isolated node is reported as an error.
pub fn validate(adj: &AdjacencyMatrix, require_positive_degrees: bool) -> Result<ValidationReport> {
    let mut report = ValidationReport {
        n: adj.n(),
        edge_count: adj.edge_count(),
        ..Default::default()
    };
    for i in 0..adj.n() {
        for &j in adj.neighbors(i) {
            if j == i {
                report.self_loops += 1;
            } else if !adj.has_edge(j, i) {
                report.asymmetric_pairs += 1;
            }
        }
        if adj.degree(i) == 0 {
            report.isolated.push(i);
        }
    }
    if report.asymmetric_pairs > 0 || report.self_loops > 0 {
        return Err(Error::Structure(format!(
            "{} asymmetric entries, {} self-loops",
            report.asymmetric_pairs, report.self_loops
        )));
    }
    if require_positive_degrees {
        if let Some(&index) = report.isolated.first() {
            return Err(Error::IsolatedNode { index });
        }
    }
    Ok(report)
}

/// Bidirectional map between file labels and dense node indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMap {
    labels: Vec<i64>,
    index: HashMap<i64, usize>,
}

impl LabelMap {
    pub fn from_labels(labels: impl IntoIterator<Item = i64>) -> Self {
        let sorted: BTreeSet<i64> = labels.into_iter().collect();
        let labels: Vec<i64> = sorted.into_iter().collect();
        let index = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Self { labels, index }
    }

    /// Labels `1..=n`.
    pub fn contiguous(n: usize) -> Self {
        Self::from_labels(1..=n as i64)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.index.get(&label).copied()
    }

    pub fn label_of(&self, index: usize) -> i64 {
        self.labels[index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeListFormat {
    #[default]
    Pairs,
    Gml,
}

impl EdgeListFormat {
    /// `.gml` selects the GML subset; anything else is read as pairs.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("gml") => EdgeListFormat::Gml,
            _ => EdgeListFormat::Pairs,
        }
    }
}

impl FromStr for EdgeListFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" | "edgelist" | "edge-list" => Ok(EdgeListFormat::Pairs),
            "gml" => Ok(EdgeListFormat::Gml),
            other => Err(Error::InvalidParameter(format!("unknown graph format {other:?}"))),
        }
    }
}

impl fmt::Display for EdgeListFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeListFormat::Pairs => "pairs",
            EdgeListFormat::Gml => "gml",
        })
    }
}

/// A graph read from disk together with its label dictionary and what the
/// loader discarded.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub adjacency: AdjacencyMatrix,
    pub labels: LabelMap,
    pub self_loops_dropped: usize,
    pub duplicate_edges: usize,
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    match format {
        EdgeListFormat::Pairs => parse_pairs(&text, &name),
        EdgeListFormat::Gml => parse_gml(&text, &name),
    }
}

/// Pairs format: one `u v` edge per line, `#` comments. A `# nodes: N`
/// comment declares labels `1..=N`, so isolated nodes survive a round trip.
pub fn parse_pairs(text: &str, source: &str) -> Result<LoadedGraph> {
    let mut raw = Vec::new();
    let mut declared = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(count) = rest.trim().strip_prefix("nodes:") {
                let count: i64 = count.trim().parse().map_err(|_| Error::Parse {
                    location: format!("{source}:{}", lineno + 1),
                    message: format!("bad node count {:?}", count.trim()),
                })?;
                declared.extend(1..=count);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let location = || format!("{source}:{}", lineno + 1);
        if tokens.len() != 2 {
            return Err(Error::Parse {
                location: location(),
                message: format!("expected two tokens, found {}", tokens.len()),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<i64>().map_err(|_| Error::Parse {
                location: location(),
                message: format!("non-integer node label {tok:?}"),
            })
        };
        raw.push((parse(tokens[0])?, parse(tokens[1])?));
    }
    assemble(declared, raw)
}

pub fn parse_gml(text: &str, source: &str) -> Result<LoadedGraph> {
    let tokens = gml_tokens(text, source)?;
    let mut pos = 0;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    gml_walk(&tokens, &mut pos, source, 0, &mut nodes, &mut edges)?;
    assemble(nodes, edges)
}

fn assemble(declared: Vec<i64>, raw: Vec<(i64, i64)>) -> Result<LoadedGraph> {
    let labels = LabelMap::from_labels(
        declared
            .iter()
            .copied()
            .chain(raw.iter().flat_map(|&(a, b)| [a, b])),
    );
    if labels.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let self_loops_dropped = raw.iter().filter(|(a, b)| a == b).count();
    if self_loops_dropped > 0 {
        log::warn!("dropped {self_loops_dropped} self-loop line(s)");
    }
    let indexed: Vec<(usize, usize)> = raw
        .iter()
        .map(|&(a, b)| (labels.index_of(a).unwrap(), labels.index_of(b).unwrap()))
        .collect();
    let adjacency = AdjacencyMatrix::from_edges(labels.len(), indexed)?;
    let duplicate_edges = raw.len() - self_loops_dropped - adjacency.edge_count();
    Ok(LoadedGraph {
        adjacency,
        labels,
        self_loops_dropped,
        duplicate_edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum GmlToken {
    Open,
    Close,
    Word(String),
}

fn gml_tokens(text: &str, source: &str) -> Result<Vec<GmlToken>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '[' => {
                chars.next();
                out.push(GmlToken::Open);
            }
            ']' => {
                chars.next();
                out.push(GmlToken::Close);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => {
                            return Err(Error::Parse {
                                location: source.to_string(),
                                message: "unterminated string".into(),
                            })
                        }
                    }
                }
                out.push(GmlToken::Word(s));
            }
            '#' => {
                // comment to end of line
                for ch in chars.by_ref() {
                    if ch == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '[' || ch == ']' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push(GmlToken::Word(s));
            }
        }
    }
    Ok(out)
}

/// Walks one key/value list. Records are collected wherever `node` or `edge`
/// lists appear, which covers the usual `graph [ ... ]` wrapper.
fn gml_walk(
    tokens: &[GmlToken],
    pos: &mut usize,
    source: &str,
    depth: usize,
    nodes: &mut Vec<i64>,
    edges: &mut Vec<(i64, i64)>,
) -> Result<()> {
    let err = |message: String| Error::Parse {
        location: source.to_string(),
        message,
    };
    while *pos < tokens.len() {
        let key = match &tokens[*pos] {
            GmlToken::Close if depth > 0 => {
                *pos += 1;
                return Ok(());
            }
            GmlToken::Word(k) => k.clone(),
            other => return Err(err(format!("unexpected token {other:?}"))),
        };
        *pos += 1;
        match tokens.get(*pos) {
            Some(GmlToken::Open) => {
                *pos += 1;
                match key.as_str() {
                    "node" | "edge" => {
                        let fields = gml_record(tokens, pos, source)?;
                        let get = |name: &str| -> Result<i64> {
                            let v = fields
                                .get(name)
                                .ok_or_else(|| err(format!("{key} record without {name}")))?;
                            v.parse::<i64>()
                                .map_err(|_| err(format!("non-integer {name} {v:?}")))
                        };
                        if key == "node" {
                            nodes.push(get("id")?);
                        } else {
                            edges.push((get("source")?, get("target")?));
                        }
                    }
                    _ => gml_walk(tokens, pos, source, depth + 1, nodes, edges)?,
                }
            }
            Some(GmlToken::Word(_)) => *pos += 1,
            _ => return Err(err(format!("key {key:?} without value"))),
        }
    }
    if depth > 0 {
        return Err(err("unbalanced brackets".into()));
    }
    Ok(())
}

/// Collects scalar fields of a record, skipping nested lists.
fn gml_record(tokens: &[GmlToken], pos: &mut usize, source: &str) -> Result<HashMap<String, String>> {
    let mut fields = HashMap::new();
    let mut depth = 0usize;
    let mut pending: Option<String> = None;
    while *pos < tokens.len() {
        let tok = &tokens[*pos];
        *pos += 1;
        match tok {
            GmlToken::Open => {
                depth += 1;
                pending = None;
            }
            GmlToken::Close if depth == 0 => return Ok(fields),
            GmlToken::Close => depth -= 1,
            GmlToken::Word(w) => {
                if depth > 0 {
                    continue;
                }
                match pending.take() {
                    None => pending = Some(w.clone()),
                    Some(k) => {
                        fields.entry(k).or_insert_with(|| w.clone());
                    }
                }
            }
        }
    }
    Err(Error::Parse {
        location: source.to_string(),
        message: "unterminated record".into(),
    })
}

/// Writes the graph in pairs format using the original labels.
pub fn write_edge_list<W: Write>(adj: &AdjacencyMatrix, labels: &LabelMap, mut out: W) -> std::io::Result<()> {
    for (i, j) in adj.edges() {
        writeln!(out, "{} {}", labels.label_of(i), labels.label_of(j))?;
    }
    Ok(())
}
