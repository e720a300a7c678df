//! Graph file formats: whitespace edge lists and MatrixMarket coordinate files.
//!
//! Both loaders relabel the observed node ids to `0..n` in ascending id order
//! and keep the ids on the [`Graph`], so exports write the original ids back.
//! Repeated edges are summed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use lapinc_core::{Graph, GraphBuilder, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("{0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GraphFormat {
    EdgeList,
    MatrixMarket,
}

impl GraphFormat {
    /// `.mtx` files are MatrixMarket, everything else an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mtx") => GraphFormat::MatrixMarket,
            _ => GraphFormat::EdgeList,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeListOptions {
    /// Weight for lines without a third column.
    pub default_weight: f64,
}

impl Default for EdgeListOptions {
    fn default() -> Self {
        Self { default_weight: 1.0 }
    }
}

fn parse_id(token: &str, line: usize) -> Result<u64, FormatError> {
    token
        .parse()
        .map_err(|_| FormatError::parse(line, format!("invalid node id {token:?}")))
}

fn parse_weight(token: &str, line: usize) -> Result<f64, FormatError> {
    token
        .parse()
        .map_err(|_| FormatError::parse(line, format!("invalid weight {token:?}")))
}

/// Reads `u v [w]` lines. A line holding a single id declares a node without
/// edges. `#` starts a comment.
pub fn load_edge_list<R: BufRead>(reader: R, options: EdgeListOptions) -> Result<Graph, FormatError> {
    let mut builder = GraphBuilder::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [u] => {
                builder.add_node(parse_id(u, line_no)?);
            }
            [u, v, rest @ ..] if rest.len() <= 1 => {
                let u = parse_id(u, line_no)?;
                let v = parse_id(v, line_no)?;
                let w = match rest.first() {
                    Some(t) => parse_weight(t, line_no)?,
                    None => options.default_weight,
                };
                builder
                    .add_edge(u, v, w)
                    .map_err(|source| FormatError::Graph { line: line_no, source })?;
            }
            _ => {
                return Err(FormatError::parse(
                    line_no,
                    format!("expected `u v [w]`, found {} fields", tokens.len()),
                ))
            }
        }
    }
    Ok(builder.build())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    Symmetric,
    General,
}

fn parse_header(line: &str) -> Result<(Field, Symmetry), FormatError> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(FormatError::Header(format!("not a MatrixMarket matrix header: {line:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(FormatError::Header(format!("unsupported storage {:?}; need coordinate", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(FormatError::Header(format!("unsupported field {other:?}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(FormatError::Header(format!("unsupported symmetry {other:?}"))),
    };
    Ok((field, symmetry))
}

/// Reads a square MatrixMarket coordinate matrix as a weighted adjacency
/// matrix. Node ids are the 1-based row indices; `n` is the declared
/// dimension. `general` files must be symmetric.
pub fn load_matrix_market<R: BufRead>(reader: R) -> Result<Graph, FormatError> {
    let mut lines = reader.lines().enumerate();
    let (field, symmetry) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(FormatError::Header("empty file".into())),
    };
    let mut size: Option<(usize, usize)> = None;
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut seen = 0usize;
    for (index, line) in lines {
        let line_no = index + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((n, nnz)) = size else {
            if tokens.len() != 3 {
                return Err(FormatError::parse(line_no, "expected `rows cols entries`"));
            }
            let dims: Vec<usize> = tokens
                .iter()
                .map(|t| t.parse().map_err(|_| FormatError::parse(line_no, format!("invalid size {t:?}"))))
                .collect::<Result<_, _>>()?;
            if dims[0] != dims[1] {
                return Err(FormatError::parse(line_no, format!("matrix is {}x{}, not square", dims[0], dims[1])));
            }
            size = Some((dims[0], dims[2]));
            continue;
        };
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if tokens.len() != expected {
            return Err(FormatError::parse(line_no, format!("expected {expected} fields")));
        }
        seen += 1;
        if seen > nnz {
            return Err(FormatError::parse(line_no, format!("more than the declared {nnz} entries")));
        }
        let index_of = |t: &str| -> Result<usize, FormatError> {
            let i: usize = t
                .parse()
                .map_err(|_| FormatError::parse(line_no, format!("invalid index {t:?}")))?;
            if i == 0 || i > n {
                return Err(FormatError::parse(line_no, format!("index {i} outside 1..={n}")));
            }
            Ok(i - 1)
        };
        let i = index_of(tokens[0])?;
        let j = index_of(tokens[1])?;
        let w = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => parse_weight(tokens[2], line_no)?,
        };
        if i == j {
            if w != 0.0 {
                return Err(FormatError::Graph {
                    line: line_no,
                    source: GraphError::SelfLoop(i as u64 + 1),
                });
            }
            continue;
        }
        if !w.is_finite() || w < 0.0 {
            return Err(FormatError::Graph {
                line: line_no,
                source: GraphError::InvalidWeight {
                    u: i as u64 + 1,
                    v: j as u64 + 1,
                    weight: w,
                },
            });
        }
        *entries.entry((i, j)).or_insert(0.0) += w;
    }
    let Some((n, nnz)) = size else {
        return Err(FormatError::Header("missing size line".into()));
    };
    if seen != nnz {
        return Err(FormatError::Header(format!("declared {nnz} entries, found {seen}")));
    }
    let edges: Vec<(usize, usize, f64)> = match symmetry {
        Symmetry::Symmetric => entries.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        Symmetry::General => {
            for (&(i, j), &w) in &entries {
                let mirror = entries.get(&(j, i)).copied().unwrap_or(0.0);
                if (w - mirror).abs() > 1e-12 * w.abs().max(mirror.abs()) {
                    return Err(FormatError::Header(format!(
                        "general matrix is not symmetric: A({},{}) = {w}, A({},{}) = {mirror}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
            entries
                .into_iter()
                .filter(|&((i, j), _)| i < j)
                .map(|((i, j), w)| (i, j, w))
                .collect()
        }
    };
    let ids = (1..=n as u64).collect();
    Graph::from_edges_with_ids(ids, &edges).map_err(|source| FormatError::Graph { line: 0, source })
}

/// Loads `path`, picking the format from the extension unless given.
pub fn load_graph(path: &Path, format: Option<GraphFormat>) -> Result<Graph, FormatError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    match format.unwrap_or_else(|| GraphFormat::from_path(path)) {
        GraphFormat::EdgeList => load_edge_list(reader, EdgeListOptions::default()),
        GraphFormat::MatrixMarket => load_matrix_market(reader),
    }
}

/// Edge-list text: one `u v w` line per edge with `i < j` in ascending
/// order, followed by one line per node without edges. Weights are written
/// in shortest round-trip form.
pub fn edge_list_string(g: &Graph) -> String {
    let ids = g.node_ids();
    let mut out = String::new();
    for (i, j, w) in g.edges() {
        let _ = writeln!(out, "{} {} {}", ids[i], ids[j], w);
    }
    for i in 0..g.n() {
        if g.degree(i) == 0 {
            let _ = writeln!(out, "{}", ids[i]);
        }
    }
    out
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    out.write_all(edge_list_string(g).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(text: &str) -> Result<Graph, FormatError> {
        load_edge_list(text.as_bytes(), EdgeListOptions::default())
    }

    #[test]
    fn edge_list_basics() {
        let g = edges("# path\n10 20\n20 30 2.5 # heavy\n\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.node_ids(), &[10, 20, 30]);
        assert_eq!(g.weight(1, 2), 2.5);
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn edge_list_duplicates_sum() {
        let g = edges("1 2 1\n2 1 0.5\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), 1.5);
    }

    #[test]
    fn edge_list_errors_carry_line() {
        match edges("1 2\n3 3\n") {
            Err(FormatError::Graph { line: 2, source: GraphError::SelfLoop(3) }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(edges("1 2 x\n"), Err(FormatError::Parse { line: 1, .. })));
        assert!(matches!(edges("1 2 3 4\n"), Err(FormatError::Parse { line: 1, .. })));
        assert!(matches!(edges("1 2 -1\n"), Err(FormatError::Graph { line: 1, .. })));
    }

    #[test]
    fn isolated_node_lines() {
        let g = edges("1 2\n7\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(edge_list_string(&g), "1 2 1\n7\n");
    }

    #[test]
    fn export_round_trip() {
        let g = edges("5 3 0.1\n3 9 0.30000000000000004\n9 5 7\n").unwrap();
        let text = edge_list_string(&g);
        assert_eq!(text, "3 5 0.1\n3 9 0.30000000000000004\n5 9 7\n");
        let back = edges(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn matrix_market_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 2\n2 1 1.0\n3 2 2.0\n";
        let g = load_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.node_ids(), &[1, 2, 3]);
        assert_eq!(g.weight(1, 2), 2.0);
    }

    #[test]
    fn matrix_market_general_and_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n4 4 2\n1 2\n2 1\n";
        let g = load_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 1);
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1.0\n";
        assert!(matches!(load_matrix_market(bad.as_bytes()), Err(FormatError::Header(_))));
    }

    #[test]
    fn matrix_market_errors() {
        let diag = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 3.0\n";
        assert!(matches!(
            load_matrix_market(diag.as_bytes()),
            Err(FormatError::Graph { source: GraphError::SelfLoop(1), .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 3.0\n";
        assert!(matches!(load_matrix_market(short.as_bytes()), Err(FormatError::Header(_))));
        let array = "%%MatrixMarket matrix array real general\n2 2\n";
        assert!(matches!(load_matrix_market(array.as_bytes()), Err(FormatError::Header(_))));
        let range = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n";
        assert!(matches!(load_matrix_market(range.as_bytes()), Err(FormatError::Parse { line: 3, .. })));
    }
}
