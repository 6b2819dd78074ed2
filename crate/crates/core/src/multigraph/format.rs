//! Plain-text edge streams.
//!
//! ```text
//! # comment
//! n 4
//! 1 2
//! 3 1
//! ```
//!
//! The first non-comment line declares the vertex count. Every following
//! non-blank, non-comment line is one unit-weight edge `u v`, in stream order.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{Multigraph, VertexId};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses an edge stream from any buffered reader.
pub fn parse_edge_stream<R: BufRead>(reader: R) -> Result<Multigraph> {
    let stream = EdgeStream::new(reader)?;
    let mut g = Multigraph::new(stream.n());
    for edge in stream {
        let (u, v) = edge?;
        g.add_edge(u, v)?;
    }
    Ok(g)
}

/// Lazy reader over an edge stream: the header is read up front, edges are
/// parsed one line at a time and validated against the vertex count.
pub struct EdgeStream<R> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
    n: usize,
}

impl<R: BufRead> EdgeStream<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        for (i, line) in lines.by_ref() {
            let lineno = i + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let n = parse_header(text, lineno)?;
            return Ok(Self { lines, n });
        }
        Err(parse_err(0, "missing header `n <vertex count>`"))
    }

    /// Declared vertex count.
    pub fn n(&self) -> usize {
        self.n
    }
}

impl<R: BufRead> Iterator for EdgeStream<R> {
    type Item = Result<(VertexId, VertexId)>;

    fn next(&mut self) -> Option<Self::Item> {
        for (i, line) in self.lines.by_ref() {
            let lineno = i + 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            return Some(parse_edge(text, lineno, self.n));
        }
        None
    }
}

fn parse_header(text: &str, lineno: usize) -> Result<usize> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    let n = match fields.as_slice() {
        ["n", count] => count
            .parse::<usize>()
            .map_err(|e| parse_err(lineno, format!("bad vertex count {count:?}: {e}")))?,
        _ => return Err(parse_err(lineno, "expected header `n <vertex count>`")),
    };
    if n > VertexId::MAX as usize {
        return Err(parse_err(lineno, format!("vertex count {n} too large")));
    }
    Ok(n)
}

fn parse_edge(text: &str, lineno: usize, n: usize) -> Result<(VertexId, VertexId)> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    let [u, v] = fields.as_slice() else {
        return Err(parse_err(lineno, format!("expected `u v`, found {text:?}")));
    };
    let u: VertexId = u.parse().map_err(|e| parse_err(lineno, format!("bad vertex {u:?}: {e}")))?;
    let v: VertexId = v.parse().map_err(|e| parse_err(lineno, format!("bad vertex {v:?}: {e}")))?;
    if u == 0 || v == 0 || u as usize > n || v as usize > n {
        return Err(parse_err(lineno, format!("edge ({u}, {v}) outside 1..={n}")));
    }
    if u == v {
        return Err(parse_err(lineno, format!("self-loop at vertex {u}")));
    }
    Ok((u, v))
}

pub fn read_edge_stream(path: impl AsRef<Path>) -> Result<Multigraph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_edge_stream(std::io::BufReader::new(file))
}

/// Writes `graph` in stream order. Only unit-weight graphs are representable.
pub fn write_edge_stream<W: Write>(graph: &Multigraph, mut out: W) -> Result<()> {
    if !graph.is_unit_weight() {
        return Err(Error::InvalidArgument("edge streams carry unit weights only".into()));
    }
    writeln!(out, "n {}", graph.n())?;
    for e in graph.edges() {
        writeln!(out, "{} {}", e.src, e.dst)?;
    }
    out.flush()?;
    Ok(())
}
