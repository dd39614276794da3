//! Edge-list text format: a header line `n m`, then `m` lines `i j` with
//! 0-based vertex ids. Undirected, no duplicates, no self-loops.

use std::io::{BufRead, Write};

use super::Graph;
use crate::error::{Error, Result};

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn two_numbers(line: usize, text: &str) -> Result<(usize, usize)> {
    let mut it = text.split_whitespace();
    let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
        return parse_err(line, format!("expected two integers, got '{text}'"));
    };
    match (a.parse(), b.parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => parse_err(line, format!("expected two non-negative integers, got '{text}'")),
    }
}

pub fn read_edge_list(reader: impl BufRead) -> Result<Graph> {
    let mut lines = reader.lines().enumerate().filter_map(|(k, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((k + 1, other)),
    });
    let Some((hl, header)) = lines.next() else {
        return parse_err(1, "missing 'n m' header");
    };
    let (n, m) = two_numbers(hl, &header?)?;
    if n == 0 {
        return parse_err(hl, "graph must have at least one vertex");
    }
    let mut g = Graph::empty(n)?;
    let mut seen = 0usize;
    for (ln, text) in lines {
        let (i, j) = two_numbers(ln, &text?)?;
        if i == j {
            return parse_err(ln, format!("self-loop at vertex {i}"));
        }
        if i >= n || j >= n {
            return parse_err(ln, format!("vertex id out of range 0..{n}"));
        }
        if g.has_edge(i, j) {
            return parse_err(ln, format!("duplicate edge {i} {j}"));
        }
        g.set_edge(i, j);
        seen += 1;
    }
    if seen != m {
        return parse_err(hl, format!("header announces {m} edges, found {seen}"));
    }
    Ok(g)
}

pub fn write_edge_list(g: &Graph, mut out: impl Write) -> Result<()> {
    let edges = g.edges();
    writeln!(out, "{} {}", g.n(), edges.len())?;
    for (i, j) in edges {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edge_list_file(path: impl AsRef<std::path::Path>) -> Result<Graph> {
    read_edge_list(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_edge_list_file(g: &Graph, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_edge_list(g, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;

    fn parse(s: &str) -> Result<Graph> {
        read_edge_list(s.as_bytes())
    }

    #[test]
    fn round_trip() {
        let g = gen_gnp(37, 0.3, 5).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn writer_sorts_edges() {
        let g = Graph::from_edges(4, &[(3, 2), (1, 0), (2, 0)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "4 3\n0 1\n0 2\n2 3\n");
    }

    #[test]
    fn rejects_malformed_input() {
        let line_of = |s: &str| match parse(s) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line_of("3 1\n0 0\n"), 2);
        assert_eq!(line_of("3 2\n0 1\n1 3\n"), 3);
        assert_eq!(line_of("3 2\n0 1\n1 0\n"), 3);
        assert_eq!(line_of("3 1\n0 x\n"), 2);
        assert_eq!(line_of("3 2\n0 1\n"), 1);
        assert_eq!(line_of(""), 1);
    }
}
