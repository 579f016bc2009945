//! Compressed sparse adjacency for simple undirected graphs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::FORMAT_TAG;

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Neighbors of every vertex live in one contiguous array, sorted ascending,
/// with per-vertex offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    m: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) collapse; self-loops and out-of-range ids are errors.
    pub fn from_edge_list<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::invalid("n", "vertex ids must fit in 32 bits"));
        }
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(Error::VertexOutOfRange {
                        vertex: x as u64,
                        n,
                    });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u as u64));
            }
            canon.push(if u < v { (u, v) } else { (v, u) });
        }
        canon.par_sort_unstable();
        canon.dedup();
        Ok(Self::from_canonical(n, &canon))
    }

    /// `edges` must be sorted, deduplicated, with `u < v < n`.
    pub(crate) fn from_canonical(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut acc = 0;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor: Vec<usize> = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; acc];
        // Edges are sorted by (u, v). Filling the smaller-endpoint entries
        // first, then the larger ones, leaves every list ascending.
        for &(u, v) in edges {
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for &(u, v) in edges {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        Graph {
            offsets,
            neighbors,
            m: edges.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| (v as usize) > u)
                .map(move |v| (u as u32, v))
        })
    }

    /// Checks sortedness, absence of self-loops and duplicates, symmetry and
    /// the handshake identity. Returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.n();
        let mut degree_sum = 0;
        for u in 0..n {
            let nb = self.neighbors(u);
            degree_sum += nb.len();
            for w in nb.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("neighbors of {u} not strictly ascending"));
                }
            }
            for &v in nb {
                if v as usize == u {
                    return Err(format!("self-loop at {u}"));
                }
                if v as usize >= n {
                    return Err(format!("neighbor {v} of {u} out of range"));
                }
                if self.neighbors(v as usize).binary_search(&(u as u32)).is_err() {
                    return Err(format!("edge {u}-{v} not symmetric"));
                }
            }
        }
        if degree_sum != 2 * self.m {
            return Err(format!("degree sum {degree_sum} != 2m = {}", 2 * self.m));
        }
        Ok(())
    }

    /// Renders the edge-list file: header line, then `u v` per edge with
    /// `u < v`, sorted lexicographically.
    pub fn render_edge_list(&self, params: Option<&str>) -> String {
        let mut out = String::with_capacity(self.m * 14 + 64);
        let _ = writeln!(out, "{}", header_line(self.n(), params));
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// `# geodetect v1 params: <canonical>`; the vertex count is always recorded.
pub fn header_line(n: usize, params: Option<&str>) -> String {
    match params {
        Some(p) if p.split_whitespace().any(|kv| kv.starts_with("n=")) => {
            format!("# {FORMAT_TAG} params: {p}")
        }
        Some(p) => format!("# {FORMAT_TAG} params: n={n} {p}"),
        None => format!("# {FORMAT_TAG} params: n={n}"),
    }
}

/// Extracts `key=value` from a header or parameter string.
pub fn header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

pub fn save_edge_list(g: &Graph, path: &Path, params: Option<&str>) -> Result<()> {
    fs::write(path, g.render_edge_list(params)).map_err(|e| Error::io(path, e))
}

/// Loads an edge-list file. The vertex count comes from `n_hint`, else from
/// the header's `n=` entry, else from the largest id seen.
pub fn load_edge_list(path: &Path, n_hint: Option<usize>) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(path, &text, n_hint)
}

pub(crate) fn parse_edge_list(path: &Path, text: &str, n_hint: Option<usize>) -> Result<Graph> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut max_id: Option<u32> = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header_n.is_none() {
                header_n = header_value(rest, "n").and_then(|v| v.parse::<usize>().ok());
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next_id = |what: &str| -> Result<u32> {
            it.next()
                .ok_or_else(|| Error::parse(path, lineno, format!("missing {what} vertex")))?
                .parse::<u32>()
                .map_err(|e| Error::parse(path, lineno, format!("bad {what} vertex: {e}")))
        };
        let u = next_id("first")?;
        let v = next_id("second")?;
        if it.next().is_some() {
            return Err(Error::parse(path, lineno, "expected exactly two columns"));
        }
        if u == v {
            return Err(Error::parse(path, lineno, format!("self-loop at vertex {u}")));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = n_hint
        .or(header_n)
        .unwrap_or_else(|| max_id.map_or(0, |m| m as usize + 1));
    if let Some(m) = max_id {
        if m as usize >= n {
            return Err(Error::parse(
                path,
                0,
                format!("vertex id {m} out of range for n = {n}"),
            ));
        }
    }
    Graph::from_edge_list(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_from_edges() {
        let g = Graph::from_edge_list(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.m(), 3);
        g.validate().unwrap();
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::from_edge_list(3, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert!(g.neighbors(2).is_empty());
    }

    #[test]
    fn empty_graph() {
        let g = Graph::from_edge_list(2, []).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.n(), 2);
        g.validate().unwrap();
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            Graph::from_edge_list(3, [(0, 3)]),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
        assert!(matches!(
            Graph::from_edge_list(3, [(1, 1)]),
            Err(Error::SelfLoop(1))
        ));
    }

    #[test]
    fn neighbor_lists_sorted_for_mixed_endpoints() {
        let g = Graph::from_edge_list(5, [(2, 4), (0, 2), (2, 3), (1, 2)]).unwrap();
        assert_eq!(g.neighbors(2), &[0, 1, 3, 4]);
        g.validate().unwrap();
    }

    #[test]
    fn parse_ignores_header_and_sorts() {
        let text = "# geodetect v1 params: n=5 seed=1\n3 1\n0 2\n\n2 1\n";
        let g = parse_edge_list(Path::new("g.txt"), text, None).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2), (1, 3)]);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_edge_list(Path::new("g.txt"), "0 1\n1 x\n", None).unwrap_err();
        assert!(err.to_string().starts_with("g.txt:2:"), "{err}");
        let err = parse_edge_list(Path::new("g.txt"), "0 1\n2 2\n", None).unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
        let err = parse_edge_list(Path::new("g.txt"), "0 1 2\n", None).unwrap_err();
        assert!(err.to_string().starts_with("g.txt:1:"), "{err}");
    }

    #[test]
    fn render_round_trip() {
        let g = Graph::from_edge_list(6, [(0, 1), (1, 2), (0, 2), (4, 2)]).unwrap();
        let text = g.render_edge_list(Some("seed=3"));
        assert!(text.starts_with("# geodetect v1 params: n=6 seed=3\n"));
        let back = parse_edge_list(Path::new("x"), &text, None).unwrap();
        assert_eq!(back, g);
    }
}
