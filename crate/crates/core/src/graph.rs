//! Weighted graphs with non-negative integer weights.
//!
//! Undirected graphs store each edge once. The text format is line-based:
//! a header `n m directed?` followed by `u v w` per edge.

use crate::error::{Error, Result};
use crate::semiring::INF;
use crate::sim::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId, u64)>,
    directed: bool,
}

// Weights above this cannot appear; keeps n-term path sums far from INF.
const MAX_WEIGHT: u64 = 1 << 40;

impl Graph {
    pub fn new(n: usize, edges: Vec<(NodeId, NodeId, u64)>, directed: bool) -> Result<Self> {
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidSpec(format!(
                    "edge ({u},{v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidSpec(format!("self-loop at node {u}")));
            }
            if w >= MAX_WEIGHT {
                return Err(Error::InvalidSpec(format!(
                    "weight {w} on edge ({u},{v}) exceeds the {MAX_WEIGHT} cap"
                )));
            }
        }
        let mut g = Graph { n, edges, directed };
        g.canonicalize();
        Ok(g)
    }

    fn canonicalize(&mut self) {
        if !self.directed {
            for e in &mut self.edges {
                if e.0 > e.1 {
                    *e = (e.1, e.0, e.2);
                }
            }
        }
        self.edges.sort();
        // keep the lightest copy of duplicated edges
        self.edges.dedup_by(|next, prev| {
            if next.0 == prev.0 && next.1 == prev.1 {
                prev.2 = prev.2.min(next.2);
                true
            } else {
                false
            }
        });
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(NodeId, NodeId, u64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_weight(&self) -> u64 {
        self.edges.iter().map(|&(_, _, w)| w).max().unwrap_or(0)
    }

    pub fn is_unit_weighted(&self) -> Result<()> {
        for &(u, v, w) in &self.edges {
            if w != 1 {
                return Err(Error::WeightedInput { u, v, w });
            }
        }
        Ok(())
    }

    /// Neighbors as (node, weight); both directions for undirected graphs.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            if !self.directed {
                adj[v].push((u, w));
            }
        }
        for a in &mut adj {
            a.sort();
        }
        adj
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b, _)| a == v || (!self.directed && b == v))
            .count()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Union with an extra weighted edge set (hopset edges, shortcuts);
    /// parallel edges keep the minimum weight, self-loops are dropped.
    pub fn union_edges(&self, extra: &[(NodeId, NodeId, u64)]) -> Result<Graph> {
        let mut edges = self.edges.clone();
        for &(u, v, w) in extra {
            if u != v {
                edges.push((u, v, w.min(MAX_WEIGHT - 1)));
            }
        }
        Graph::new(self.n, edges, self.directed)
    }

    /// Subgraph induced on `keep`; node ids are preserved (nodes outside
    /// `keep` simply lose all their edges).
    pub fn induced(&self, keep: &[bool]) -> Result<Graph> {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v, _)| keep[u] && keep[v])
            .collect();
        Graph::new(self.n, edges, self.directed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.n,
            self.edges.len(),
            if self.directed { 1 } else { 0 }
        );
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u} {v} {w}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (lineno, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty graph file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("header needs 'n m directed?', got '{header}'"),
            });
        }
        let n: usize = parse_field(fields[0], lineno)?;
        let m: usize = parse_field(fields[1], lineno)?;
        let directed = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("directed flag must be 0 or 1, got '{other}'"),
                })
            }
        };
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("edge line needs 'u v w', got '{line}'"),
                });
            }
            let u: usize = parse_field(fields[0], lineno)?;
            let v: usize = parse_field(fields[1], lineno)?;
            let w: u64 = parse_field(fields[2], lineno)?;
            edges.push((u, v, w));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header promises {m} edges, file has {}", edges.len()),
            });
        }
        Graph::new(n, edges, directed).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line: lineno + 1,
        msg: format!("cannot parse '{s}'"),
    })
}

pub const INFINITE_DISTANCE: u64 = INF;
