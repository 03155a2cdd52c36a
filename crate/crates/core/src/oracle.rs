//! Sequential ground truth: Dijkstra, bounded-hop Bellman-Ford, brute-force
//! distance products, filters and diameters.
//!
//! These are the oracles the clique pipelines are tested against. They share
//! the (distance, hops, id) tie-break with the distributed code so that
//! set-valued outputs can be compared exactly, and they never touch the
//! simulator.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::Graph;
use crate::matrix::{density_of, SparseMatrix};
use crate::semiring::{AugMinPlus, AugWeight, Boolean, OrderedSemiring, Semiring, INF};
use crate::sim::NodeId;

/// Exact single-source results with canonical tie-breaking.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub source: NodeId,
    /// Augmented distance (weight, hops of the lexicographically minimal
    /// path); `AugWeight::ZERO` when unreachable.
    pub dist: Vec<AugWeight>,
    /// Predecessor on the canonical shortest-path tree.
    pub pred: Vec<Option<NodeId>>,
    /// Heaviest edge on the canonical path; 0 for the source itself.
    pub max_edge: Vec<u64>,
    /// Minimum over all min-weight paths of the heaviest edge.
    pub minimax_edge: Vec<u64>,
}

/// Dijkstra under the lexicographic (weight, hops) order. Valid because both
/// components are non-negative and extension is monotone.
pub fn dijkstra(g: &Graph, source: NodeId) -> OracleRow {
    let n = g.n();
    let adj = g.adjacency();
    let mut dist = vec![AugWeight::ZERO; n];
    let mut done = vec![false; n];
    dist[source] = AugWeight::ONE;
    let mut heap: BinaryHeap<Reverse<(u64, u64, NodeId)>> = BinaryHeap::new();
    heap.push(Reverse((0, 0, source)));
    while let Some(Reverse((w, t, v))) = heap.pop() {
        if done[v] || (dist[v].w, dist[v].t) != (w, t) {
            continue;
        }
        done[v] = true;
        for &(u, we) in &adj[v] {
            let cand = AugWeight::new(w + we, t + 1);
            if !done[u] && (cand.w, cand.t) < (dist[u].w, dist[u].t) {
                dist[u] = cand;
                heap.push(Reverse((cand.w, cand.t, u)));
            }
        }
    }

    // Canonical predecessors: smallest id achieving the exact (w, t).
    let mut pred = vec![None; n];
    let incoming = incoming_adjacency(g);
    for v in 0..n {
        if v == source || dist[v].is_infinite() {
            continue;
        }
        for &(u, we) in &incoming[v] {
            if !dist[u].is_infinite()
                && dist[u].w + we == dist[v].w
                && dist[u].t + 1 == dist[v].t
            {
                pred[v] = Some(u);
                break; // incoming lists are id-sorted
            }
        }
    }

    // Heaviest edge along the canonical path, in distance order.
    let mut order: Vec<NodeId> = (0..n).filter(|&v| !dist[v].is_infinite()).collect();
    order.sort_by_key(|&v| (dist[v].w, dist[v].t, v));
    let mut max_edge = vec![0u64; n];
    for &v in &order {
        if let Some(p) = pred[v] {
            let we = edge_weight(&incoming[v], p);
            max_edge[v] = max_edge[p].max(we);
        }
    }

    // Minimax heaviest edge over *all* min-weight paths (hops ignored):
    // relax along the shortest-path DAG in weight order.
    let mut minimax = vec![INF; n];
    let mut worder: Vec<NodeId> = (0..n).filter(|&v| !dist[v].is_infinite()).collect();
    worder.sort_by_key(|&v| (dist[v].w, v));
    for &v in &worder {
        if v == source {
            minimax[v] = 0;
            continue;
        }
        for &(u, we) in &incoming[v] {
            if !dist[u].is_infinite() && dist[u].w + we == dist[v].w {
                minimax[v] = minimax[v].min(minimax[u].max(we));
            }
        }
    }
    for v in 0..n {
        if dist[v].is_infinite() {
            minimax[v] = 0;
        }
    }

    OracleRow {
        source,
        dist,
        pred,
        max_edge,
        minimax_edge: minimax,
    }
}

fn incoming_adjacency(g: &Graph) -> Vec<Vec<(NodeId, u64)>> {
    let mut inc = vec![Vec::new(); g.n()];
    for &(u, v, w) in g.edges() {
        inc[v].push((u, w));
        if !g.directed() {
            inc[u].push((v, w));
        }
    }
    for a in &mut inc {
        a.sort();
    }
    inc
}

fn edge_weight(list: &[(NodeId, u64)], node: NodeId) -> u64 {
    list.iter()
        .filter(|&&(u, _)| u == node)
        .map(|&(_, w)| w)
        .min()
        .expect("edge exists")
}

pub fn all_pairs(g: &Graph) -> Vec<OracleRow> {
    (0..g.n()).map(|s| dijkstra(g, s)).collect()
}

/// Exact d-hop-bounded augmented distances from every node to each source:
/// entry `[si][v]` is the best (weight, hops) among paths v -> sources[si]
/// with at most `d` hops.
pub fn bounded_hop_bellman_ford(g: &Graph, sources: &[NodeId], d: usize) -> Vec<Vec<AugWeight>> {
    let n = g.n();
    let incoming = incoming_adjacency(g);
    sources
        .iter()
        .map(|&s| {
            let mut col = vec![AugWeight::ZERO; n];
            col[s] = AugWeight::ONE;
            for _ in 0..d {
                let mut next = col.clone();
                for v in 0..n {
                    // one more hop: v -> u -> ... -> s, i.e. W[v,u] * col[u];
                    // for undirected graphs incoming == outgoing.
                    for &(u, we) in &incoming[v] {
                        if !col[u].is_infinite() {
                            let cand = AugWeight::new(col[u].w + we, col[u].t + 1);
                            next[v] = AugMinPlus::add(&next[v], &cand);
                        }
                    }
                }
                if next == col {
                    break;
                }
                col = next;
            }
            col
        })
        .collect()
}

/// Brute-force semiring product by triple loop, plus the cancellation-free
/// output density taken over the Boolean structure product.
pub fn brute_distance_product<S: Semiring>(
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
) -> (SparseMatrix<S>, usize) {
    let n = s.n();
    assert_eq!(n, t.n());
    let mut p = SparseMatrix::<S>::zero(n);
    let mut boolean_nz = 0usize;
    for v in 0..n {
        let mut acc: Vec<Option<S::Elem>> = vec![None; n];
        let mut structural = vec![false; n];
        for (w, sv) in s.row(v) {
            for (u, tw) in t.row(*w) {
                let prod = S::mul(sv, tw);
                structural[*u] = true;
                acc[*u] = Some(match acc[*u].take() {
                    None => prod,
                    Some(cur) => S::add(&cur, &prod),
                });
            }
        }
        boolean_nz += structural.iter().filter(|&&b| b).count();
        for (u, e) in acc.into_iter().enumerate() {
            if let Some(e) = e {
                if !S::is_zero(&e) {
                    p.set(v, u, e);
                }
            }
        }
    }
    (p, density_of(boolean_nz, n))
}

/// Brute-force product with witnesses: smallest middle index attaining each
/// output value.
pub fn brute_product_with_witnesses<S: Semiring>(
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
) -> (SparseMatrix<S>, SparseMatrix<MinPlusWitness>) {
    let n = s.n();
    let mut p = SparseMatrix::<S>::zero(n);
    let mut wit = SparseMatrix::<MinPlusWitness>::zero(n);
    for v in 0..n {
        for (w, sv) in s.row(v) {
            for (u, tw) in t.row(*w) {
                let prod = S::mul(sv, tw);
                if S::is_zero(&prod) {
                    continue;
                }
                let cur = p.get(v, *u);
                let sum = S::add(&cur, &prod);
                if S::is_zero(&cur) || sum != cur {
                    p.set(v, *u, sum);
                    wit.set(v, *u, *w as u64);
                } else if sum == prod {
                    // tie: keep the smaller witness
                    let old = wit.get(v, *u);
                    wit.set(v, *u, old.min(*w as u64));
                }
            }
        }
    }
    (p, wit)
}

/// Witness table reuses the min-plus element type (semiring ops unused).
pub type MinPlusWitness = crate::semiring::MinPlus;

/// The rho-filtered version of a matrix: per row, the `min(sigma, rho)`
/// smallest entries under (value, column) order.
pub fn brute_filter<S: OrderedSemiring>(p: &SparseMatrix<S>, rho: usize) -> SparseMatrix<S> {
    assert!(rho >= 1, "densities are positive integers");
    let n = p.n();
    let mut out = SparseMatrix::<S>::zero(n);
    for v in 0..n {
        let mut entries: Vec<(NodeId, S::Elem)> = p.row(v).to_vec();
        entries.sort_by(|a, b| S::cmp_elems(&a.1, &b.1).then(a.0.cmp(&b.0)));
        entries.truncate(rho);
        for (c, e) in entries {
            out.set(v, c, e);
        }
    }
    out
}

/// k nearest nodes per node under (distance, hops, id), self included.
pub fn brute_k_nearest(g: &Graph, k: usize) -> Vec<Vec<(NodeId, AugWeight)>> {
    all_pairs(g)
        .into_iter()
        .map(|row| {
            let mut reach: Vec<(NodeId, AugWeight)> = row
                .dist
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_infinite())
                .map(|(u, d)| (u, *d))
                .collect();
            reach.sort_by_key(|&(u, d)| (d.w, d.t, u));
            reach.truncate(k);
            reach
        })
        .collect()
}

/// Per-node (source, d-hop distance) tables under (distance, id), trimmed to
/// the k nearest sources.
pub fn brute_source_tables(
    g: &Graph,
    sources: &[NodeId],
    d: usize,
    k: usize,
) -> Vec<Vec<(NodeId, AugWeight)>> {
    let cols = bounded_hop_bellman_ford(g, sources, d);
    (0..g.n())
        .map(|v| {
            let mut hits: Vec<(NodeId, AugWeight)> = sources
                .iter()
                .enumerate()
                .filter(|(si, _)| !cols[*si][v].is_infinite())
                .map(|(si, &s)| (s, cols[si][v]))
                .collect();
            hits.sort_by_key(|&(s, dist)| (dist.w, dist.t, s));
            hits.truncate(k);
            hits
        })
        .collect()
}

/// Exact diameter; `None` when disconnected.
pub fn brute_diameter(g: &Graph) -> Option<u64> {
    let mut best = 0u64;
    for row in all_pairs(g) {
        for d in &row.dist {
            if d.is_infinite() {
                return None;
            }
            best = best.max(d.w);
        }
    }
    Some(best)
}

/// Floyd-Warshall over the augmented semiring; cross-check for Dijkstra.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<AugWeight>> {
    let n = g.n();
    let w = crate::matrix::weight_matrix(g);
    let mut dist = vec![vec![AugWeight::ZERO; n]; n];
    for v in 0..n {
        for (u, e) in w.row(v) {
            dist[v][*u] = AugMinPlus::add(&dist[v][*u], e);
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = AugMinPlus::mul(&dist[i][m], &dist[m][j]);
                dist[i][j] = AugMinPlus::add(&dist[i][j], &via);
            }
        }
    }
    dist
}

/// Boolean structure density of a single matrix (for tests).
pub fn boolean_shadow<S: Semiring>(m: &SparseMatrix<S>) -> SparseMatrix<Boolean> {
    let mut out = SparseMatrix::<Boolean>::zero(m.n());
    for (r, row) in m.rows().iter().enumerate() {
        for (c, _) in row {
            out.set(r, *c, true);
        }
    }
    out
}
