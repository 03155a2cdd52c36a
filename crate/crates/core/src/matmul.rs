//! Output-sensitive sparse matrix multiplication on the clique.
//!
//! The product P = S * T is split into n subcube tasks of a 3D partition of
//! V^3 balanced by nonzero counts, each node computes one local product,
//! overly dense intermediate results are duplicated across helper nodes, and
//! the intermediate values are summed by repeated global sorting. Round
//! costs follow the densities of S, T and the (cancellation-free) density of
//! P. Witnesses (the middle index attaining each output entry, smallest on
//! ties) ride along with every value at no extra bandwidth.

use crate::error::{Error, Result};
use crate::matrix::{density_of, SparseMatrix};
use crate::semiring::Semiring;
use crate::sim::{Clique, Message, NodeId, Word};

/// Split parameters: b row blocks, a column blocks, and up to c middle
/// blocks per (row, column) block pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmParams {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

fn ceil_fractional(v: f64) -> usize {
    let r = v.round();
    if (v - r).abs() < 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// Parameters from the density triple: a = (rho_T rho_P n)^{1/3} / rho_S^{2/3}
/// and cyclically, each rounded up and clamped to [1, n]. The product of the
/// raw formulas is exactly n; after rounding we re-establish a*b <= n (so
/// every block pair owns at least one of the n subcubes) and a*b*c >= n.
pub fn mm_params(rho_s: usize, rho_t: usize, rho_p: usize, n: usize) -> MmParams {
    assert!(rho_s >= 1 && rho_t >= 1 && rho_p >= 1 && n >= 1);
    let (rs, rt, rp, nf) = (rho_s as f64, rho_t as f64, rho_p as f64, n as f64);
    let a_f = (rt * rp * nf).powf(1.0 / 3.0) / rs.powf(2.0 / 3.0);
    let b_f = (rs * rp * nf).powf(1.0 / 3.0) / rt.powf(2.0 / 3.0);
    let mut a = ceil_fractional(a_f).clamp(1, n);
    let mut b = ceil_fractional(b_f).clamp(1, n);
    if a * b > n {
        if a >= b {
            a = (n / b).max(1);
        } else {
            b = (n / a).max(1);
        }
        if a * b > n {
            // both were larger than sqrt(n); shrink the other side too
            if a >= b {
                b = (n / a).max(1);
            } else {
                a = (n / b).max(1);
            }
        }
    }
    let c = n.div_ceil(a * b);
    MmParams { a, b, c }
}

/// One subcube: rows C^S_i x middles [mid_lo, mid_hi) x columns C^T_j.
/// Padding subcubes carry an empty middle range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subcube {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub mid_lo: usize,
    pub mid_hi: usize,
}

impl Subcube {
    pub fn mid_contains(&self, w: NodeId) -> bool {
        self.mid_lo <= w && w < self.mid_hi
    }
}

/// Globally known partition of V^3 into exactly n subcubes.
#[derive(Debug, Clone)]
pub struct CubePartition {
    pub n: usize,
    pub params: MmParams,
    pub rho_s: usize,
    pub rho_t: usize,
    /// C^S_i, sorted node lists.
    pub row_blocks: Vec<Vec<NodeId>>,
    /// C^T_j.
    pub col_blocks: Vec<Vec<NodeId>>,
    pub row_block_of: Vec<usize>,
    pub col_block_of: Vec<usize>,
    /// Middle part count per flat pair index g = i * a + j.
    pub parts_per_pair: Vec<usize>,
    /// Exactly n subcubes; subcube m is owned by node m in the identity
    /// assignment.
    pub subcubes: Vec<Subcube>,
    /// Largest finite primary component over S and T (binary search domain).
    pub max_primary: u64,
}

impl CubePartition {
    /// Nodes responsible (identity assignment) for pair (i, j).
    pub fn pair_nodes(&self, i: usize, j: usize) -> std::ops::Range<usize> {
        let g = i * self.params.a + j;
        let start: usize = self.parts_per_pair[..g].iter().sum();
        start..start + self.parts_per_pair[g]
    }

    /// Group B_{ik}: nodes whose subcube has row block i and middle index k.
    pub fn group_bik(&self, i: usize, k: usize) -> Vec<NodeId> {
        (0..self.n)
            .filter(|&m| self.subcubes[m].i == i && self.subcubes[m].k == k)
            .collect()
    }
}

/// Middle-part counts per pair: sum to exactly n, each floor(n/ab) or one
/// more, so the subcube list has exactly n entries.
fn allocate_middle_counts(n: usize, a: usize, b: usize) -> Vec<usize> {
    let pairs = a * b;
    let base = n / pairs;
    let extra = n % pairs;
    (0..pairs).map(|g| base + usize::from(g < extra)).collect()
}

/// Packed matrix position.
pub type Pos = u64;

pub fn pack_pos(n: usize, r: NodeId, c: NodeId) -> Pos {
    (r * n + c) as Pos
}

pub fn unpack_pos(n: usize, pos: Pos) -> (NodeId, NodeId) {
    ((pos as usize) / n, (pos as usize) % n)
}

/// Entry wire format: [pos, e0, e1 << 32 | witness]. Requires the second
/// encoded word and the witness to fit 32 bits each, which holds for hop
/// counts <= n and node ids.
pub fn encode_entry<S: Semiring>(n: usize, r: NodeId, c: NodeId, val: &S::Elem, wit: u32) -> [Word; 3] {
    let [e0, e1] = S::encode(val);
    debug_assert!(e1 < (1 << 32), "secondary word must fit 32 bits");
    [pack_pos(n, r, c), e0, (e1 << 32) | Word::from(wit)]
}

pub fn decode_entry<S: Semiring>(n: usize, words: &[Word]) -> (NodeId, NodeId, S::Elem, u32) {
    let (r, c) = unpack_pos(n, words[0]);
    let e0 = words[1];
    let e1 = words[2] >> 32;
    let wit = (words[2] & 0xFFFF_FFFF) as u32;
    (r, c, S::decode([e0, e1]), wit)
}

/// Construct the cube partition. Communication: one all-broadcast of row and
/// column nonzero counts, two transpose exchanges, one count scatter, and one
/// all-broadcast of the middle fenceposts; O(1) rounds.
pub fn cube_partition<S: Semiring>(
    clique: &mut Clique,
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
    rho_p: usize,
    max_primary_of: impl Fn(&S::Elem) -> u64,
) -> Result<CubePartition> {
    let n = clique.n();
    // Each node broadcasts nz(S[v, V]), nz(T[V, v]), and its local primary
    // maximum over both inputs (for the filtered search domain).
    let t_cols_nz = t.col_nz();
    let local_max: Vec<Word> = (0..n)
        .map(|v| {
            s.row(v)
                .iter()
                .map(|(_, e)| max_primary_of(e))
                .chain(t.row(v).iter().map(|(_, e)| max_primary_of(e)))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let words: Vec<Vec<Word>> = (0..n)
        .map(|v| vec![s.row(v).len() as Word, t_cols_nz[v] as Word, local_max[v]])
        .collect();
    let views = clique.all_broadcast(&words)?;
    // every node now derives the same global picture; compute it once
    let s_row_nz: Vec<u64> = (0..n).map(|v| views[0][v][0]).collect();
    let t_col_nz: Vec<u64> = (0..n).map(|v| views[0][v][1]).collect();
    let max_s: u64 = (0..n).map(|v| views[0][v][2]).max().unwrap_or(0);
    let max_primary = max_s.saturating_mul(2).max(1);

    let rho_s = density_of(s_row_nz.iter().sum::<u64>() as usize, n);
    let rho_t = density_of(t_col_nz.iter().sum::<u64>() as usize, n);
    let params = mm_params(rho_s, rho_t, rho_p, n);
    let (a, b) = (params.a, params.b);

    let row_blocks = crate::partition::partition_even(&s_row_nz, b);
    let col_blocks = crate::partition::partition_even(&t_col_nz, a);
    let mut row_block_of = vec![0usize; n];
    let mut col_block_of = vec![0usize; n];
    for (i, blk) in row_blocks.iter().enumerate() {
        for &v in blk {
            row_block_of[v] = i;
        }
    }
    for (j, blk) in col_blocks.iter().enumerate() {
        for &v in blk {
            col_block_of[v] = j;
        }
    }

    // Transpose exchanges: node v learns column v of S and row v of T.
    // One entry per ordered pair, so each takes a single round.
    let mut out = vec![Vec::new(); n];
    for v in 0..n {
        for (c, e) in s.row(v) {
            if *c != v {
                let [e0, e1] = S::encode(e);
                out[v].push(Message::new(v, *c, vec![e0, e1]));
            }
        }
    }
    let inboxes = clique.exchange(out)?;
    let mut s_col: Vec<Vec<(NodeId, S::Elem)>> = vec![Vec::new(); n];
    for v in 0..n {
        for m in &inboxes[v] {
            s_col[v].push((m.src, S::decode([m.payload[0], m.payload[1]])));
        }
        if let Ok(idx) = s.row(v).binary_search_by_key(&v, |&(c, _)| c) {
            s_col[v].push((v, s.row(v)[idx].1.clone()));
        }
        s_col[v].sort_by_key(|&(r, _)| r);
    }
    let t_cols = t.columns();
    let mut out = vec![Vec::new(); n];
    for v in 0..n {
        for (r, e) in &t_cols[v] {
            if *r != v {
                let [e0, e1] = S::encode(e);
                out[v].push(Message::new(v, *r, vec![e0, e1]));
            }
        }
    }
    let inboxes = clique.exchange(out)?;
    let mut t_row: Vec<Vec<(NodeId, S::Elem)>> = vec![Vec::new(); n];
    for v in 0..n {
        for m in &inboxes[v] {
            t_row[v].push((m.src, S::decode([m.payload[0], m.payload[1]])));
        }
        if let Ok(idx) = t.row(v).binary_search_by_key(&v, |&(c, _)| c) {
            t_row[v].push((v, t.row(v)[idx].1.clone()));
        }
        t_row[v].sort_by_key(|&(c, _)| c);
    }

    // Per-pair middle counting: node v knows, for each row block i, how many
    // nonzeros S[C^S_i, v] has, and for each column block j the analogue for
    // T[v, C^T_j]. It ships the pair needed by each node's group.
    let parts_per_pair = allocate_middle_counts(n, a, b);
    let mut pair_of_node = vec![0usize; n];
    {
        let mut node = 0usize;
        for (g, &cnt) in parts_per_pair.iter().enumerate() {
            for _ in 0..cnt {
                pair_of_node[node] = g;
                node += 1;
            }
        }
        debug_assert_eq!(node, n);
    }
    let mut cnt_s = vec![vec![0u64; b]; n]; // [v][i]
    let mut cnt_t = vec![vec![0u64; a]; n]; // [v][j]
    for v in 0..n {
        for (r, _) in &s_col[v] {
            cnt_s[v][row_block_of[*r]] += 1;
        }
        for (c, _) in &t_row[v] {
            cnt_t[v][col_block_of[*c]] += 1;
        }
    }
    let mut out = vec![Vec::new(); n];
    for v in 0..n {
        for u in 0..n {
            let g = pair_of_node[u];
            let (i, j) = (g / a, g % a);
            if u != v {
                out[v].push(Message::new(v, u, vec![cnt_s[v][i], cnt_t[v][j]]));
            }
        }
    }
    let inboxes = clique.exchange(out)?;
    // Each node partitions the middles for its own pair, then the k-th node
    // of the pair broadcasts its part's fenceposts.
    let my_parts: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let g = pair_of_node[u];
            let (i, j) = (g / a, g % a);
            let mut ws = vec![0u64; n];
            let mut us = vec![0u64; n];
            ws[u] = cnt_s[u][i];
            us[u] = cnt_t[u][j];
            for m in &inboxes[u] {
                ws[m.src] = m.payload[0];
                us[m.src] = m.payload[1];
            }
            let k_g = parts_per_pair[g];
            let parts = crate::partition::partition_consecutive_2(&ws, &us, k_g);
            // this node's part index within its pair
            let offset: usize = parts_per_pair[..g].iter().sum();
            let k = u - offset;
            parts.get(k).map(|p| vec![p[0], p[p.len() - 1] + 1]).unwrap_or_default()
        })
        .collect();
    let fencepost_words: Vec<Vec<Word>> = my_parts
        .iter()
        .map(|p| {
            if p.is_empty() {
                vec![0, 0]
            } else {
                vec![p[0] as Word, p[1] as Word]
            }
        })
        .collect();
    let views = clique.all_broadcast(&fencepost_words)?;
    let subcubes: Vec<Subcube> = (0..n)
        .map(|m| {
            let g = pair_of_node[m];
            let offset: usize = parts_per_pair[..g].iter().sum();
            Subcube {
                i: g / a,
                j: g % a,
                k: m - offset,
                mid_lo: views[0][m][0] as usize,
                mid_hi: views[0][m][1] as usize,
            }
        })
        .collect();

    let part = CubePartition {
        n,
        params,
        rho_s,
        rho_t,
        row_blocks,
        col_blocks,
        row_block_of,
        col_block_of,
        parts_per_pair,
        subcubes,
        max_primary,
    };
    check_partition_bounds(&part, &s_row_nz, &cnt_s, &cnt_t)?;
    Ok(part)
}

/// The per-slice nonzero bounds of the partition, with explicit constant 4
/// against the effective block ratio n/(b * k_g) (and the analogue for T).
fn check_partition_bounds(
    part: &CubePartition,
    s_row_nz: &[u64],
    cnt_s: &[Vec<u64>],
    cnt_t: &[Vec<u64>],
) -> Result<()> {
    let n = part.n;
    let (a, b) = (part.params.a, part.params.b);
    let rho_s = part.rho_s as u64;
    let rho_t = part.rho_t as u64;
    for blk in &part.row_blocks {
        if blk.len() > n.div_ceil(b) {
            return Err(Error::InternalInvariant(format!(
                "row block of size {} exceeds ceil(n/b) = {}",
                blk.len(),
                n.div_ceil(b)
            )));
        }
    }
    let total_s: u64 = s_row_nz.iter().sum();
    for i in 0..b {
        let got: u64 = part.row_blocks[i].iter().map(|&v| s_row_nz[v]).sum();
        let max_row = part.row_blocks[i]
            .iter()
            .map(|&v| s_row_nz[v])
            .max()
            .unwrap_or(0);
        if !crate::partition::within_bound(got, total_s, b, max_row.max(0)) {
            return Err(Error::InternalInvariant(format!(
                "row block {i} weight {got} exceeds W/b + w"
            )));
        }
    }
    for m in 0..n {
        let sc = part.subcubes[m];
        if sc.mid_lo >= sc.mid_hi {
            continue;
        }
        let k_g = part.parts_per_pair[sc.i * a + sc.j] as u64;
        let s_slice: u64 = (sc.mid_lo..sc.mid_hi).map(|w| cnt_s[w][sc.i]).sum();
        let t_slice: u64 = (sc.mid_lo..sc.mid_hi).map(|w| cnt_t[w][sc.j]).sum();
        let a_eff = (n as u64).div_ceil((b as u64) * k_g);
        let b_eff = (n as u64).div_ceil((a as u64) * k_g);
        if s_slice > 4 * (rho_s * a_eff + n as u64) {
            return Err(Error::InternalInvariant(format!(
                "S-slice of subcube {m} has {s_slice} nonzeros, above 4(rho_S*a + n)"
            )));
        }
        if t_slice > 4 * (rho_t * b_eff + n as u64) {
            return Err(Error::InternalInvariant(format!(
                "T-slice of subcube {m} has {t_slice} nonzeros, above 4(rho_T*b + n)"
            )));
        }
    }
    Ok(())
}

/// A weighted entry for the balancing task: `key` orders the global sort,
/// `data` travels with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceEntry {
    pub weight: u64,
    pub pos: Pos,
    pub data: [Word; 2],
}

const SENTINEL: Word = Word::MAX;

/// Balancing task: nodes hold up to n entries each with weights at most n
/// summing to at most `total_cap`; afterwards every node holds entries of
/// total weight at most 2(W/n + n). Sort globally by (weight, pos), then
/// deal ranks round-robin; the resulting part sums differ by at most one
/// item weight. O(1) charged rounds.
pub fn balance_load(
    clique: &mut Clique,
    entries: Vec<Vec<BalanceEntry>>,
    total_cap: u64,
) -> Result<Vec<Vec<BalanceEntry>>> {
    let n = clique.n();
    let mut total: u64 = 0;
    for (v, list) in entries.iter().enumerate() {
        if list.len() > n {
            return Err(Error::WeightViolation(format!(
                "node {v} holds {} entries, more than n = {n}",
                list.len()
            )));
        }
        for e in list {
            if e.weight > n as u64 {
                return Err(Error::WeightViolation(format!(
                    "entry weight {} at node {v} exceeds n = {n}",
                    e.weight
                )));
            }
            total += e.weight;
        }
    }
    if total > total_cap {
        return Err(Error::WeightViolation(format!(
            "total weight {total} exceeds declared cap {total_cap}"
        )));
    }
    let nn = (n * n) as u64;
    let per_node: Vec<Vec<Vec<Word>>> = entries
        .into_iter()
        .map(|list| {
            let mut keyed: Vec<Vec<Word>> = list
                .into_iter()
                .map(|e| {
                    debug_assert!(e.pos < nn);
                    vec![e.weight * nn + e.pos, e.data[0], e.data[1]]
                })
                .collect();
            keyed.resize(n, vec![SENTINEL, SENTINEL, SENTINEL]);
            keyed
        })
        .collect();
    let batches = clique.sort_global(per_node)?;
    // rank r goes to node r mod n; route accordingly
    let mut demands = Vec::new();
    for (holder, batch) in batches.iter().enumerate() {
        for (idx, e) in batch.iter().enumerate() {
            if e[0] == SENTINEL {
                continue;
            }
            let rank = holder * n + idx;
            demands.push(Message::new(holder, rank % n, e.clone()));
        }
    }
    let inboxes = clique.route_all(demands)?;
    let mut out: Vec<Vec<BalanceEntry>> = vec![Vec::new(); n];
    let bound = 2 * (total_cap / n as u64 + n as u64);
    for (v, inbox) in inboxes.into_iter().enumerate() {
        let mut sum = 0u64;
        for m in inbox {
            let weight = m.payload[0] / nn;
            let pos = m.payload[0] % nn;
            sum += weight;
            out[v].push(BalanceEntry {
                weight,
                pos,
                data: [m.payload[1], m.payload[2]],
            });
        }
        if sum > bound {
            return Err(Error::InternalInvariant(format!(
                "balanced node {v} carries weight {sum}, above 2(W/n + n) = {bound}"
            )));
        }
    }
    Ok(out)
}

/// Assignment of nodes to subcubes; `targets[v]` is the subcube whose product
/// node v must learn.
pub type Assignment = Vec<usize>;

/// Sparse local product of one subcube, sorted by packed position, with the
/// smallest witness attaining each value.
pub type LocalProduct<S> = Vec<(Pos, <S as Semiring>::Elem, u32)>;

/// Deliver to each node v the S and T slices of subcube sigma(v) and compute
/// the local product. Entries are first balanced by duplication weight, then
/// each holder ships every copy. O(rho_S a / n + rho_T b / n + 1) rounds.
pub fn distribute_products<S: Semiring>(
    clique: &mut Clique,
    part: &CubePartition,
    sigma: &Assignment,
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
) -> Result<Vec<LocalProduct<S>>> {
    let n = clique.n();
    assert_eq!(sigma.len(), n);
    let a = part.params.a;

    // multiplicity of each assigned subcube
    let mut mult = vec![0u64; n];
    for &m in sigma {
        mult[m] += 1;
    }
    // recipients per subcube
    let mut assignees: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (v, &m) in sigma.iter().enumerate() {
        assignees[m].push(v);
    }

    // S-side duplication weight of position (r, c): sum of multiplicities of
    // subcubes whose row block contains r and middle range contains c.
    // wmap_s[i][c] aggregates over subcubes with row block i.
    let mut wmap_s = vec![vec![0u64; n]; part.params.b];
    let mut wmap_t = vec![vec![0u64; n]; a];
    for m in 0..n {
        if mult[m] == 0 {
            continue;
        }
        let sc = part.subcubes[m];
        for w in sc.mid_lo..sc.mid_hi {
            wmap_s[sc.i][w] += mult[m];
            wmap_t[sc.j][w] += mult[m];
        }
    }

    let s_slices = ship_side::<S>(clique, part, s, &wmap_s, &assignees, SideKind::S)?;
    let t_slices = ship_side::<S>(clique, part, t, &wmap_t, &assignees, SideKind::T)?;

    // local products
    let mut products: Vec<LocalProduct<S>> = Vec::with_capacity(n);
    for v in 0..n {
        products.push(local_product::<S>(n, &s_slices[v], &t_slices[v]));
    }
    Ok(products)
}

enum SideKind {
    S,
    T,
}

/// Ship one input side: balance the entries by duplication weight, then ship
/// each copy to the nodes whose assigned subcube needs it.
fn ship_side<S: Semiring>(
    clique: &mut Clique,
    part: &CubePartition,
    matrix: &SparseMatrix<S>,
    wmap: &[Vec<u64>],
    assignees: &[Vec<NodeId>],
    kind: SideKind,
) -> Result<Vec<Vec<(NodeId, NodeId, S::Elem)>>> {
    let n = clique.n();
    let a = part.params.a;
    // weight of entry (r, c): how many times it appears across assigned
    // slices. For S that is indexed by (row block of r, middle c); for T by
    // (column block of c, middle r).
    let weight_of = |r: NodeId, c: NodeId| -> u64 {
        match kind {
            SideKind::S => wmap[part.row_block_of[r]][c],
            SideKind::T => wmap[part.col_block_of[c]][r],
        }
    };
    let mut entries: Vec<Vec<BalanceEntry>> = vec![Vec::new(); n];
    let mut total = 0u64;
    for v in 0..n {
        for (c, e) in matrix.row(v) {
            let w = weight_of(v, *c).min(n as u64);
            total += w;
            entries[v].push(BalanceEntry {
                weight: w,
                pos: pack_pos(n, v, *c),
                data: S::encode(e),
            });
        }
    }
    let balanced = balance_load(clique, entries, total)?;

    // each holder ships each entry to every node that needs it
    let mut demands = Vec::new();
    for (holder, list) in balanced.iter().enumerate() {
        for e in list {
            let (r, c) = unpack_pos(n, e.pos);
            let (blk, mid) = match kind {
                SideKind::S => (part.row_block_of[r], c),
                SideKind::T => (part.col_block_of[c], r),
            };
            // all assigned subcubes in this block whose middle covers mid
            for m in 0..n {
                let sc = part.subcubes[m];
                let matches = match kind {
                    SideKind::S => sc.i == blk,
                    SideKind::T => sc.j == blk,
                };
                if matches && sc.mid_contains(mid) {
                    for &dst in &assignees[m] {
                        demands.push(Message::new(
                            holder,
                            dst,
                            vec![e.pos, e.data[0], e.data[1]],
                        ));
                    }
                }
            }
        }
    }
    let inboxes = clique.route_bulk(demands)?;
    let rho = match kind {
        SideKind::S => part.rho_s as u64,
        SideKind::T => part.rho_t as u64,
    };
    let mut slices: Vec<Vec<(NodeId, NodeId, S::Elem)>> = vec![Vec::new(); n];
    for (v, inbox) in inboxes.into_iter().enumerate() {
        for m in inbox {
            let (r, c) = unpack_pos(n, m.payload[0]);
            slices[v].push((r, c, S::decode([m.payload[1], m.payload[2]])));
        }
        slices[v].sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        slices[v].dedup_by(|x, y| (x.0, x.1) == (y.0, y.1));
        // Lemma bound with constant 4 on the received slice
        let block_ratio = match kind {
            SideKind::S => (n as u64).div_ceil((part.params.b * part.params.c) as u64),
            SideKind::T => (n as u64).div_ceil((a * part.params.c) as u64),
        };
        let cap = 4 * (rho * block_ratio.max(1) + n as u64);
        if slices[v].len() as u64 > cap {
            return Err(Error::InternalInvariant(format!(
                "received slice of {} entries at node {v} exceeds 4(rho*block + n) = {cap}",
                slices[v].len()
            )));
        }
    }
    Ok(slices)
}

/// Multiply an S slice by a T slice over the middle dimension, tracking the
/// smallest witness per output value.
pub fn local_product<S: Semiring>(
    n: usize,
    s_slice: &[(NodeId, NodeId, S::Elem)],
    t_slice: &[(NodeId, NodeId, S::Elem)],
) -> LocalProduct<S> {
    use std::collections::BTreeMap;
    let mut t_by_row: BTreeMap<NodeId, Vec<(NodeId, &S::Elem)>> = BTreeMap::new();
    for (w, u, e) in t_slice {
        t_by_row.entry(*w).or_default().push((*u, e));
    }
    let mut acc: BTreeMap<Pos, (S::Elem, u32)> = BTreeMap::new();
    for (r, w, sv) in s_slice {
        let Some(trow) = t_by_row.get(w) else { continue };
        for (u, tv) in trow {
            let prod = S::mul(sv, tv);
            if S::is_zero(&prod) {
                continue;
            }
            let pos = pack_pos(n, *r, *u);
            match acc.get_mut(&pos) {
                None => {
                    acc.insert(pos, (prod, *w as u32));
                }
                Some(cur) => {
                    let sum = S::add(&cur.0, &prod);
                    if sum == cur.0 && sum == prod {
                        cur.1 = cur.1.min(*w as u32);
                    } else if sum != cur.0 {
                        *cur = (sum, *w as u32);
                    }
                }
            }
        }
    }
    acc.into_iter().map(|(pos, (e, wit))| (pos, e, wit)).collect()
}

/// Outcome of the duplication step: per node, at most ~4 rho_p c intermediate
/// values covering every elementary product exactly once.
pub struct BalancedIntermediates<S: Semiring> {
    pub values: Vec<Vec<(Pos, S::Elem, u32)>>,
}

/// Balance the intermediate products (identity products already computed):
/// broadcast the per-subcube nonzero counts, build the duplication map, ship
/// slices again under it, and split each product's entries among the
/// responsible nodes. Fails with `DensityUnderestimate` when more duplicate
/// slots are needed than nodes exist.
pub fn balance_intermediate<S: Semiring>(
    clique: &mut Clique,
    part: &CubePartition,
    rho_p: usize,
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
    identity_products: &[LocalProduct<S>],
) -> Result<BalancedIntermediates<S>> {
    let n = clique.n();
    let c = part.params.c;
    let chunk = (rho_p * c).max(1);

    let counts: Vec<Vec<Word>> = identity_products
        .iter()
        .map(|p| vec![p.len() as Word])
        .collect();
    let views = clique.all_broadcast(&counts)?;
    let nz: Vec<usize> = (0..n).map(|m| views[0][m][0] as usize).collect();

    // duplication demand
    let extras: Vec<usize> = nz.iter().map(|&z| z / chunk).collect();
    let needed: usize = extras.iter().sum();
    if needed > n {
        return Err(Error::DensityUnderestimate {
            estimate: rho_p,
            needed,
            available: n,
        });
    }
    // sigma2: pop helpers from the node pool in id order; un-popped nodes
    // keep their own subcube. A node may well end up helping itself.
    let mut sigma2: Assignment = (0..n).collect();
    let mut helpers: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut is_helper = vec![false; n];
    let mut pool = 0..n;
    for m in 0..n {
        for _ in 0..extras[m] {
            let h = pool.next().expect("pool checked above");
            sigma2[h] = m;
            is_helper[h] = true;
            helpers[m].push(h);
        }
    }
    for h in &mut helpers {
        h.sort_unstable();
    }

    let products2 = distribute_products::<S>(clique, part, &sigma2, s, t)?;

    // Product m splits into ceil(nz/chunk) consecutive chunks; chunk 0 goes
    // to the sigma1 owner (node m), chunk 1 + r to its r-th helper. A node
    // can hold two chunks: its own product's first and a helper chunk.
    let mut values: Vec<Vec<(Pos, S::Elem, u32)>> = vec![Vec::new(); n];
    for v in 0..n {
        take_chunk::<S>(&mut values[v], 0, identity_products[v].as_slice(), chunk, nz[v])?;
        if is_helper[v] {
            let m = sigma2[v];
            let rank = 1 + helpers[m].iter().position(|&h| h == v).expect("helper listed");
            take_chunk::<S>(&mut values[v], rank, products2[v].as_slice(), chunk, nz[m])?;
        }
    }
    for (v, list) in values.iter().enumerate() {
        if list.len() > 4 * chunk {
            return Err(Error::InternalInvariant(format!(
                "node {v} holds {} intermediate values, above 4 rho c = {}",
                list.len(),
                4 * chunk
            )));
        }
    }
    Ok(BalancedIntermediates { values })
}

/// Append chunk `rank` of a position-sorted product (chunks of `chunk`
/// entries each).
fn take_chunk<S: Semiring>(
    out: &mut Vec<(Pos, S::Elem, u32)>,
    rank: usize,
    product: &[(Pos, S::Elem, u32)],
    chunk: usize,
    expected_nz: usize,
) -> Result<()> {
    if product.len() != expected_nz {
        return Err(Error::InternalInvariant(format!(
            "product recomputed with {} entries, owner broadcast {expected_nz}",
            product.len()
        )));
    }
    let parts = product.len().div_ceil(chunk);
    if rank < parts {
        let lo = rank * chunk;
        let hi = ((rank + 1) * chunk).min(product.len());
        out.extend_from_slice(&product[lo..hi]);
    }
    Ok(())
}

/// Sum the intermediate values into output rows: repeatedly sort n values per
/// node by position, merge locally, push boundary positions to the smallest
/// holder, and route finished sums to their row owners.
/// O(rho_p c / n + 1) repetitions of O(1) rounds each.
pub fn sum_intermediate<S: Semiring>(
    clique: &mut Clique,
    values: Vec<Vec<(Pos, S::Elem, u32)>>,
) -> Result<(SparseMatrix<S>, SparseMatrix<crate::oracle::MinPlusWitness>)> {
    let n = clique.n();
    let counts: Vec<Vec<Word>> = values.iter().map(|v| vec![v.len() as Word]).collect();
    let views = clique.all_broadcast(&counts)?;
    let max_cnt = (0..n).map(|v| views[0][v][0] as usize).max().unwrap_or(0);
    let reps = max_cnt.div_ceil(n);

    let mut p = SparseMatrix::<S>::zero(n);
    let mut wits = SparseMatrix::<crate::oracle::MinPlusWitness>::zero(n);
    let mut queues: Vec<std::collections::VecDeque<(Pos, S::Elem, u32)>> = values
        .into_iter()
        .map(std::collections::VecDeque::from)
        .collect();

    for _ in 0..reps {
        let per_node: Vec<Vec<Vec<Word>>> = queues
            .iter_mut()
            .map(|q| {
                let take = q.len().min(n);
                let mut batch: Vec<Vec<Word>> = q
                    .drain(..take)
                    .map(|(pos, e, wit)| {
                        let (r, cc) = unpack_pos(n, pos);
                        encode_entry::<S>(n, r, cc, &e, wit).to_vec()
                    })
                    .collect();
                batch.resize(n, vec![SENTINEL, SENTINEL, SENTINEL]);
                batch
            })
            .collect();
        let batches = clique.sort_global(per_node)?;

        // local merge by position
        let mut merged: Vec<Vec<(Pos, S::Elem, u32)>> = batches
            .iter()
            .map(|batch| {
                let mut out: Vec<(Pos, S::Elem, u32)> = Vec::new();
                for e in batch {
                    if e[0] == SENTINEL {
                        continue;
                    }
                    let (r, cc, val, wit) = decode_entry::<S>(n, e);
                    let pos = pack_pos(n, r, cc);
                    match out.last_mut() {
                        Some(last) if last.0 == pos => {
                            let sum = S::add(&last.1, &val);
                            if sum == last.1 && sum == val {
                                last.2 = last.2.min(wit);
                            } else if sum != last.1 {
                                last.1 = sum;
                                last.2 = wit;
                            }
                        }
                        _ => out.push((pos, val, wit)),
                    }
                }
                out
            })
            .collect();

        // boundary detection: broadcast (min, max) held positions
        let spans: Vec<Vec<Word>> = merged
            .iter()
            .map(|m| {
                if m.is_empty() {
                    vec![SENTINEL, SENTINEL]
                } else {
                    vec![m[0].0, m[m.len() - 1].0]
                }
            })
            .collect();
        let views = clique.all_broadcast(&spans)?;
        let global_spans: Vec<(Word, Word)> =
            (0..n).map(|v| (views[0][v][0], views[0][v][1])).collect();
        let owner_of = |pos: Pos| -> NodeId {
            (0..n)
                .find(|&u| global_spans[u].0 != SENTINEL && global_spans[u].0 <= pos && pos <= global_spans[u].1)
                .expect("some node holds the position")
        };
        let mut out = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(first) = merged[v].first() {
                let owner = owner_of(first.0);
                if owner != v {
                    let (pos, e, wit) = merged[v][0].clone();
                    let (r, cc) = unpack_pos(n, pos);
                    out[v].push(Message::new(v, owner, encode_entry::<S>(n, r, cc, &e, wit).to_vec()));
                }
            }
        }
        let inboxes = clique.exchange(out)?;
        for v in 0..n {
            // drop the entry that moved away
            if let Some(first) = merged[v].first() {
                if owner_of(first.0) != v {
                    merged[v].remove(0);
                }
            }
            for m in &inboxes[v] {
                let (r, cc, val, wit) = decode_entry::<S>(n, &m.payload);
                let pos = pack_pos(n, r, cc);
                // the owned copy is the first entry (position order)
                match merged[v].iter_mut().find(|x| x.0 == pos) {
                    Some(slot) => {
                        let sum = S::add(&slot.1, &val);
                        if sum == slot.1 && sum == val {
                            slot.2 = slot.2.min(wit);
                        } else if sum != slot.1 {
                            slot.1 = sum;
                            slot.2 = wit;
                        }
                    }
                    None => merged[v].push((pos, val, wit)),
                }
            }
        }

        // route sums to row owners
        let mut demands = Vec::new();
        for v in 0..n {
            for (pos, e, wit) in &merged[v] {
                let (r, cc) = unpack_pos(n, *pos);
                demands.push(Message::new(v, r, encode_entry::<S>(n, r, cc, e, *wit).to_vec()));
            }
        }
        let inboxes = clique.route_all(demands)?;
        for (v, inbox) in inboxes.into_iter().enumerate() {
            for m in inbox {
                let (r, cc, val, wit) = decode_entry::<S>(n, &m.payload);
                debug_assert_eq!(r, v);
                let cur = p.get(r, cc);
                let sum = S::add(&cur, &val);
                if S::is_zero(&cur) {
                    p.set(r, cc, sum);
                    wits.set(r, cc, u64::from(wit));
                } else if sum != cur {
                    p.set(r, cc, sum);
                    wits.set(r, cc, u64::from(wit));
                } else if sum == val {
                    let old = wits.get(r, cc);
                    wits.set(r, cc, old.min(u64::from(wit)));
                }
            }
        }
    }
    Ok((p, wits))
}

/// Result of a full multiplication: the product, the witness per nonzero
/// entry (smallest middle index attaining it), and the restart count of the
/// density-doubling loop.
pub struct MmResult<S: Semiring> {
    pub product: SparseMatrix<S>,
    pub witnesses: SparseMatrix<crate::oracle::MinPlusWitness>,
    pub restarts: usize,
}

/// Sparse matrix multiplication, exact over any semiring. When the output
/// density is not known beforehand, start at 2 and double on demand.
pub fn sparse_mm<S: Semiring>(
    clique: &mut Clique,
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
    rho_hint: Option<usize>,
) -> Result<MmResult<S>> {
    let n = clique.n();
    assert_eq!(s.n(), n);
    assert_eq!(t.n(), n);
    let mut rho_p = rho_hint.unwrap_or(2).clamp(1, n);
    let mut restarts = 0usize;
    loop {
        match attempt::<S>(clique, s, t, rho_p) {
            Ok((product, witnesses)) => {
                return Ok(MmResult {
                    product,
                    witnesses,
                    restarts,
                })
            }
            Err(Error::DensityUnderestimate { .. }) if rho_p < n => {
                rho_p = (rho_p * 2).min(n);
                restarts += 1;
                clique.record_restart();
            }
            Err(e) => return Err(e),
        }
    }
}

fn attempt<S: Semiring>(
    clique: &mut Clique,
    s: &SparseMatrix<S>,
    t: &SparseMatrix<S>,
    rho_p: usize,
) -> Result<(SparseMatrix<S>, SparseMatrix<crate::oracle::MinPlusWitness>)> {
    let part = cube_partition::<S>(clique, s, t, rho_p, |_| 0)?;
    let identity: Assignment = (0..clique.n()).collect();
    let products = distribute_products::<S>(clique, &part, &identity, s, t)?;
    let balanced = balance_intermediate::<S>(clique, &part, rho_p, s, t, &products)?;
    sum_intermediate::<S>(clique, balanced.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_aug_matrix, random_minplus_matrix, SplitMix64};
    use crate::oracle::brute_distance_product;
    use crate::semiring::{AugMinPlus, AugWeight, MinPlus};
    use crate::sim::SimConfig;

    fn clique(n: usize) -> Clique {
        Clique::new(n, SimConfig::default())
    }

    #[test]
    fn params_examples() {
        // dense: all densities n
        let p = mm_params(8, 8, 8, 8);
        assert_eq!((p.a, p.b, p.c), (2, 2, 2));
        // all-sparse on n = 8: a = b = c = 2
        let p = mm_params(1, 1, 1, 8);
        assert_eq!((p.a, p.b, p.c), (2, 2, 2));
        // n = 1 clamps everything
        let p = mm_params(1, 1, 1, 1);
        assert_eq!((p.a, p.b, p.c), (1, 1, 1));
        // product of block pairs never exceeds n, and the cube covers it
        let mut rng = SplitMix64::new(2);
        for _ in 0..200 {
            let n = rng.range(1, 70) as usize;
            let rs = rng.range(1, n as u64) as usize;
            let rt = rng.range(1, n as u64) as usize;
            let rp = rng.range(1, n as u64) as usize;
            let p = mm_params(rs, rt, rp, n);
            assert!(p.a * p.b <= n, "ab <= n for n={n}");
            assert!(p.a * p.b * p.c >= n, "abc >= n for n={n}");
            assert!(p.a <= n && p.b <= n && p.c <= n);
        }
    }

    #[test]
    fn cube_partition_dense_8() {
        // dense all-(1,1) matrices, n=8: a=b=c=2, slices of 4x2 and 2x4 shape
        let n = 8;
        let mut s = SparseMatrix::<AugMinPlus>::zero(n);
        for r in 0..n {
            for c in 0..n {
                s.set(r, c, AugWeight::new(1, 1));
            }
        }
        let mut cl = clique(n);
        let part = cube_partition::<AugMinPlus>(&mut cl, &s, &s, n, |e| e.w).unwrap();
        assert_eq!(part.params, MmParams { a: 2, b: 2, c: 2 });
        assert_eq!(part.subcubes.len(), n);
        for sc in &part.subcubes {
            assert_eq!(sc.mid_hi - sc.mid_lo, 4, "middle blocks of 4 columns");
        }
        for blk in &part.row_blocks {
            assert_eq!(blk.len(), 4);
        }
        for blk in &part.col_blocks {
            assert_eq!(blk.len(), 4);
        }
    }

    #[test]
    fn cube_partition_covers_all_triples() {
        let mut rng = SplitMix64::new(5);
        for trial in 0..20 {
            let n = rng.range(4, 24) as usize;
            let s = random_minplus_matrix(n, 2, 30, false, 100 + trial);
            let t = random_minplus_matrix(n, 3, 30, false, 200 + trial);
            let mut cl = clique(n);
            let part = cube_partition::<MinPlus>(&mut cl, &s, &t, 2, |e| *e).unwrap();
            // every (row, mid, col) triple covered exactly once
            let mut covered = vec![0u32; n * n * n];
            for sc in &part.subcubes {
                for &r in &part.row_blocks[sc.i] {
                    for w in sc.mid_lo..sc.mid_hi {
                        for &c in &part.col_blocks[sc.j] {
                            covered[(r * n + w) * n + c] += 1;
                        }
                    }
                }
            }
            assert!(covered.iter().all(|&x| x == 1), "exact tiling, n={n}");
        }
    }

    #[test]
    fn cube_partition_zero_matrix() {
        let n = 8;
        let s = SparseMatrix::<MinPlus>::zero(n);
        let mut cl = clique(n);
        let part = cube_partition::<MinPlus>(&mut cl, &s, &s, 1, |e| *e).unwrap();
        assert_eq!(part.subcubes.len(), n);
    }

    #[test]
    fn balance_load_cases() {
        let n = 6;
        // all weights zero: any redistribution works
        let mut cl = clique(n);
        let entries: Vec<Vec<BalanceEntry>> = (0..n)
            .map(|v| {
                (0..n)
                    .map(|j| BalanceEntry {
                        weight: 0,
                        pos: pack_pos(n, v, j),
                        data: [1, 0],
                    })
                    .collect()
            })
            .collect();
        let out = balance_load(&mut cl, entries, 0).unwrap();
        assert_eq!(out.iter().map(Vec::len).sum::<usize>(), n * n);

        // one node holds n entries of weight n
        let mut cl = clique(n);
        let mut entries: Vec<Vec<BalanceEntry>> = vec![Vec::new(); n];
        entries[0] = (0..n)
            .map(|j| BalanceEntry {
                weight: n as u64,
                pos: pack_pos(n, 0, j),
                data: [j as Word, 0],
            })
            .collect();
        let w_total = (n * n) as u64;
        let out = balance_load(&mut cl, entries, w_total).unwrap();
        let bound = 2 * (w_total / n as u64 + n as u64);
        for list in &out {
            let sum: u64 = list.iter().map(|e| e.weight).sum();
            assert!(sum <= bound);
        }

        // precondition violation
        let mut cl = clique(n);
        let entries = vec![vec![BalanceEntry { weight: n as u64 + 1, pos: 0, data: [0, 0] }]; n];
        assert!(matches!(
            balance_load(&mut cl, entries, u64::MAX),
            Err(Error::WeightViolation(_))
        ));
    }

    #[test]
    fn distribute_identity_sigma_matches_sequential_slices() {
        let mut rng = SplitMix64::new(9);
        for trial in 0..10 {
            let n = 8;
            let s = random_aug_matrix(n, 2, 20, true, 300 + trial);
            let t = random_aug_matrix(n, 2, 20, true, 400 + trial);
            let mut cl = clique(n);
            let part = cube_partition::<AugMinPlus>(&mut cl, &s, &t, 2, |e| e.w).unwrap();
            let identity: Assignment = (0..n).collect();
            let products =
                distribute_products::<AugMinPlus>(&mut cl, &part, &identity, &s, &t).unwrap();
            for (m, got) in products.iter().enumerate() {
                let expect = sequential_subcube_product(&part, m, &s, &t);
                assert_eq!(got, &expect, "subcube {m} trial {trial}");
            }
            // constant sigma: every node computes the same product
            let target = rng.below(n as u64) as usize;
            let mut cl = clique(n);
            let part = cube_partition::<AugMinPlus>(&mut cl, &s, &t, 2, |e| e.w).unwrap();
            let constant: Assignment = vec![target; n];
            let products =
                distribute_products::<AugMinPlus>(&mut cl, &part, &constant, &s, &t).unwrap();
            let expect = sequential_subcube_product(&part, target, &s, &t);
            for got in &products {
                assert_eq!(got, &expect);
            }
        }
    }

    fn sequential_subcube_product(
        part: &CubePartition,
        m: usize,
        s: &SparseMatrix<AugMinPlus>,
        t: &SparseMatrix<AugMinPlus>,
    ) -> LocalProduct<AugMinPlus> {
        let sc = part.subcubes[m];
        let n = part.n;
        let mut s_slice = Vec::new();
        for &r in &part.row_blocks[sc.i] {
            for (c, e) in s.row(r) {
                if sc.mid_contains(*c) {
                    s_slice.push((r, *c, *e));
                }
            }
        }
        let mut t_slice = Vec::new();
        for w in sc.mid_lo..sc.mid_hi {
            for (c, e) in t.row(w) {
                if part.col_block_of[*c] == sc.j {
                    t_slice.push((w, *c, *e));
                }
            }
        }
        local_product::<AugMinPlus>(n, &s_slice, &t_slice)
    }

    #[test]
    fn balance_intermediate_counts() {
        // identity x identity: one diagonal intermediate value per node
        let n = 8;
        let id = SparseMatrix::<AugMinPlus>::identity(n);
        let mut cl = clique(n);
        let part = cube_partition::<AugMinPlus>(&mut cl, &id, &id, 1, |e| e.w).unwrap();
        let identity: Assignment = (0..n).collect();
        let products = distribute_products::<AugMinPlus>(&mut cl, &part, &identity, &id, &id).unwrap();
        let balanced =
            balance_intermediate::<AugMinPlus>(&mut cl, &part, 1, &id, &id, &products).unwrap();
        let total: usize = balanced.values.iter().map(Vec::len).sum();
        assert_eq!(total, n, "one value per diagonal entry");

        // empty products: nothing anywhere
        let z = SparseMatrix::<AugMinPlus>::zero(n);
        let mut cl = clique(n);
        let part = cube_partition::<AugMinPlus>(&mut cl, &z, &z, 1, |e| e.w).unwrap();
        let products = distribute_products::<AugMinPlus>(&mut cl, &part, &identity, &z, &z).unwrap();
        let balanced =
            balance_intermediate::<AugMinPlus>(&mut cl, &part, 1, &z, &z, &products).unwrap();
        assert!(balanced.values.iter().all(Vec::is_empty));
    }

    #[test]
    fn star_square_respects_per_node_bound() {
        // star adjacency squared: one dense output row forces duplication
        let n = 16;
        let g = crate::gen::generate(&crate::gen::GraphSpec::Star, n, 0).unwrap();
        let w = crate::matrix::weight_matrix(&g);
        let (brute, rho) = brute_distance_product(&w, &w);
        let mut cl = clique(n);
        let part = cube_partition::<AugMinPlus>(&mut cl, &w, &w, rho, |e| e.w).unwrap();
        let identity: Assignment = (0..n).collect();
        let products = distribute_products::<AugMinPlus>(&mut cl, &part, &identity, &w, &w).unwrap();
        let balanced =
            balance_intermediate::<AugMinPlus>(&mut cl, &part, rho, &w, &w, &products).unwrap();
        let chunk = rho * part.params.c;
        for list in &balanced.values {
            assert!(list.len() <= 4 * chunk.max(1));
        }
        let (p, _) = sum_intermediate::<AugMinPlus>(&mut cl, balanced.values).unwrap();
        assert_eq!(p, brute);
    }

    #[test]
    fn sum_intermediate_scatter_and_min() {
        let n = 4;
        // distinct positions scatter
        let mut cl = clique(n);
        let values: Vec<Vec<(Pos, u64, u32)>> = (0..n)
            .map(|v| vec![(pack_pos(n, v, (v + 1) % n), v as u64 + 1, 0)])
            .collect();
        let (p, _) = sum_intermediate::<MinPlus>(&mut cl, values).unwrap();
        for v in 0..n {
            assert_eq!(p.get(v, (v + 1) % n), v as u64 + 1);
        }
        // two values for one position: min wins
        let mut cl = clique(n);
        let mut values: Vec<Vec<(Pos, u64, u32)>> = vec![Vec::new(); n];
        values[0].push((pack_pos(n, 2, 3), 5, 7));
        values[1].push((pack_pos(n, 2, 3), 3, 9));
        let (p, wits) = sum_intermediate::<MinPlus>(&mut cl, values).unwrap();
        assert_eq!(p.get(2, 3), 3);
        assert_eq!(wits.get(2, 3), 9);
    }

    #[test]
    fn sum_intermediate_random_matches_accumulation() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..20 {
            let n = rng.range(2, 12) as usize;
            let mut values: Vec<Vec<(Pos, u64, u32)>> = vec![Vec::new(); n];
            let mut expect: std::collections::BTreeMap<Pos, u64> = Default::default();
            for v in 0..n {
                for _ in 0..rng.below(3 * n as u64) {
                    let pos = pack_pos(n, rng.below(n as u64) as usize, rng.below(n as u64) as usize);
                    let val = rng.range(1, 50);
                    values[v].push((pos, val, 0));
                    expect
                        .entry(pos)
                        .and_modify(|e| *e = (*e).min(val))
                        .or_insert(val);
                }
            }
            let mut cl = clique(n);
            let (p, _) = sum_intermediate::<MinPlus>(&mut cl, values).unwrap();
            for (&pos, &val) in &expect {
                let (r, c) = unpack_pos(n, pos);
                assert_eq!(p.get(r, c), val);
            }
            assert_eq!(p.nz(), expect.len());
        }
    }

    #[test]
    fn sparse_mm_identity_and_path() {
        let n = 8;
        let id = SparseMatrix::<AugMinPlus>::identity(n);
        let a = random_aug_matrix(n, 2, 20, false, 77);
        let mut cl = clique(n);
        let res = sparse_mm::<AugMinPlus>(&mut cl, &id, &a, None).unwrap();
        assert_eq!(res.product, a, "I * A = A");
        for (r, row) in res.product.rows().iter().enumerate() {
            for (c, _) in row {
                assert_eq!(res.witnesses.get(r, *c), r as u64, "witness is the diagonal");
            }
        }

        // path 0-1-2 with weights 1, 2: W*W [0,2] = (3,2) via witness 1
        let g = crate::graph::Graph::new(3, vec![(0, 1, 1), (1, 2, 2)], false).unwrap();
        let w = crate::matrix::weight_matrix(&g);
        let mut cl = clique(3);
        let res = sparse_mm::<AugMinPlus>(&mut cl, &w, &w, None).unwrap();
        assert_eq!(res.product.get(0, 2), AugWeight::new(3, 2));
        assert_eq!(res.witnesses.get(0, 2), 1);
    }

    #[test]
    fn sparse_mm_matches_brute_force() {
        for trial in 0..30 {
            let n = 16;
            let s = random_aug_matrix(n, 2, 25, trial % 2 == 0, 500 + trial);
            let t = random_aug_matrix(n, 2, 25, trial % 3 == 0, 600 + trial);
            let (expect, rho) = brute_distance_product(&s, &t);
            // alternate between known density and the doubling loop
            let hint = if trial % 2 == 0 { Some(rho) } else { None };
            let mut cl = clique(n);
            let res = sparse_mm::<AugMinPlus>(&mut cl, &s, &t, hint).unwrap();
            assert_eq!(res.product, expect, "trial {trial}");
            // every witness attains its product value
            for (r, row) in res.product.rows().iter().enumerate() {
                for (c, val) in row {
                    let w = res.witnesses.get(r, *c) as usize;
                    let attained = AugMinPlus::mul(&s.get(r, w), &t.get(w, *c));
                    assert_eq!(&attained, val, "witness attains P[{r},{c}]");
                }
            }
            if hint.is_some() {
                assert_eq!(res.restarts, 0);
            }
        }
    }

    #[test]
    fn replaying_a_run_gives_identical_ledger() {
        let n = 8;
        let id = SparseMatrix::<AugMinPlus>::identity(n);
        let run = || {
            let mut cl = clique(n);
            let res = sparse_mm::<AugMinPlus>(&mut cl, &id, &id, None).unwrap();
            (res.product, cl.into_ledger())
        };
        let (p1, l1) = run();
        let (p2, l2) = run();
        assert_eq!(p1, p2);
        assert_eq!(l1, l2);
        assert!(l1.peak_pair_load <= 1);
    }
}
