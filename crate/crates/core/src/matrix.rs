//! Row-sparse square matrices over a semiring.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::semiring::{AugMinPlus, AugWeight, MinPlus, Semiring, INF};
use crate::sim::NodeId;

/// Row-sparse n x n matrix; zeros are never stored and columns within a row
/// are strictly increasing.
pub struct SparseMatrix<S: Semiring> {
    n: usize,
    rows: Vec<Vec<(NodeId, S::Elem)>>,
}

impl<S: Semiring> Clone for SparseMatrix<S> {
    fn clone(&self) -> Self {
        SparseMatrix {
            n: self.n,
            rows: self.rows.clone(),
        }
    }
}

impl<S: Semiring> PartialEq for SparseMatrix<S> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}
impl<S: Semiring> Eq for SparseMatrix<S> {}

impl<S: Semiring> fmt::Debug for SparseMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseMatrix<{}> n={} nz={}", S::NAME, self.n, self.nz())?;
        for (r, row) in self.rows.iter().enumerate() {
            if !row.is_empty() {
                writeln!(f, "  {r}: {row:?}")?;
            }
        }
        Ok(())
    }
}

impl<S: Semiring> SparseMatrix<S> {
    pub fn zero(n: usize) -> Self {
        SparseMatrix {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for v in 0..n {
            m.rows[v].push((v, S::one()));
        }
        m
    }

    pub fn from_rows(n: usize, rows: Vec<Vec<(NodeId, S::Elem)>>) -> Self {
        let mut m = SparseMatrix { n, rows };
        for row in &mut m.rows {
            row.sort_by_key(|&(c, _)| c);
            row.retain(|(_, e)| !S::is_zero(e));
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0), "duplicate column");
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<(NodeId, S::Elem)>] {
        &self.rows
    }

    pub fn row(&self, r: NodeId) -> &[(NodeId, S::Elem)] {
        &self.rows[r]
    }

    pub fn get(&self, r: NodeId, c: NodeId) -> S::Elem {
        match self.rows[r].binary_search_by_key(&c, |&(col, _)| col) {
            Ok(i) => self.rows[r][i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    /// Insert or overwrite one entry; setting the zero element deletes.
    pub fn set(&mut self, r: NodeId, c: NodeId, e: S::Elem) {
        let row = &mut self.rows[r];
        match row.binary_search_by_key(&c, |&(col, _)| col) {
            Ok(i) => {
                if S::is_zero(&e) {
                    row.remove(i);
                } else {
                    row[i].1 = e;
                }
            }
            Err(i) => {
                if !S::is_zero(&e) {
                    row.insert(i, (c, e));
                }
            }
        }
    }

    /// Accumulate with semiring addition.
    pub fn add_into(&mut self, r: NodeId, c: NodeId, e: S::Elem) {
        let cur = self.get(r, c);
        self.set(r, c, S::add(&cur, &e));
    }

    pub fn nz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Density: the smallest positive integer rho with nz <= rho * n.
    pub fn density(&self) -> usize {
        density_of(self.nz(), self.n)
    }

    /// Column-sparse view: per column, the (row, value) list in row order.
    pub fn columns(&self) -> Vec<Vec<(NodeId, S::Elem)>> {
        let mut cols = vec![Vec::new(); self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, e) in row {
                cols[*c].push((r, e.clone()));
            }
        }
        cols
    }

    pub fn transpose(&self) -> Self {
        SparseMatrix {
            n: self.n,
            rows: self.columns(),
        }
    }

    /// Per-row nonzero counts.
    pub fn row_nz(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_nz(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n];
        for row in &self.rows {
            for (c, _) in row {
                counts[*c] += 1;
            }
        }
        counts
    }
}

pub fn density_of(nz: usize, n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    nz.div_ceil(n).max(1)
}

/// The augmented weight matrix of a graph: one on the diagonal, `(w, 1)` on
/// edges, zero elsewhere.
pub fn weight_matrix(g: &Graph) -> SparseMatrix<AugMinPlus> {
    let mut m = SparseMatrix::<AugMinPlus>::zero(g.n());
    for v in 0..g.n() {
        m.set(v, v, AugWeight::ONE);
    }
    for &(u, v, w) in g.edges() {
        m.add_into(u, v, AugWeight::edge(w));
        if !g.directed() {
            m.add_into(v, u, AugWeight::edge(w));
        }
    }
    m
}

/// Plain min-plus adjacency matrix: 0 diagonal, `w` on edges, INF elsewhere.
pub fn minplus_matrix(g: &Graph) -> SparseMatrix<MinPlus> {
    let mut m = SparseMatrix::<MinPlus>::zero(g.n());
    for v in 0..g.n() {
        m.set(v, v, 0);
    }
    for &(u, v, w) in g.edges() {
        m.add_into(u, v, w);
        if !g.directed() {
            m.add_into(v, u, w);
        }
    }
    m
}

/// Text format: header `n nz`, then `row col value [hops]` per entry.
pub trait MatrixText: Semiring + Sized {
    fn entry_to_text(e: &Self::Elem) -> String;
    fn entry_from_fields(fields: &[&str], lineno: usize) -> Result<Self::Elem>;
}

impl MatrixText for MinPlus {
    fn entry_to_text(e: &u64) -> String {
        format!("{e}")
    }
    fn entry_from_fields(fields: &[&str], lineno: usize) -> Result<u64> {
        if fields.len() != 1 {
            return Err(Error::Parse {
                line: lineno,
                msg: "min-plus entry needs exactly one value field".into(),
            });
        }
        fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad value '{}'", fields[0]),
        })
    }
}

impl MatrixText for AugMinPlus {
    fn entry_to_text(e: &AugWeight) -> String {
        format!("{} {}", e.w, e.t)
    }
    fn entry_from_fields(fields: &[&str], lineno: usize) -> Result<AugWeight> {
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: "augmented entry needs value and hops fields".into(),
            });
        }
        let w = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad value '{}'", fields[0]),
        })?;
        let t = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad hops '{}'", fields[1]),
        })?;
        if (w == INF) != (t == INF) {
            return Err(Error::Parse {
                line: lineno,
                msg: "weight is infinite iff hops is".into(),
            });
        }
        Ok(AugWeight::new(w, t))
    }
}

pub fn matrix_to_text<S: MatrixText>(m: &SparseMatrix<S>) -> String {
    let mut out = format!("{} {}\n", m.n(), m.nz());
    for (r, row) in m.rows().iter().enumerate() {
        for (c, e) in row {
            out.push_str(&format!("{r} {c} {}\n", S::entry_to_text(e)));
        }
    }
    out
}

pub fn matrix_from_text<S: MatrixText>(text: &str) -> Result<SparseMatrix<S>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (lineno, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty matrix file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: lineno + 1,
            msg: format!("header needs 'n nz', got '{header}'"),
        });
    }
    let n: usize = fields[0].parse().map_err(|_| Error::Parse {
        line: lineno + 1,
        msg: format!("bad n '{}'", fields[0]),
    })?;
    let nz: usize = fields[1].parse().map_err(|_| Error::Parse {
        line: lineno + 1,
        msg: format!("bad nz '{}'", fields[1]),
    })?;
    let mut m = SparseMatrix::<S>::zero(n);
    let mut count = 0;
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("entry line needs 'row col value', got '{line}'"),
            });
        }
        let r: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("bad row '{}'", fields[0]),
        })?;
        let c: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("bad col '{}'", fields[1]),
        })?;
        if r >= n || c >= n {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("entry ({r},{c}) out of range for n = {n}"),
            });
        }
        let e = S::entry_from_fields(&fields[2..], lineno + 1)?;
        m.set(r, c, e);
        count += 1;
    }
    if count != nz {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header promises {nz} entries, file has {count}"),
        });
    }
    Ok(m)
}
