//! Deterministic graph and matrix generators.
//!
//! All randomness comes from SplitMix64 (Steele, Lea & Flood 2014), chosen
//! over a library default so that fixtures are reproducible from the seed
//! alone and portable across implementations.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SparseMatrix;
use crate::semiring::{AugMinPlus, AugWeight, Boolean, MinPlus};

/// SplitMix64: state advances by the golden-ratio constant, output is the
/// finalizer of Stafford's mix13 variant.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, bound); bound 0 yields 0.
    pub fn below(&mut self, bound: u64) -> u64 {
        if bound == 0 {
            return 0;
        }
        // Rejection sampling to avoid modulo bias.
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    pub fn range(&mut self, lo: u64, hi_inclusive: u64) -> u64 {
        lo + self.below(hi_inclusive - lo + 1)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Graph families the harness can generate. `seed` fully determines the
/// output for every family.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Path,
    Cycle,
    Star,
    Grid,
    TwoCliques,
    /// G(n, p) with unit weights.
    RandomGnp { p: f64 },
    /// G(n, p) with uniform integer weights in [1, max_w].
    RandomWeighted { p: f64, max_w: u64 },
}

impl GraphSpec {
    pub fn parse(name: &str, p: f64, max_w: u64) -> Result<GraphSpec> {
        match name {
            "path" => Ok(GraphSpec::Path),
            "cycle" => Ok(GraphSpec::Cycle),
            "star" => Ok(GraphSpec::Star),
            "grid" => Ok(GraphSpec::Grid),
            "two-cliques" => Ok(GraphSpec::TwoCliques),
            "random-gnp" => Ok(GraphSpec::RandomGnp { p }),
            "random-weighted" => Ok(GraphSpec::RandomWeighted { p, max_w }),
            other => Err(Error::InvalidSpec(format!("unknown generator '{other}'"))),
        }
    }
}

pub fn generate(spec: &GraphSpec, n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("need n >= 2, got {n}")));
    }
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    match spec {
        GraphSpec::Path => {
            for v in 0..n - 1 {
                edges.push((v, v + 1, 1));
            }
        }
        GraphSpec::Cycle => {
            for v in 0..n - 1 {
                edges.push((v, v + 1, 1));
            }
            edges.push((n - 1, 0, 1));
        }
        GraphSpec::Star => {
            for v in 1..n {
                edges.push((0, v, 1));
            }
        }
        GraphSpec::Grid => {
            let w = (n as f64).sqrt().ceil() as usize;
            for v in 0..n {
                let (r, c) = (v / w, v % w);
                if c + 1 < w && v + 1 < n {
                    edges.push((v, v + 1, 1));
                }
                let below = (r + 1) * w + c;
                if below < n {
                    edges.push((v, below, 1));
                }
            }
        }
        GraphSpec::TwoCliques => {
            let half = n / 2;
            for u in 0..half {
                for v in u + 1..half {
                    edges.push((u, v, 1));
                }
            }
            for u in half..n {
                for v in u + 1..n {
                    edges.push((u, v, 1));
                }
            }
            edges.push((0, half, 1));
        }
        GraphSpec::RandomGnp { p } => {
            let mut rng = SplitMix64::new(seed);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.unit() < *p {
                        edges.push((u, v, 1));
                    }
                }
            }
        }
        GraphSpec::RandomWeighted { p, max_w } => {
            let mut rng = SplitMix64::new(seed);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.unit() < *p {
                        edges.push((u, v, rng.range(1, (*max_w).max(1))));
                    }
                }
            }
        }
    }
    Graph::new(n, edges, false)
}

/// Random connected unweighted graph: march the seed until G(n, p) comes out
/// connected, deterministically.
pub fn generate_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut s = seed;
    loop {
        let g = generate(&GraphSpec::RandomGnp { p }, n, s)?;
        if g.is_connected() {
            return Ok(g);
        }
        s = s.wrapping_add(0x1000_0000_0000_0001);
    }
}

/// Random row-sparse matrix with about `density * n` nonzero off-diagonal
/// entries plus a semiring-one diagonal when `with_diagonal` is set.
pub fn random_minplus_matrix(
    n: usize,
    density: usize,
    max_w: u64,
    with_diagonal: bool,
    seed: u64,
) -> SparseMatrix<MinPlus> {
    let mut rng = SplitMix64::new(seed);
    let mut m = SparseMatrix::<MinPlus>::zero(n);
    sprinkle(n, density, &mut rng, |r, c, rng| {
        m.set(r, c, rng.below(max_w.max(1)));
    });
    if with_diagonal {
        for v in 0..n {
            m.set(v, v, 0);
        }
    }
    m
}

pub fn random_aug_matrix(
    n: usize,
    density: usize,
    max_w: u64,
    with_diagonal: bool,
    seed: u64,
) -> SparseMatrix<AugMinPlus> {
    let mut rng = SplitMix64::new(seed);
    let mut m = SparseMatrix::<AugMinPlus>::zero(n);
    sprinkle(n, density, &mut rng, |r, c, rng| {
        m.set(r, c, AugWeight::new(rng.below(max_w.max(1)), rng.range(1, 4)));
    });
    if with_diagonal {
        for v in 0..n {
            m.set(v, v, AugWeight::ONE);
        }
    }
    m
}

pub fn random_bool_matrix(n: usize, density: usize, seed: u64) -> SparseMatrix<Boolean> {
    let mut rng = SplitMix64::new(seed);
    let mut m = SparseMatrix::<Boolean>::zero(n);
    sprinkle(n, density, &mut rng, |r, c, _| {
        m.set(r, c, true);
    });
    m
}

fn sprinkle(
    n: usize,
    density: usize,
    rng: &mut SplitMix64,
    mut place: impl FnMut(usize, usize, &mut SplitMix64),
) {
    let target = (density * n).min(n * n);
    if target >= n * n {
        for r in 0..n {
            for c in 0..n {
                place(r, c, rng);
            }
        }
        return;
    }
    for _ in 0..target {
        let r = rng.below(n as u64) as usize;
        let c = rng.below(n as u64) as usize;
        place(r, c, rng);
    }
}

/// Dense variant: every position nonzero.
pub fn dense_minplus_matrix(n: usize, max_w: u64, seed: u64) -> SparseMatrix<MinPlus> {
    random_minplus_matrix(n, n, max_w, false, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_star_shapes() {
        let p = generate(&GraphSpec::Path, 4, 0).unwrap();
        assert_eq!(p.edges().len(), 3);
        assert!(p.edges().iter().all(|&(_, _, w)| w == 1));
        let s = generate(&GraphSpec::Star, 5, 0).unwrap();
        assert_eq!(s.edges().len(), 4);
        assert!(s.edges().iter().all(|&(u, _, _)| u == 0));
    }

    #[test]
    fn gnp_replay_is_identical() {
        let a = generate(&GraphSpec::RandomGnp { p: 0.5 }, 16, 7).unwrap();
        let b = generate(&GraphSpec::RandomGnp { p: 0.5 }, 16, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = generate(&GraphSpec::RandomGnp { p: 0.5 }, 16, 8).unwrap();
        assert_ne!(a.edges(), c.edges(), "different seeds differ");
    }

    #[test]
    fn two_cliques_bridge() {
        let g = generate(&GraphSpec::TwoCliques, 8, 0).unwrap();
        // bridge 0 - 4 present
        assert!(g.edges().contains(&(0, 4, 1)));
        assert!(g.is_connected());
    }
}
