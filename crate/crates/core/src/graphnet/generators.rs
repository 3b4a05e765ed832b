use rand::seq::SliceRandom;
use rand::Rng;

use super::Graph;
use crate::seed;
use crate::{Error, Result};

/// Maximum number of pairing-model samples drawn before giving up.
pub const RANDOM_REGULAR_RETRY_BUDGET: usize = 10_000;

/// Seed selecting the canonical (non-random) modular rewiring.
pub const CANONICAL_MODULAR_SEED: u64 = 0;

/// Periodic square lattice (torus). Node `(r, c)` has id `r * cols + c`.
pub fn make_lattice(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 3 || cols < 3 {
        return Err(Error::DegenerateLattice { rows, cols });
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            edges.push((id(r, c), id((r + 1) % rows, c)));
            edges.push((id(r, c), id(r, (c + 1) % cols)));
        }
    }
    Graph::from_edges(rows * cols, edges)
}

/// Connected simple `d`-regular graph sampled with the pairing model.
///
/// Each attempt shuffles the `n * d` stubs and pairs them consecutively; the
/// sample is rejected if it contains a loop, a multi-edge, or is disconnected.
pub fn make_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n == 0 || d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "no simple {d}-regular graph on {n} nodes (need d < n and n*d even)"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut seen = vec![false; n * n];

    'attempt: for _ in 0..RANDOM_REGULAR_RETRY_BUDGET {
        stubs.shuffle(&mut rng);
        seen.iter_mut().for_each(|s| *s = false);
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || seen[u * n + v] {
                continue 'attempt;
            }
            seen[u * n + v] = true;
            edges.push((u, v));
        }
        let g = Graph::from_edges(n, edges)?;
        if n == 1 || g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailed {
        attempts: RANDOM_REGULAR_RETRY_BUDGET,
    })
}

/// Ring of cliques, each a ring of `clique_size` nodes joined to its four
/// nearest ring neighbours. One intra-clique edge per clique is removed and
/// its endpoints are wired to the previous and next clique on the macro-ring,
/// which keeps every degree at 4.
///
/// With [`CANONICAL_MODULAR_SEED`] the removed edge is the chord between ring
/// positions 0 and 2; position 0 links back to the previous clique's position 2.
/// Any other seed picks the removed edge and its orientation at random.
pub fn make_modular(num_cliques: usize, clique_size: usize, seed: u64) -> Result<Graph> {
    if clique_size < 5 {
        return Err(Error::Parameter(format!(
            "modular clique size must be at least 5 for a 4-nearest-neighbour ring, got {clique_size}"
        )));
    }
    if num_cliques < 3 {
        return Err(Error::Parameter(format!(
            "modular network needs at least 3 cliques, got {num_cliques}"
        )));
    }
    let mut rng = seed::rng(seed);
    let n = num_cliques * clique_size;
    let mut edges = Vec::with_capacity(2 * n);
    // (entry, exit) node per clique: entry links to the previous clique, exit to the next.
    let mut ports = Vec::with_capacity(num_cliques);

    for c in 0..num_cliques {
        let base = c * clique_size;
        let mut ring: Vec<(usize, usize)> = (0..clique_size)
            .flat_map(|p| [(p, (p + 1) % clique_size), (p, (p + 2) % clique_size)])
            .collect();
        let (entry, exit) = if seed == CANONICAL_MODULAR_SEED {
            (0, 2)
        } else {
            let (a, b) = ring[rng.random_range(0..ring.len())];
            if rng.random_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            }
        };
        ring.retain(|&(a, b)| !((a == entry && b == exit) || (a == exit && b == entry)));
        edges.extend(ring.into_iter().map(|(a, b)| (base + a, base + b)));
        ports.push((base + entry, base + exit));
    }
    for c in 0..num_cliques {
        let next = (c + 1) % num_cliques;
        edges.push((ports[c].1, ports[next].0));
    }
    Graph::from_edges(n, edges)
}

/// `n` isolated nodes; the linear (transmission-chain) baseline.
pub fn make_disconnected(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Parameter(
            "disconnected graph needs at least one node".into(),
        ));
    }
    Graph::from_edges(n, std::iter::empty())
}
