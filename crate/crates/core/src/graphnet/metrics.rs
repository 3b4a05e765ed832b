use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyMetrics {
    /// Mean hop distance over unordered distinct node pairs.
    pub avg_path_length: f64,
    /// Mean normalized betweenness centrality over nodes.
    pub mean_betweenness: f64,
}

pub fn topology_metrics(g: &Graph) -> Result<TopologyMetrics> {
    Ok(TopologyMetrics {
        avg_path_length: avg_path_length(g)?,
        mean_betweenness: mean_betweenness(g)?,
    })
}

fn require_connected(g: &Graph) -> Result<()> {
    if g.node_count() < 2 || !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

pub fn avg_path_length(g: &Graph) -> Result<f64> {
    require_connected(g)?;
    let n = g.node_count();
    let mut total = 0usize;
    for s in 0..n {
        total += g
            .bfs_distances(s)
            .iter()
            .skip(s + 1)
            .map(|d| d.expect("connected"))
            .sum::<usize>();
    }
    Ok(total as f64 / (n * (n - 1) / 2) as f64)
}

/// Per-node betweenness (Brandes), excluding endpoints and normalized by the
/// number of unordered pairs of other nodes, `(n-1)(n-2)/2`.
///
/// Works on disconnected graphs too (unreachable pairs contribute nothing).
/// Graphs with fewer than three nodes yield all zeros.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0; n];
    if n < 3 {
        return centrality;
    }

    let mut order = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        order.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = usize::MAX);
        delta.iter_mut().for_each(|x| *x = 0.0);

        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }

    // every unordered pair was counted from both endpoints
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    centrality.iter_mut().for_each(|c| *c *= scale);
    centrality
}

pub fn mean_betweenness(g: &Graph) -> Result<f64> {
    require_connected(g)?;
    let b = betweenness(g);
    Ok(b.iter().sum::<f64>() / b.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphnet::{make_disconnected, make_lattice};

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
    }

    #[test]
    fn small_path_lengths() {
        assert_eq!(avg_path_length(&cycle(5)).unwrap(), 1.5);
        assert_eq!(avg_path_length(&complete(4)).unwrap(), 1.0);
    }

    #[test]
    fn torus_metrics() {
        let g = make_lattice(7, 7).unwrap();
        assert_eq!(avg_path_length(&g).unwrap(), 3.5);
        assert!((mean_betweenness(&g).unwrap() - 2.5 / 47.0).abs() < 1e-12);
    }

    #[test]
    fn star_center_carries_every_path() {
        let g = Graph::from_edges(6, (1..6).map(|v| (0, v))).unwrap();
        let b = betweenness(&g);
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!(b[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn disconnected_input_is_an_error() {
        let g = make_disconnected(49).unwrap();
        assert_eq!(avg_path_length(&g), Err(Error::Disconnected));
        assert_eq!(mean_betweenness(&g), Err(Error::Disconnected));
        let two_components = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(avg_path_length(&two_components), Err(Error::Disconnected));
    }
}
