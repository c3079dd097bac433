//! Minimum-cost a -> b paths under the three discrete costs.
//!
//! For p = 1 the hop factor is identically 1 and the cost is a plain sum of
//! positive edge weights, so Dijkstra applies. For p > 1 the m^(p-1) factor
//! couples the hop count into the objective; the solver runs a hop-indexed
//! dynamic program over layers best[h][v] and minimizes h^(p-1) * best[h][b]
//! over h up to a hop cap.
//!
//! Ties are broken the same way everywhere: exact float cost equality first
//! falls back to fewer hops, then to the lexicographically smaller vertex
//! sequence. The exhaustive solver accumulates edge weights in the same order
//! as the fast ones, so agreement tests can compare values bitwise.

use crate::cost::{hop_factor, CostKind, EdgeWeigher};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::graph::EpsilonGraph;
use crate::kernel::Kernel;
use crate::path::DiscretePath;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
pub struct ShortestPathResult {
    pub value: f64,
    pub path: DiscretePath,
}

/// Hop budget 2 (m2/m1)^(1/p) diam(D) / eps, the worst-case hop count of a
/// near-optimal path; generous for well-behaved kernels.
pub fn default_hop_cap(graph: &EpsilonGraph, kernel: &Kernel, domain: &Domain) -> usize {
    let reach = 2.0 * (kernel.m2() / kernel.m1()).powf(1.0 / kernel.p()) * domain.diameter();
    ((reach / graph.epsilon()).ceil() as usize).max(1)
}

/// Directed edge weights aligned with the graph's edge slots. `reverse`
/// evaluates the weight of (neighbor -> vertex) instead of (vertex ->
/// neighbor), which lets the hop DP scan in-edges linearly.
fn edge_weights(graph: &EpsilonGraph, weigher: &EdgeWeigher<'_>, reverse: bool) -> Vec<f64> {
    let nv = graph.num_vertices();
    let shards = 64.min(nv);
    let chunk = nv.div_ceil(shards);
    let ranges: Vec<(usize, usize)> = (0..shards)
        .map(|s| ((s * chunk).min(nv), ((s + 1) * chunk).min(nv)))
        .collect();
    let blocks: Vec<Vec<f64>> = exec::map(ExecMode::Auto, ranges, |(start, end)| {
        let mut out = Vec::with_capacity(graph.row_start(end) - graph.row_start(start));
        for i in start..end {
            let x = graph.vertex(i);
            for &j in graph.neighbors(i) {
                let y = graph.vertex(j as usize);
                out.push(if reverse {
                    weigher.weight(y, x)
                } else {
                    weigher.weight(x, y)
                });
            }
        }
        out
    });
    let mut weights = Vec::with_capacity(graph.num_directed_edges());
    for block in blocks {
        weights.extend_from_slice(&block);
    }
    weights
}

struct HeapEntry {
    cost: f64,
    hops: u32,
    vertex: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // inverted so the max-heap pops the smallest label
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap()
            .then(other.hops.cmp(&self.hops))
            .then(other.vertex.cmp(&self.vertex))
    }
}

/// Vertex sequence from the source to v along predecessor links.
fn pred_chain(pred: &[u32], v: u32) -> Vec<u32> {
    let mut chain = vec![v];
    let mut cur = v;
    while pred[cur as usize] != u32::MAX {
        cur = pred[cur as usize];
        chain.push(cur);
    }
    chain.reverse();
    chain
}

fn dijkstra(graph: &EpsilonGraph, weights: &[f64], src: usize, dst: usize) -> (f64, Vec<u32>) {
    let nv = graph.num_vertices();
    let mut dist = vec![f64::INFINITY; nv];
    let mut hops = vec![u32::MAX; nv];
    let mut pred = vec![u32::MAX; nv];
    let mut settled = vec![false; nv];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    hops[src] = 0;
    heap.push(HeapEntry {
        cost: 0.0,
        hops: 0,
        vertex: src as u32,
    });
    while let Some(entry) = heap.pop() {
        let v = entry.vertex as usize;
        if settled[v] || entry.cost != dist[v] || entry.hops != hops[v] {
            continue;
        }
        settled[v] = true;
        if v == dst {
            break;
        }
        let row = graph.neighbors(v);
        let base = graph.row_start(v);
        for (k, &t) in row.iter().enumerate() {
            let ti = t as usize;
            if settled[ti] {
                continue;
            }
            let cand = dist[v] + weights[base + k];
            let cand_hops = hops[v] + 1;
            let better = cand < dist[ti]
                || (cand == dist[ti]
                    && (cand_hops < hops[ti]
                        || (cand_hops == hops[ti]
                            && pred_chain(&pred, v as u32) < pred_chain(&pred, pred[ti]))));
            if better {
                dist[ti] = cand;
                hops[ti] = cand_hops;
                pred[ti] = v as u32;
                heap.push(HeapEntry {
                    cost: cand,
                    hops: cand_hops,
                    vertex: t,
                });
            }
        }
    }
    (dist[dst], pred)
}

/// Path to v at layer h, reconstructed through the per-layer predecessors.
fn layered_chain(layers: &[Vec<u32>], h: usize, v: u32) -> Vec<u32> {
    let mut chain = vec![v];
    let mut cur = v;
    for layer in (0..h).rev() {
        cur = layers[layer][cur as usize];
        chain.push(cur);
    }
    chain.reverse();
    chain
}

/// min over h <= cap of h^(p-1) * (min cost of an h-hop path), scanning h
/// upward with strict improvement so equal values keep the fewest hops.
fn hop_dp(
    graph: &EpsilonGraph,
    rweights: &[f64],
    p: f64,
    cap: usize,
    src: usize,
    dst: usize,
) -> (f64, usize, Vec<Vec<u32>>) {
    let nv = graph.num_vertices();
    let mut prev = vec![f64::INFINITY; nv];
    prev[src] = 0.0;
    let mut best_value = f64::INFINITY;
    let mut best_h = 0usize;
    for h in 1..=cap {
        let mut cur = vec![f64::INFINITY; nv];
        let mut alive = false;
        for t in 0..nv {
            let row = graph.neighbors(t);
            let base = graph.row_start(t);
            let mut best = f64::INFINITY;
            for (k, &v) in row.iter().enumerate() {
                let cand = prev[v as usize] + rweights[base + k];
                if cand < best {
                    best = cand;
                }
            }
            cur[t] = best;
            alive |= best.is_finite();
        }
        if !alive {
            break;
        }
        if cur[dst].is_finite() {
            let value = hop_factor(h, p) * cur[dst];
            if value < best_value {
                best_value = value;
                best_h = h;
            }
        }
        prev = cur;
    }
    if !best_value.is_finite() {
        return (best_value, 0, Vec::new());
    }

    // second pass up to the winning layer, recording predecessors with the
    // full tie-break rule; layer values repeat the first pass bitwise
    let mut layers: Vec<Vec<u32>> = Vec::with_capacity(best_h);
    let mut prev = vec![f64::INFINITY; nv];
    prev[src] = 0.0;
    for h in 1..=best_h {
        let mut cur = vec![f64::INFINITY; nv];
        let mut pred = vec![u32::MAX; nv];
        for t in 0..nv {
            let row = graph.neighbors(t);
            let base = graph.row_start(t);
            for (k, &v) in row.iter().enumerate() {
                let cand = prev[v as usize] + rweights[base + k];
                if cand < cur[t] {
                    cur[t] = cand;
                    pred[t] = v;
                } else if cand == cur[t]
                    && cand.is_finite()
                    && layered_chain(&layers, h - 1, v) < layered_chain(&layers, h - 1, pred[t])
                {
                    pred[t] = v;
                }
            }
        }
        layers.push(pred);
        prev = cur;
    }
    (best_value, best_h, layers)
}

fn reachability_checks(
    graph: &EpsilonGraph,
    cap: usize,
) -> Result<usize> {
    let a = graph.a_index();
    let b = graph.b_index();
    match graph.bfs_distance(a, b) {
        None => Err(Error::NoPath { from: a, to: b }),
        Some(d) if d > cap => Err(Error::HopCapTooSmall {
            hop_cap: cap,
            bfs_distance: d,
        }),
        Some(d) => Ok(d),
    }
}

/// Minimum-cost path from the `a` vertex to the `b` vertex.
///
/// `hop_cap` bounds the hop DP for p > 1 (and is validated against the BFS
/// distance either way); `None` uses [`default_hop_cap`].
pub fn shortest_path(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    domain: &Domain,
    kind: CostKind,
    hop_cap: Option<usize>,
) -> Result<ShortestPathResult> {
    let cap = hop_cap.unwrap_or_else(|| default_hop_cap(graph, kernel, domain));
    reachability_checks(graph, cap)?;
    let weigher = EdgeWeigher::new(kernel, domain, kind);
    let a = graph.a_index();
    let b = graph.b_index();
    if kernel.p() == 1.0 {
        let weights = edge_weights(graph, &weigher, false);
        let (value, pred) = dijkstra(graph, &weights, a, b);
        let chain = pred_chain(&pred, b as u32);
        let vertices = chain.into_iter().map(|v| v as usize).collect();
        Ok(ShortestPathResult {
            value,
            path: DiscretePath::new(vertices)?,
        })
    } else {
        let rweights = edge_weights(graph, &weigher, true);
        let (value, best_h, layers) = hop_dp(graph, &rweights, kernel.p(), cap, a, b);
        if !value.is_finite() {
            // reachable by BFS but not within the hop cap layers
            return Err(Error::HopCapTooSmall {
                hop_cap: cap,
                bfs_distance: graph.bfs_distance(a, b).unwrap_or(usize::MAX),
            });
        }
        let chain = layered_chain(&layers, best_h, b as u32);
        let vertices = chain.into_iter().map(|v| v as usize).collect();
        Ok(ShortestPathResult {
            value,
            path: DiscretePath::new(vertices)?,
        })
    }
}

/// Branch-and-bound enumeration of all simple a -> b paths. Exponential in
/// the graph size; a reference implementation for small test graphs.
pub fn shortest_path_exhaustive(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    domain: &Domain,
    kind: CostKind,
    hop_cap: Option<usize>,
) -> Result<ShortestPathResult> {
    let cap = hop_cap.unwrap_or_else(|| default_hop_cap(graph, kernel, domain));
    reachability_checks(graph, cap)?;
    let weigher = EdgeWeigher::new(kernel, domain, kind);
    let weights = edge_weights(graph, &weigher, false);
    let p = kernel.p();
    let a = graph.a_index();
    let b = graph.b_index();
    let nv = graph.num_vertices();

    struct Search<'g> {
        graph: &'g EpsilonGraph,
        weights: &'g [f64],
        p: f64,
        cap: usize,
        capped: bool,
        dst: usize,
        on_path: Vec<bool>,
        stack: Vec<u32>,
        best_value: f64,
        best_hops: usize,
        best_seq: Vec<u32>,
    }

    impl Search<'_> {
        fn explore(&mut self, v: usize, acc: f64) {
            if v == self.dst {
                let hops = self.stack.len() - 1;
                let value = hop_factor(hops, self.p) * acc;
                let better = value < self.best_value
                    || (value == self.best_value
                        && (hops < self.best_hops
                            || (hops == self.best_hops && self.stack < self.best_seq)));
                if better {
                    self.best_value = value;
                    self.best_hops = hops;
                    self.best_seq = self.stack.clone();
                }
                return;
            }
            if self.capped && self.stack.len() - 1 >= self.cap {
                return;
            }
            let row = self.graph.neighbors(v);
            let base = self.graph.row_start(v);
            for (k, &t) in row.iter().enumerate() {
                let ti = t as usize;
                if self.on_path[ti] {
                    continue;
                }
                let acc_next = acc + self.weights[base + k];
                // any completion has at least this many hops and this sum
                let bound = hop_factor(self.stack.len(), self.p) * acc_next;
                if bound > self.best_value {
                    continue;
                }
                self.on_path[ti] = true;
                self.stack.push(t);
                self.explore(ti, acc_next);
                self.stack.pop();
                self.on_path[ti] = false;
            }
        }
    }

    let mut search = Search {
        graph,
        weights: &weights,
        p,
        cap,
        capped: p > 1.0,
        dst: b,
        on_path: vec![false; nv],
        stack: vec![a as u32],
        best_value: f64::INFINITY,
        best_hops: usize::MAX,
        best_seq: Vec::new(),
    };
    search.on_path[a] = true;
    search.explore(a, 0.0);
    if !search.best_value.is_finite() {
        return Err(Error::HopCapTooSmall {
            hop_cap: cap,
            bfs_distance: graph.bfs_distance(a, b).unwrap_or(usize::MAX),
        });
    }
    let vertices = search.best_seq.iter().map(|&v| v as usize).collect();
    Ok(ShortestPathResult {
        value: search.best_value,
        path: DiscretePath::new(vertices)?,
    })
}
