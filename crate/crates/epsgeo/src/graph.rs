//! The epsilon-neighborhood graph on a sampled cloud plus two endpoints.
//!
//! Vertices are the cloud points followed by `a` and `b` (always the last two
//! indices). Two vertices are adjacent iff their Euclidean distance lies
//! strictly between 0 and epsilon; the comparison is exact floating point,
//! no tolerance, so coincident points are never adjacent and rebuilds are
//! bit-identical. Adjacency is stored compressed, per-vertex sorted.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::linalg;
use crate::sampling::{CellGrid, PointCloud};
use std::collections::VecDeque;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct EpsilonGraph {
    dim: usize,
    coords: Vec<f64>,
    n_cloud: usize,
    epsilon: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl EpsilonGraph {
    pub fn num_vertices(&self) -> usize {
        self.n_cloud + 2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of cloud points (vertices excluding the two endpoints).
    pub fn n_cloud(&self) -> usize {
        self.n_cloud
    }

    pub fn a_index(&self) -> usize {
        self.n_cloud
    }

    pub fn b_index(&self) -> usize {
        self.n_cloud + 1
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    /// Offset of the edge slot (i -> j) within the directed edge array, if
    /// adjacent. Weight tables are laid out in the same order.
    pub(crate) fn edge_slot(&self, i: usize, j: u32) -> Option<usize> {
        let row = self.neighbors(i);
        row.binary_search(&j).ok().map(|k| self.offsets[i] + k)
    }

    pub(crate) fn num_directed_edges(&self) -> usize {
        self.targets.len()
    }

    /// First directed edge slot of vertex i's row.
    pub(crate) fn row_start(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Hop counts from `src` to every vertex; u32::MAX marks unreachable.
    pub(crate) fn bfs_from(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_vertices()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v];
            for &w in self.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dv + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        dist
    }

    /// Minimum hop count between two vertices, if connected.
    pub fn bfs_distance(&self, from: usize, to: usize) -> Option<usize> {
        let d = self.bfs_from(from)[to];
        (d != u32::MAX).then_some(d as usize)
    }

    /// Debug dump of the undirected edge list, one row per edge (src < dst).
    pub fn write_adjacency_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "src,dst,dist")?;
        for i in 0..self.num_vertices() {
            for &j in self.neighbors(i) {
                if (j as usize) > i {
                    let d = linalg::dist(self.vertex(i), self.vertex(j as usize));
                    writeln!(out, "{},{},{}", i, j, d)?;
                }
            }
        }
        Ok(())
    }
}

/// Build the graph on cloud + {a, b} with the strict 0 < dist < epsilon rule.
pub fn build_graph(cloud: &PointCloud, a: &[f64], b: &[f64], epsilon: f64) -> Result<EpsilonGraph> {
    let dim = cloud.dim();
    if a.len() != dim || b.len() != dim {
        return Err(Error::config(format!(
            "endpoints must have dimension {}, got {} and {}",
            dim,
            a.len(),
            b.len()
        )));
    }
    if !(linalg::all_finite(a) && linalg::all_finite(b)) {
        return Err(Error::config("endpoints must be finite"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::config(format!(
            "epsilon must be finite and positive, got {}",
            epsilon
        )));
    }
    let n_cloud = cloud.n();
    let num_vertices = n_cloud + 2;
    let mut coords = Vec::with_capacity(num_vertices * dim);
    coords.extend_from_slice(cloud.coords());
    coords.extend_from_slice(a);
    coords.extend_from_slice(b);

    let grid = CellGrid::build(dim, &coords, epsilon);
    let shards = 64.min(num_vertices);
    let chunk = num_vertices.div_ceil(shards);
    let ranges: Vec<(usize, usize)> = (0..shards)
        .map(|s| ((s * chunk).min(num_vertices), ((s + 1) * chunk).min(num_vertices)))
        .collect();
    let coords_ref = &coords;
    let grid_ref = &grid;
    let rows: Vec<Vec<Vec<u32>>> = exec::map(ExecMode::Auto, ranges, move |(start, end)| {
        let mut out = Vec::with_capacity(end - start);
        for i in start..end {
            let x = &coords_ref[i * dim..(i + 1) * dim];
            let mut row = Vec::new();
            grid_ref.for_candidates_within(x, epsilon, |j| {
                if j as usize != i {
                    let y = &coords_ref[j as usize * dim..(j as usize + 1) * dim];
                    let d = linalg::dist(x, y);
                    if d > 0.0 && d < epsilon {
                        row.push(j);
                    }
                }
            });
            row.sort_unstable();
            out.push(row);
        }
        out
    });

    let mut offsets = Vec::with_capacity(num_vertices + 1);
    offsets.push(0usize);
    let mut targets = Vec::new();
    for shard in &rows {
        for row in shard {
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
    }
    Ok(EpsilonGraph {
        dim,
        coords,
        n_cloud,
        epsilon,
        offsets,
        targets,
    })
}

/// Breadth-first reachability between two vertices.
pub fn is_connected(graph: &EpsilonGraph, a_index: usize, b_index: usize) -> bool {
    graph.bfs_distance(a_index, b_index).is_some()
}
