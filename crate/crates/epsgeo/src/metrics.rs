//! Path-comparison metrics and structural path diagnostics.

use crate::error::{Error, Result};
use crate::graph::EpsilonGraph;
use crate::linalg;
use crate::path::{ContinuousPath, DiscretePath};
use std::collections::HashMap;

/// Either of the two objects Hausdorff comparisons run on.
pub enum PathOrPoints<'a> {
    Path(&'a ContinuousPath),
    /// Flat row-major coordinates.
    Points { dim: usize, coords: &'a [f64] },
}

impl PathOrPoints<'_> {
    fn dim(&self) -> usize {
        match self {
            PathOrPoints::Path(p) => p.dim(),
            PathOrPoints::Points { dim, .. } => *dim,
        }
    }

    fn to_points(&self, res: f64) -> Vec<f64> {
        match self {
            PathOrPoints::Path(p) => p.densify(res),
            PathOrPoints::Points { coords, .. } => coords.to_vec(),
        }
    }
}

fn directed_hausdorff(from: &[f64], to: &[f64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for p in from.chunks_exact(dim) {
        let mut nearest = f64::INFINITY;
        for q in to.chunks_exact(dim) {
            nearest = nearest.min(linalg::dist_sq(p, q));
            if nearest == 0.0 {
                break;
            }
        }
        worst = worst.max(nearest);
    }
    worst.sqrt()
}

/// Symmetric Hausdorff distance between two point sets. Paths are densified
/// to resolution `res` first (a sensible default is epsilon / 10). Brute
/// force, O(|A| * |B|).
pub fn hausdorff_distance(a: PathOrPoints<'_>, b: PathOrPoints<'_>, res: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::config(format!(
            "hausdorff inputs must share a dimension, got {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if !(res > 0.0) {
        return Err(Error::config("densification resolution must be positive"));
    }
    let dim = a.dim();
    let pa = a.to_points(res);
    let pb = b.to_points(res);
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::config("hausdorff inputs must be nonempty"));
    }
    Ok(directed_hausdorff(&pa, &pb, dim).max(directed_hausdorff(&pb, &pa, dim)))
}

/// Whether paths are compared under their own time laws or after switching
/// both to constant Euclidean speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reparam {
    AsIs,
    ConstantSpeed,
}

const UNIFORM_GRID: usize = 4096;

/// sup_t |p1(t) - p2(t)| over a dense uniform t-grid (4096 intervals).
pub fn uniform_distance(p1: &ContinuousPath, p2: &ContinuousPath, reparam: Reparam) -> f64 {
    assert_eq!(p1.dim(), p2.dim(), "paths must share a dimension");
    let (q1, q2);
    let (p1, p2) = match reparam {
        Reparam::AsIs => (p1, p2),
        Reparam::ConstantSpeed => {
            q1 = p1.with_constant_speed_times();
            q2 = p2.with_constant_speed_times();
            (&q1, &q2)
        }
    };
    let dim = p1.dim();
    let mut x1 = vec![0.0; dim];
    let mut x2 = vec![0.0; dim];
    let mut worst = 0.0f64;
    for i in 0..=UNIFORM_GRID {
        let t = i as f64 / UNIFORM_GRID as f64;
        p1.eval(t, &mut x1);
        p2.eval(t, &mut x2);
        worst = worst.max(linalg::dist(&x1, &x2));
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathDiagnostics {
    /// Distinct cells of side epsilon/sqrt(d) touched by path vertices.
    pub boxes_visited: usize,
    pub max_points_per_box: usize,
    /// Max index gap |i - j| over vertex pairs closer than epsilon.
    pub theta_hops: usize,
    /// Max m * |edge| over the m edges.
    pub lipschitz_modulus: f64,
    pub euclidean_length: f64,
}

/// Structural diagnostics of a graph path. The pair scan for `theta_hops` is
/// O(m^2); path lengths stay small in practice.
pub fn path_diagnostics(graph: &EpsilonGraph, path: &DiscretePath) -> PathDiagnostics {
    let dim = graph.dim();
    let eps = graph.epsilon();
    let tau = eps / (dim as f64).sqrt();
    let verts = path.vertices();
    let m = path.m();

    let mut boxes: HashMap<Vec<i64>, usize> = HashMap::new();
    for &v in verts {
        let cell: Vec<i64> = graph
            .vertex(v)
            .iter()
            .map(|&c| (c / tau).floor() as i64)
            .collect();
        *boxes.entry(cell).or_insert(0) += 1;
    }
    let max_points_per_box = boxes.values().copied().max().unwrap_or(0);
    let boxes_visited = boxes.len();

    let mut theta_hops = 0usize;
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            if linalg::dist(graph.vertex(verts[i]), graph.vertex(verts[j])) < eps {
                theta_hops = theta_hops.max(j - i);
            }
        }
    }

    let mut lipschitz_modulus = 0.0f64;
    let mut euclidean_length = 0.0;
    for w in verts.windows(2) {
        let d = linalg::dist(graph.vertex(w[0]), graph.vertex(w[1]));
        euclidean_length += d;
        lipschitz_modulus = lipschitz_modulus.max(m as f64 * d);
    }

    PathDiagnostics {
        boxes_visited,
        max_points_per_box,
        theta_hops,
        lipschitz_modulus,
        euclidean_length,
    }
}
