//! The three discrete path costs and their edge-weight decompositions.
//!
//! Every cost has the shape m^(p-1) * sum of per-edge weights, which is what
//! the shortest-path machinery exploits:
//!
//! * Riemann: weight f(anchor_i, v_{i+1} - v_i), anchored at the left vertex
//!   by default. Evaluated directly in its (1/m) sum f(v_i, m dv) form.
//! * Linear: weight = integral over the edge segment of f(., dv).
//! * Quasinormal: weight = a local geodesic distance estimate between the
//!   edge endpoints, either frozen-x or refined by polyline descent.

use crate::domain::Domain;
use crate::error::Result;
use crate::graph::EpsilonGraph;
use crate::kernel::Kernel;
use crate::linalg;
use crate::oracle::{self, RefineOpts};
use crate::path::{ContinuousPath, DiscretePath};
use crate::quad::GaussLegendre;

/// Base point for the Riemann-sum cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    #[default]
    Left,
    Midpoint,
}

/// How the quasinormal cost estimates the local distance along one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// f(u, v - u): exact for spatially frozen kernels, O(eps^2) off else.
    Frozen,
    /// Polyline descent between the endpoints.
    Refined { knots: usize, iters: usize },
}

impl LocalMode {
    pub fn refined_default() -> Self {
        LocalMode::Refined {
            knots: 17,
            iters: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    Riemann(Anchor),
    Linear { quad_order: usize },
    Quasinormal(LocalMode),
}

impl CostKind {
    pub fn riemann() -> Self {
        CostKind::Riemann(Anchor::Left)
    }

    pub fn linear() -> Self {
        CostKind::Linear { quad_order: 8 }
    }

    pub fn quasinormal_frozen() -> Self {
        CostKind::Quasinormal(LocalMode::Frozen)
    }

    /// Single-letter label used in CSV output and CLI flags.
    pub fn label(&self) -> &'static str {
        match self {
            CostKind::Riemann(_) => "H",
            CostKind::Linear { .. } => "L",
            CostKind::Quasinormal(_) => "G",
        }
    }
}

/// The global m^(p-1) factor. Shared by every evaluator and both solvers so
/// the round-trip identity holds bitwise.
#[inline]
pub(crate) fn hop_factor(m: usize, p: f64) -> f64 {
    (m as f64).powf(p - 1.0)
}

/// Local distance estimate between nearby points u, v. Returns the value and
/// whether the estimator converged (always true for Frozen).
pub fn local_df(
    kernel: &Kernel,
    domain: &Domain,
    u: &[f64],
    v: &[f64],
    mode: LocalMode,
) -> (f64, bool) {
    if u == v {
        return (0.0, true);
    }
    match mode {
        LocalMode::Frozen => {
            let d = linalg::sub(v, u);
            (kernel.eval(u, &d), true)
        }
        LocalMode::Refined { knots, iters } => {
            let init = ContinuousPath::straight(u, v).expect("endpoints validated by caller");
            let opts = RefineOpts {
                knots,
                iters,
                ..RefineOpts::default()
            };
            match oracle::refine_geodesic(kernel, domain, &init, &opts) {
                Ok(res) => (res.value, res.converged),
                // refinement only fails on malformed input; straight-line
                // value is always a valid upper bound
                Err(_) => {
                    let d = linalg::sub(v, u);
                    (kernel.eval(u, &d), false)
                }
            }
        }
    }
}

/// Per-edge weight computer for one (kernel, cost kind) pair.
pub(crate) struct EdgeWeigher<'a> {
    kernel: &'a Kernel,
    domain: &'a Domain,
    kind: CostKind,
    quad: Option<GaussLegendre>,
}

impl<'a> EdgeWeigher<'a> {
    pub fn new(kernel: &'a Kernel, domain: &'a Domain, kind: CostKind) -> Self {
        let quad = match kind {
            CostKind::Linear { quad_order } => Some(GaussLegendre::new(quad_order)),
            _ => None,
        };
        EdgeWeigher {
            kernel,
            domain,
            kind,
            quad,
        }
    }

    /// Additive weight of the directed edge u -> v.
    pub fn weight(&self, u: &[f64], v: &[f64]) -> f64 {
        match self.kind {
            CostKind::Riemann(Anchor::Left) => {
                let d = linalg::sub(v, u);
                self.kernel.eval(u, &d)
            }
            CostKind::Riemann(Anchor::Midpoint) => {
                let d = linalg::sub(v, u);
                let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
                self.kernel.eval(&mid, &d)
            }
            CostKind::Linear { .. } => {
                let d = linalg::sub(v, u);
                let mut x = vec![0.0; u.len()];
                self.quad.as_ref().unwrap().integrate01(|t| {
                    linalg::lerp_into(u, v, t, &mut x);
                    self.kernel.eval(&x, &d)
                })
            }
            CostKind::Quasinormal(mode) => local_df(self.kernel, self.domain, u, v, mode).0,
        }
    }
}

fn checked_edges<'g>(
    graph: &'g EpsilonGraph,
    path: &'g DiscretePath,
) -> Result<impl Iterator<Item = (&'g [f64], &'g [f64])>> {
    path.validate(graph)?;
    Ok(path
        .vertices()
        .windows(2)
        .map(move |w| (graph.vertex(w[0]), graph.vertex(w[1]))))
}

/// Riemann-sum cost (1/m) sum_i f(anchor_i, m (v_{i+1} - v_i)).
pub fn cost_riemann(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    path: &DiscretePath,
    anchor: Anchor,
) -> Result<f64> {
    let m = path.m();
    if m == 0 {
        let _ = checked_edges(graph, path)?;
        return Ok(0.0);
    }
    let mf = m as f64;
    let mut acc = 0.0;
    for (u, v) in checked_edges(graph, path)? {
        let mut d = linalg::sub(v, u);
        linalg::scale_in_place(&mut d, mf);
        match anchor {
            Anchor::Left => acc += kernel.eval(u, &d),
            Anchor::Midpoint => {
                let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
                acc += kernel.eval(&mid, &d);
            }
        }
    }
    Ok(acc / mf)
}

/// Piecewise-linear interpolation cost m^(p-1) sum_i int_0^1 f(l_i(t), dv_i) dt.
pub fn cost_linear(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    path: &DiscretePath,
    quad_order: usize,
) -> Result<f64> {
    let m = path.m();
    if m == 0 {
        let _ = checked_edges(graph, path)?;
        return Ok(0.0);
    }
    // The segment integral never leaves the hull of its endpoints, so the
    // domain is irrelevant here; any box works.
    let dummy = Domain::new(vec![0.0], vec![1.0]).unwrap();
    let weigher = EdgeWeigher::new(kernel, &dummy, CostKind::Linear { quad_order });
    let mut acc = 0.0;
    for (u, v) in checked_edges(graph, path)? {
        acc += weigher.weight(u, v);
    }
    Ok(hop_factor(m, kernel.p()) * acc)
}

/// Quasinormal cost m^(p-1) sum_i d_f(v_i, v_{i+1}) with d_f estimated
/// locally per edge.
pub fn cost_quasinormal(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    domain: &Domain,
    path: &DiscretePath,
    mode: LocalMode,
) -> Result<f64> {
    let m = path.m();
    if m == 0 {
        let _ = checked_edges(graph, path)?;
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (u, v) in checked_edges(graph, path)? {
        acc += local_df(kernel, domain, u, v, mode).0;
    }
    Ok(hop_factor(m, kernel.p()) * acc)
}

/// Evaluate any cost kind on a path.
pub fn evaluate_cost(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    domain: &Domain,
    path: &DiscretePath,
    kind: CostKind,
) -> Result<f64> {
    match kind {
        CostKind::Riemann(anchor) => cost_riemann(graph, kernel, path, anchor),
        CostKind::Linear { quad_order } => cost_linear(graph, kernel, path, quad_order),
        CostKind::Quasinormal(mode) => cost_quasinormal(graph, kernel, domain, path, mode),
    }
}

/// How a discrete path is turned into a continuous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    /// Straight segments, each traversed in time 1/m.
    PiecewiseLinear,
    /// Each edge replaced by its refined local geodesic polyline, still
    /// occupying the time slot [i/m, (i+1)/m].
    QuasinormalApprox { knots: usize, iters: usize },
}

/// Time-parametrize a graph path on [0, 1].
pub fn interpolate(
    graph: &EpsilonGraph,
    kernel: &Kernel,
    domain: &Domain,
    path: &DiscretePath,
    mode: InterpMode,
) -> Result<ContinuousPath> {
    path.validate(graph)?;
    let m = path.m();
    let dim = graph.dim();
    if m == 0 {
        let p = graph.vertex(path.vertices()[0]);
        return ContinuousPath::straight(p, p);
    }
    match mode {
        InterpMode::PiecewiseLinear => {
            let times: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
            ContinuousPath::new(dim, times, path.points(graph))
        }
        InterpMode::QuasinormalApprox { knots, iters } => {
            let opts = RefineOpts {
                knots,
                iters,
                ..RefineOpts::default()
            };
            let mut times = vec![0.0];
            let mut coords = graph.vertex(path.vertices()[0]).to_vec();
            for (i, w) in path.vertices().windows(2).enumerate() {
                let u = graph.vertex(w[0]);
                let v = graph.vertex(w[1]);
                let init = ContinuousPath::straight(u, v)?;
                let refined = oracle::refine_geodesic(kernel, domain, &init, &opts)?;
                let seg = refined.path;
                let k = seg.num_knots();
                for j in 1..k {
                    let local_t = seg.times()[j];
                    times.push((i as f64 + local_t) / m as f64);
                    coords.extend_from_slice(seg.knot(j));
                }
            }
            // guard against rounding on the final knot time
            let last = times.len() - 1;
            times[last] = 1.0;
            ContinuousPath::new(dim, times, coords)
        }
    }
}
