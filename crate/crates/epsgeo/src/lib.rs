//! Shortest paths on epsilon-neighborhood graphs over random point clouds,
//! compared against continuum geodesics for direction-dependent, spatially
//! varying cost kernels.
//!
//! The pipeline: sample a point cloud in a box domain, connect points closer
//! than a radius `epsilon`, run discrete shortest paths under one of three
//! edge-cost rules, and measure how the minimizers converge to continuum
//! geodesics as the cloud grows and `epsilon` shrinks.
//!
//! Crate layout:
//! - [`kernel`]: cost kernels `f(x, v)` and ellipticity estimation
//! - [`conditions`]: randomized audits of kernel regularity conditions
//! - [`sampling`]: point cloud sampling, nearest neighbor, covering radius
//! - [`graph`]: epsilon-graph construction and connectivity
//! - [`cost`]: discrete path costs (Riemann, linear-interpolation, quasinormal)
//! - [`shortest`]: Dijkstra and hop-indexed dynamic programming minimizers
//! - [`oracle`]: continuum geodesic references (grid graph + polyline descent)
//! - [`metrics`]: Hausdorff / uniform distances and path diagnostics
//! - [`sweep`]: reproducible convergence experiments with CSV output
//! - [`render`]: deterministic SVG scenes
//!
//! Heavy loops (sweep cells, audit shards, covering-radius probes) run on
//! rayon when the default `parallel` feature is enabled and fall back to
//! sequential iteration otherwise; results are identical either way.

pub mod conditions;
pub mod config;
pub mod cost;
pub mod domain;
pub mod error;
pub mod exec;
pub mod expr;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod path;
pub mod quad;
pub mod render;
pub mod sampling;
pub mod schedule;
pub mod shortest;
pub mod sweep;

pub use conditions::{check_condition, Condition, ConditionReport, Verdict, Witness};
pub use config::{CostKindSpec, OracleSpec, RunConfig};
pub use cost::{
    cost_linear, cost_quasinormal, cost_riemann, evaluate_cost, interpolate, local_df, Anchor,
    CostKind, InterpMode, LocalMode,
};
pub use domain::Domain;
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use expr::Expr;
pub use graph::{build_graph, is_connected, EpsilonGraph};
pub use kernel::{estimate_ellipticity, Kernel};
pub use metrics::{
    hausdorff_distance, path_diagnostics, uniform_distance, PathDiagnostics, PathOrPoints, Reparam,
};
pub use oracle::{
    curve_cost, grid_geodesic, grid_geodesic_unchecked, metrication_factor, refine_geodesic,
    GridOpts, OracleMethod, OracleResult, RefineOpts,
};
pub use path::{ContinuousPath, DiscretePath};
pub use quad::GaussLegendre;
pub use render::render_scene;
pub use sampling::{
    estimate_covering_radius, nearest_neighbor, sample_points, DensitySpec, PointCloud,
};
pub use schedule::{epsilon_for, ScheduleCheck};
pub use shortest::{
    default_hop_cap, shortest_path, shortest_path_exhaustive, ShortestPathResult,
};
pub use sweep::{
    fit_rate, oracle_for, run_sweep, run_sweep_with_mode, ConvergenceTable, RateFit, SweepOracle,
    SweepRow, SweepSummary,
};
