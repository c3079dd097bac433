//! Configuration-driven convergence experiments: for each (n, seed) cell,
//! sample a cloud, build the graph, run every requested cost kind, and
//! compare against a continuum oracle. Cells are independent and run on the
//! worker pool; rows come out in (n_list, seeds, cost_kinds) order either way.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{OracleSpec, RunConfig};
use crate::cost::{interpolate, InterpMode};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::graph::build_graph;
use crate::metrics::{
    hausdorff_distance, path_diagnostics, uniform_distance, PathOrPoints, Reparam,
};
use crate::oracle::{grid_geodesic, refine_geodesic, GridOpts, OracleResult, RefineOpts};
use crate::path::ContinuousPath;
use crate::sampling::{estimate_covering_radius, sample_points};
use crate::shortest::shortest_path;

pub const SCHEMA_VERSION: u32 = 1;

/// One (n, seed, cost kind) experiment outcome. Metric columns are empty when
/// the row failed (no path within the hop budget) or when the oracle supplies
/// a value but no reference curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub seed: u64,
    pub cost_kind: String,
    pub epsilon: f64,
    pub status: String,
    pub min_cost: Option<f64>,
    pub oracle_value: f64,
    pub rel_gap: Option<f64>,
    pub hausdorff: Option<f64>,
    pub hausdorff_interp: Option<f64>,
    pub uniform_cs: Option<f64>,
    pub boxes_visited: Option<usize>,
    pub max_pts_box: Option<usize>,
    pub theta_hops: Option<usize>,
    pub rn_est: f64,
    pub wall_ms: f64,
    pub peak_mem_kb: u64,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    /// Copy with the two measurement-noise columns zeroed, for determinism
    /// comparisons.
    pub fn without_timing(&self) -> SweepRow {
        let mut r = self.clone();
        r.wall_ms = 0.0;
        r.peak_mem_kb = 0;
        r
    }
}

const CSV_HEADER: [&str; 17] = [
    "n",
    "seed",
    "cost_kind",
    "epsilon",
    "status",
    "min_cost",
    "oracle_value",
    "rel_gap",
    "hausdorff",
    "hausdorff_interp",
    "uniform_cs",
    "boxes_visited",
    "max_pts_box",
    "theta_hops",
    "Rn_est",
    "wall_ms",
    "peak_mem_kb",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub schema_version: u32,
    pub rows: Vec<SweepRow>,
}

impl ConvergenceTable {
    pub fn new(rows: Vec<SweepRow>) -> Self {
        ConvergenceTable {
            schema_version: SCHEMA_VERSION,
            rows,
        }
    }

    /// Rows restricted to one cost kind, as a table of its own.
    pub fn filter_kind(&self, cost_kind: &str) -> ConvergenceTable {
        ConvergenceTable {
            schema_version: self.schema_version,
            rows: self
                .rows
                .iter()
                .filter(|r| r.cost_kind == cost_kind)
                .cloned()
                .collect(),
        }
    }

    /// Sorted distinct cost kinds present.
    pub fn kinds(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.cost_kind) {
                out.push(r.cost_kind.clone());
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.write_record([
                r.n.to_string(),
                r.seed.to_string(),
                r.cost_kind.clone(),
                fmt_f64(r.epsilon),
                r.status.clone(),
                fmt_opt(r.min_cost),
                fmt_f64(r.oracle_value),
                fmt_opt(r.rel_gap),
                fmt_opt(r.hausdorff),
                fmt_opt(r.hausdorff_interp),
                fmt_opt(r.uniform_cs),
                fmt_opt_usize(r.boxes_visited),
                fmt_opt_usize(r.max_pts_box),
                fmt_opt_usize(r.theta_hops),
                fmt_f64(r.rn_est),
                fmt_f64(r.wall_ms),
                r.peak_mem_kb.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Numeric(format!("csv not utf-8: {}", e)))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        {
            let got: Vec<&str> = rdr.headers()?.iter().collect();
            if got != CSV_HEADER {
                return Err(Error::config(format!(
                    "unexpected sweep csv header {:?}",
                    got
                )));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            rows.push(SweepRow {
                n: parse_field(field(0), "n")?,
                seed: parse_field(field(1), "seed")?,
                cost_kind: field(2).to_string(),
                epsilon: parse_field(field(3), "epsilon")?,
                status: field(4).to_string(),
                min_cost: parse_opt(field(5), "min_cost")?,
                oracle_value: parse_field(field(6), "oracle_value")?,
                rel_gap: parse_opt(field(7), "rel_gap")?,
                hausdorff: parse_opt(field(8), "hausdorff")?,
                hausdorff_interp: parse_opt(field(9), "hausdorff_interp")?,
                uniform_cs: parse_opt(field(10), "uniform_cs")?,
                boxes_visited: parse_opt(field(11), "boxes_visited")?,
                max_pts_box: parse_opt(field(12), "max_pts_box")?,
                theta_hops: parse_opt(field(13), "theta_hops")?,
                rn_est: parse_field(field(14), "Rn_est")?,
                wall_ms: parse_field(field(15), "wall_ms")?,
                peak_mem_kb: parse_field(field(16), "peak_mem_kb")?,
            });
        }
        Ok(ConvergenceTable {
            schema_version: SCHEMA_VERSION,
            rows,
        })
    }

    /// Aggregates for the machine-readable summary: per-kind, per-n medians
    /// plus a rate fit where one is computable.
    pub fn summary(&self) -> SweepSummary {
        let mut kinds = Vec::new();
        for kind in self.kinds() {
            let sub = self.filter_kind(&kind);
            let mut per_n = Vec::new();
            for n in distinct_ns(&sub) {
                let at_n: Vec<&SweepRow> = sub.rows.iter().filter(|r| r.n == n).collect();
                let gaps: Vec<f64> = at_n.iter().filter_map(|r| r.rel_gap).collect();
                let hds: Vec<f64> = at_n.iter().filter_map(|r| r.hausdorff).collect();
                per_n.push(NSummary {
                    n,
                    ok_rows: at_n.iter().filter(|r| r.ok()).count(),
                    failed_rows: at_n.iter().filter(|r| !r.ok()).count(),
                    median_rel_gap: median(&gaps),
                    median_hausdorff: median(&hds),
                });
            }
            let (rate, rate_note) = match fit_rate(&sub) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            kinds.push(KindSummary {
                cost_kind: kind,
                per_n,
                rate,
                rate_note,
            });
        }
        SweepSummary {
            schema_version: self.schema_version,
            n_rows: self.rows.len(),
            oracle_value: self.rows.first().map(|r| r.oracle_value),
            kinds,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{:?}", x)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("bad {} field {:?} in sweep csv", name, s)))
}

fn parse_opt<T: std::str::FromStr>(s: &str, name: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, name).map(Some)
    }
}

fn distinct_ns(table: &ConvergenceTable) -> Vec<usize> {
    let mut ns: Vec<usize> = Vec::new();
    for r in &table.rows {
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    ns.sort_unstable();
    ns
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub n_rows: usize,
    pub oracle_value: Option<f64>,
    pub kinds: Vec<KindSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSummary {
    pub cost_kind: String,
    pub per_n: Vec<NSummary>,
    pub rate: Option<RateFit>,
    pub rate_note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NSummary {
    pub n: usize,
    pub ok_rows: usize,
    pub failed_rows: usize,
    pub median_rel_gap: Option<f64>,
    pub median_hausdorff: Option<f64>,
}

/// Least-squares slope of log median gap against log n.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Per-n medians actually regressed on, ordered by n.
    pub used: Vec<(usize, f64)>,
    /// (n, reason) pairs dropped before fitting.
    pub excluded: Vec<(usize, String)>,
}

/// Fit median rel_gap ~ C * n^slope by ordinary least squares in log-log
/// coordinates. Every n whose median gap is not strictly positive is excluded
/// (logs are undefined there) and reported; fewer than 3 usable n values is
/// an error.
pub fn fit_rate(table: &ConvergenceTable) -> Result<RateFit> {
    let mut used: Vec<(usize, f64)> = Vec::new();
    let mut excluded: Vec<(usize, String)> = Vec::new();
    for n in distinct_ns(table) {
        let gaps: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.rel_gap)
            .collect();
        match median(&gaps) {
            None => excluded.push((n, "no rows with a gap value".into())),
            Some(m) if m <= 0.0 => {
                excluded.push((n, format!("median gap {} is not positive", m)))
            }
            Some(m) => used.push((n, m)),
        }
    }
    if used.len() < 3 {
        return Err(Error::Numeric(format!(
            "rate fit needs at least 3 n values with positive median gaps, have {} ({} excluded)",
            used.len(),
            excluded.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&(_, g)| g.ln()).collect();
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    if sxx == 0.0 {
        return Err(Error::Numeric(
            "rate fit needs at least 2 distinct n values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        used,
        excluded,
    })
}

/// The continuum reference for a sweep: a value, and a curve when the method
/// produces one.
#[derive(Debug, Clone)]
pub struct SweepOracle {
    pub value: f64,
    pub residual: f64,
    pub converged: bool,
    pub path: Option<ContinuousPath>,
    pub from_cache: bool,
}

#[derive(Serialize, Deserialize)]
struct OracleCacheEntry {
    schema_version: u32,
    desc: String,
    value: f64,
    residual: f64,
    converged: bool,
    dim: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
}

fn cache_file_name(desc: &str) -> String {
    let digest = Sha256::digest(desc.as_bytes());
    let mut hex = String::with_capacity(32);
    for b in &digest[..16] {
        hex.push_str(&format!("{:02x}", b));
    }
    format!("oracle-{}.json", hex)
}

fn load_cached_oracle(file: &Path, desc: &str) -> Option<SweepOracle> {
    let text = std::fs::read_to_string(file).ok()?;
    let entry: OracleCacheEntry = serde_json::from_str(&text).ok()?;
    if entry.schema_version != SCHEMA_VERSION || entry.desc != desc {
        return None;
    }
    let path = ContinuousPath::new(entry.dim, entry.times, entry.coords).ok()?;
    Some(SweepOracle {
        value: entry.value,
        residual: entry.residual,
        converged: entry.converged,
        path: Some(path),
        from_cache: true,
    })
}

fn store_cached_oracle(dir: &Path, file: &Path, desc: &str, result: &OracleResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let entry = OracleCacheEntry {
        schema_version: SCHEMA_VERSION,
        desc: desc.to_string(),
        value: result.value,
        residual: result.residual,
        converged: result.converged,
        dim: result.path.dim(),
        times: result.path.times().to_vec(),
        coords: result.path.coords().to_vec(),
    };
    let tmp = file.with_extension(format!("tmp.{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string(&entry)?.as_bytes())?;
    }
    std::fs::rename(&tmp, file)?;
    Ok(())
}

/// The oracle value (and curve) a sweep compares against, computed once per
/// (kernel, domain, endpoints, settings) and cached on disk under the output
/// directory. Concurrent writers race benignly: entries for the same key are
/// identical and the final rename is atomic.
pub fn oracle_for(config: &RunConfig) -> Result<SweepOracle> {
    if let OracleSpec::Fixed { value } = config.oracle {
        return Ok(SweepOracle {
            value,
            residual: 0.0,
            converged: true,
            path: None,
            from_cache: false,
        });
    }
    let desc = config.oracle_cache_desc();
    let dir = config.out_dir.join("oracle_cache");
    let file = dir.join(cache_file_name(&desc));
    if let Some(hit) = load_cached_oracle(&file, &desc) {
        return Ok(hit);
    }
    let result = compute_oracle(config)?;
    store_cached_oracle(&dir, &file, &desc, &result)?;
    Ok(SweepOracle {
        value: result.value,
        residual: result.residual,
        converged: result.converged,
        path: Some(result.path),
        from_cache: false,
    })
}

fn compute_oracle(config: &RunConfig) -> Result<OracleResult> {
    let kernel = &config.kernel;
    let domain = &config.domain;
    match config.oracle {
        OracleSpec::Fixed { .. } => unreachable!("fixed oracles are handled by the caller"),
        OracleSpec::Refine { knots, iters } => {
            let init = ContinuousPath::straight(&config.a, &config.b)?;
            refine_geodesic(
                kernel,
                domain,
                &init,
                &RefineOpts {
                    knots,
                    iters,
                    quad_order: config.quad_order,
                    ..RefineOpts::default()
                },
            )
        }
        OracleSpec::Grid { h, r } => grid_geodesic(
            kernel,
            domain,
            &config.a,
            &config.b,
            &GridOpts {
                h,
                r,
                hop_cap: None,
                quad_order: config.quad_order,
            },
        ),
        OracleSpec::GridRefine { h, r, knots, iters } => {
            let coarse = grid_geodesic(
                kernel,
                domain,
                &config.a,
                &config.b,
                &GridOpts {
                    h,
                    r,
                    hop_cap: None,
                    quad_order: config.quad_order,
                },
            )?;
            let refined = refine_geodesic(
                kernel,
                domain,
                &coarse.path,
                &RefineOpts {
                    knots,
                    iters,
                    quad_order: config.quad_order,
                    ..RefineOpts::default()
                },
            )?;
            Ok(if refined.value <= coarse.value {
                refined
            } else {
                coarse
            })
        }
    }
}

/// Run the full sweep on the default worker pool.
pub fn run_sweep(config: &RunConfig) -> Result<ConvergenceTable> {
    run_sweep_with_mode(config, ExecMode::Auto)
}

/// Run the full sweep, choosing how cells are scheduled. Results do not
/// depend on the mode.
pub fn run_sweep_with_mode(config: &RunConfig, mode: ExecMode) -> Result<ConvergenceTable> {
    let oracle = oracle_for(config)?;
    let mut cells: Vec<(usize, u64, f64)> = Vec::new();
    for &n in &config.n_list {
        let eps = config.epsilon_for(n)?;
        for &seed in &config.seeds {
            cells.push((n, seed, eps));
        }
    }
    let results = exec::map(mode, cells, |(n, seed, eps)| {
        run_cell(config, &oracle, n, seed, eps)
    });
    let mut rows = Vec::with_capacity(results.len() * config.cost_kinds.len());
    for r in results {
        rows.extend(r?);
    }
    Ok(ConvergenceTable::new(rows))
}

fn run_cell(
    config: &RunConfig,
    oracle: &SweepOracle,
    n: usize,
    seed: u64,
    epsilon: f64,
) -> Result<Vec<SweepRow>> {
    let domain = &config.domain;
    let kernel = &config.kernel;
    let cloud = sample_points(&config.density, domain, n, seed)?;
    let graph = build_graph(&cloud, &config.a, &config.b, epsilon)?;
    let dim = domain.dim();
    let min_side = (0..dim).map(|i| domain.side(i)).fold(f64::INFINITY, f64::min);
    let scale = ((n.max(2) as f64).ln() / n as f64).powf(1.0 / dim as f64);
    let rn_est = estimate_covering_radius(&cloud, domain, 0.25 * scale * min_side)?;

    let mut rows = Vec::with_capacity(config.cost_kinds.len());
    for spec in &config.cost_kinds {
        let started = Instant::now();
        let mut row = SweepRow {
            n,
            seed,
            cost_kind: spec.name.clone(),
            epsilon,
            status: "ok".into(),
            min_cost: None,
            oracle_value: oracle.value,
            rel_gap: None,
            hausdorff: None,
            hausdorff_interp: None,
            uniform_cs: None,
            boxes_visited: None,
            max_pts_box: None,
            theta_hops: None,
            rn_est,
            wall_ms: 0.0,
            peak_mem_kb: 0,
        };
        match shortest_path(&graph, kernel, domain, spec.kind, config.hop_cap) {
            Ok(res) => {
                row.min_cost = Some(res.value);
                row.rel_gap = Some((res.value - oracle.value) / oracle.value);
                let diag = path_diagnostics(&graph, &res.path);
                row.boxes_visited = Some(diag.boxes_visited);
                row.max_pts_box = Some(diag.max_points_per_box);
                row.theta_hops = Some(diag.theta_hops);
                if let Some(opath) = &oracle.path {
                    let vertex_pts = res.path.points(&graph);
                    let resolution = epsilon / 10.0;
                    row.hausdorff = Some(hausdorff_distance(
                        PathOrPoints::Points {
                            dim,
                            coords: &vertex_pts,
                        },
                        PathOrPoints::Path(opath),
                        resolution,
                    )?);
                    let interp =
                        interpolate(&graph, kernel, domain, &res.path, InterpMode::PiecewiseLinear)?;
                    row.hausdorff_interp = Some(hausdorff_distance(
                        PathOrPoints::Path(&interp),
                        PathOrPoints::Path(opath),
                        resolution,
                    )?);
                    row.uniform_cs = Some(uniform_distance(&interp, opath, Reparam::ConstantSpeed));
                }
            }
            Err(Error::NoPath { .. }) => row.status = "no_path".into(),
            Err(Error::HopCapTooSmall { .. }) => row.status = "hop_cap_too_small".into(),
            Err(e) => return Err(e),
        }
        row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        row.peak_mem_kb = peak_mem_kb();
        rows.push(row);
    }
    Ok(rows)
}

/// Process peak resident set in kB (VmHWM), 0 where unavailable. This is a
/// process-wide high-water mark, so per-row values are monotone and coarse.
pub fn peak_mem_kb() -> u64 {
    #[cfg(target_os = "linux")]
    {
        if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
            for line in status.lines() {
                if let Some(rest) = line.strip_prefix("VmHWM:") {
                    if let Some(first) = rest.split_whitespace().next() {
                        if let Ok(kb) = first.parse::<u64>() {
                            return kb;
                        }
                    }
                }
            }
        }
        0
    }
    #[cfg(not(target_os = "linux"))]
    {
        0
    }
}
