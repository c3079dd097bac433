//! Command line front end: every subcommand reads the same TOML run config
//! and layers a few flags on top. Exit codes: 0 on success, 2 for
//! configuration problems, 3 for runtime failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use epsgeo::conditions::{Condition, ConditionReport, Verdict};
use epsgeo::cost::InterpMode;
use epsgeo::{
    build_graph, check_condition, fit_rate, interpolate, oracle_for, render_scene, run_sweep,
    sample_points, shortest_path, ContinuousPath, ConvergenceTable, EpsilonGraph, Error, Result,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "epsgeo",
    version,
    about = "Discrete shortest paths on epsilon-neighborhood graphs, compared against continuum geodesics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured point cloud and write it as CSV
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Cloud size; defaults to the first entry of n_list
        #[arg(long)]
        n: Option<usize>,
        /// Sampling seed; defaults to the first configured seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the epsilon graph for one cell and write its adjacency as CSV
    Graph {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum discrete cost between the configured endpoints (JSON on stdout)
    Dist {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cost kind name from the config; defaults to the first
        #[arg(long)]
        kind: Option<String>,
    },
    /// Continuum oracle value for the configured endpoints (JSON on stdout)
    Geodesic {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full sweep; writes sweep.csv, summary.json and figure.svg
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Randomized audit of kernel regularity conditions (JSON on stdout)
    CheckKernel {
        #[arg(long)]
        config: PathBuf,
        /// homogeneity | ellipticity | lip | convexity | tri-ineq | pythag | hilb | all
        #[arg(long)]
        condition: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exponent for the pythag audit
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
    /// Render one cell as an SVG scene
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; defaults to <output.dir>/render.svg
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw weight-field contours behind the graph
        #[arg(long)]
        field: bool,
        /// Solve the first configured cost kind and draw its minimizer
        #[arg(long)]
        path: bool,
    },
    /// Fit a convergence rate to an existing sweep CSV (JSON on stdout)
    FitRate {
        #[arg(long)]
        csv: PathBuf,
        /// Restrict the fit to one cost kind
        #[arg(long)]
        kind: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        // A closed stdout (e.g. piping into `head`) is not a failure.
        if let Error::Io(io) = &e {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample { config, n, seed, out } => {
            let c = RunConfig::load(&config)?;
            let (n, seed) = cell_of(&c, n, seed);
            let cloud = sample_points(&c.density, &c.domain, n, seed)?;
            let mut w = writer(out.as_deref())?;
            let dim = c.domain.dim();
            let header: Vec<String> = (1..=dim).map(|i| format!("x{}", i)).collect();
            writeln!(w, "{}", header.join(","))?;
            for i in 0..cloud.n() {
                let row: Vec<String> =
                    cloud.point(i).iter().map(|v| format!("{:?}", v)).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        }
        Command::Graph { config, n, seed, out } => {
            let c = RunConfig::load(&config)?;
            let (n, seed) = cell_of(&c, n, seed);
            let (graph, _) = build_cell(&c, n, seed)?;
            let mut w = writer(out.as_deref())?;
            graph.write_adjacency_csv(&mut w)?;
            Ok(())
        }
        Command::Dist { config, n, seed, kind } => {
            let c = RunConfig::load(&config)?;
            let (n, seed) = cell_of(&c, n, seed);
            let spec = pick_kind(&c, kind.as_deref())?;
            let (graph, epsilon) = build_cell(&c, n, seed)?;
            let res = shortest_path(&graph, &c.kernel, &c.domain, spec.kind, c.hop_cap)?;
            let out = json!({
                "n": n,
                "seed": seed,
                "epsilon": epsilon,
                "cost_kind": spec.name,
                "value": res.value,
                "hops": res.path.m(),
                "vertices": res.path.vertices(),
            });
            println!("{}", out);
            Ok(())
        }
        Command::Geodesic { config } => {
            let c = RunConfig::load(&config)?;
            let o = oracle_for(&c)?;
            let out = json!({
                "value": o.value,
                "residual": o.residual,
                "converged": o.converged,
                "from_cache": o.from_cache,
                "knots": o.path.as_ref().map(|p| p.times().len()),
            });
            println!("{}", out);
            Ok(())
        }
        Command::Sweep { config } => {
            let c = RunConfig::load(&config)?;
            std::fs::create_dir_all(&c.out_dir)?;
            let table = run_sweep(&c)?;
            let csv_path = c.out_dir.join("sweep.csv");
            table.write_csv(std::fs::File::create(&csv_path)?)?;
            println!("{}", csv_path.display());
            let summary_path = c.out_dir.join("summary.json");
            std::fs::write(
                &summary_path,
                serde_json::to_string_pretty(&table.summary())?,
            )?;
            println!("{}", summary_path.display());
            if let Some(figure) = sweep_figure(&c)? {
                let figure_path = c.out_dir.join("figure.svg");
                std::fs::write(&figure_path, figure)?;
                println!("{}", figure_path.display());
            }
            Ok(())
        }
        Command::CheckKernel { config, condition, samples, tol, seed, alpha } => {
            let c = RunConfig::load(&config)?;
            let conditions = parse_conditions(&condition, alpha)?;
            let all = conditions.len() > 1;
            let mut reports = Vec::new();
            for cond in conditions {
                match check_condition(&c.kernel, cond, &c.domain, samples, tol, seed) {
                    Ok(report) => reports.push(report_json(&report)),
                    // When auditing the whole battery, conditions that do not
                    // apply (pythag in 1-d) are reported, not fatal.
                    Err(Error::Unsupported(msg)) if all => {
                        reports.push(json!({
                            "condition": cond.to_string(),
                            "verdict": "unsupported",
                            "note": msg,
                        }));
                    }
                    Err(e) => return Err(e),
                }
            }
            println!("{}", serde_json::to_string_pretty(&serde_json::Value::Array(reports))?);
            Ok(())
        }
        Command::Render { config, n, seed, out, field, path } => {
            let c = RunConfig::load(&config)?;
            let (n, seed) = cell_of(&c, n, seed);
            let (graph, _) = build_cell(&c, n, seed)?;
            let mut labeled: Vec<(ContinuousPath, String)> = Vec::new();
            if path {
                let spec = pick_kind(&c, None)?;
                let res = shortest_path(&graph, &c.kernel, &c.domain, spec.kind, c.hop_cap)?;
                let interp = interpolate(
                    &graph,
                    &c.kernel,
                    &c.domain,
                    &res.path,
                    InterpMode::PiecewiseLinear,
                )?;
                labeled.push((interp, format!("{} (n={})", spec.name, n)));
            }
            let refs: Vec<(&ContinuousPath, &str)> =
                labeled.iter().map(|(p, l)| (p, l.as_str())).collect();
            let svg = render_scene(
                &c.domain,
                Some(&graph),
                &refs,
                field.then_some(&c.kernel),
            )?;
            let out = out.unwrap_or_else(|| c.out_dir.join("render.svg"));
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&out, svg)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::FitRate { csv, kind } => {
            let mut table = ConvergenceTable::read_csv(&csv)?;
            if let Some(kind) = kind {
                table = table.filter_kind(&kind);
            }
            let fit = fit_rate(&table)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(())
        }
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cell_of(c: &RunConfig, n: Option<usize>, seed: Option<u64>) -> (usize, u64) {
    (n.unwrap_or(c.n_list[0]), seed.unwrap_or(c.seeds[0]))
}

fn build_cell(c: &RunConfig, n: usize, seed: u64) -> Result<(EpsilonGraph, f64)> {
    let epsilon = c.epsilon_for(n)?;
    let cloud = sample_points(&c.density, &c.domain, n, seed)?;
    let graph = build_graph(&cloud, &c.a, &c.b, epsilon)?;
    Ok((graph, epsilon))
}

fn pick_kind<'a>(c: &'a RunConfig, name: Option<&str>) -> Result<&'a epsgeo::CostKindSpec> {
    match name {
        None => Ok(&c.cost_kinds[0]),
        Some(name) => c
            .cost_kinds
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| {
                Error::config(format!(
                    "cost kind \"{}\" is not in the config (available: {})",
                    name,
                    c.cost_kinds
                        .iter()
                        .map(|s| s.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            }),
    }
}

/// The post-sweep figure: the largest-n cell under the first seed and cost
/// kind, drawn over the weight field together with the oracle curve. Skipped
/// outside the plane or when that cell happens to be disconnected.
fn sweep_figure(c: &RunConfig) -> Result<Option<String>> {
    if c.domain.dim() != 2 {
        return Ok(None);
    }
    let n = *c.n_list.iter().max().expect("n_list validated non-empty");
    let seed = c.seeds[0];
    let spec = &c.cost_kinds[0];
    let (graph, _) = build_cell(c, n, seed)?;
    let discrete = match shortest_path(&graph, &c.kernel, &c.domain, spec.kind, c.hop_cap) {
        Ok(res) => interpolate(
            &graph,
            &c.kernel,
            &c.domain,
            &res.path,
            InterpMode::PiecewiseLinear,
        )?,
        Err(Error::NoPath { .. }) | Err(Error::HopCapTooSmall { .. }) => {
            eprintln!("figure skipped: the n={} seed={} cell has no path", n, seed);
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let oracle = oracle_for(c)?;
    let mut labeled: Vec<(&ContinuousPath, String)> =
        vec![(&discrete, format!("{} (n={})", spec.name, n))];
    if let Some(opath) = &oracle.path {
        labeled.push((opath, "oracle".to_string()));
    }
    let refs: Vec<(&ContinuousPath, &str)> =
        labeled.iter().map(|&(p, ref l)| (p, l.as_str())).collect();
    render_scene(&c.domain, Some(&graph), &refs, Some(&c.kernel)).map(Some)
}

fn parse_conditions(name: &str, alpha: f64) -> Result<Vec<Condition>> {
    Ok(match name {
        "homogeneity" => vec![Condition::Homogeneity],
        "ellipticity" => vec![Condition::Ellipticity],
        "lip" => vec![Condition::Lip],
        "convexity" => vec![Condition::Convexity],
        "tri-ineq" => vec![Condition::TrIneq],
        "pythag" => vec![Condition::Pythag(alpha)],
        "hilb" => vec![Condition::Hilb],
        "all" => vec![
            Condition::Homogeneity,
            Condition::Ellipticity,
            Condition::Lip,
            Condition::Convexity,
            Condition::TrIneq,
            Condition::Pythag(alpha),
            Condition::Hilb,
        ],
        other => {
            return Err(Error::config(format!(
                "unknown condition \"{}\" (expected homogeneity, ellipticity, lip, convexity, tri-ineq, pythag, hilb, or all)",
                other
            )))
        }
    })
}

fn report_json(report: &ConditionReport) -> serde_json::Value {
    let mut v = json!({
        "condition": report.condition.to_string(),
        "samples_tested": report.samples_tested,
        "worst_violation": report.worst_violation,
        "estimated_constant": report.estimated_constant,
    });
    match &report.verdict {
        Verdict::Pass => {
            v["verdict"] = json!("pass");
        }
        Verdict::Fail(w) => {
            v["verdict"] = json!("fail");
            v["witness"] = json!({
                "x": w.x,
                "vectors": w.vectors,
                "violation": w.violation,
                "detail": w.detail,
            });
        }
    }
    v
}
