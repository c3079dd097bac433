//! Run configuration: a TOML file with nested sections, parsed strictly
//! (unknown keys are errors) and validated as a whole. Validation collects
//! every violation before failing so a bad file is fixed in one round trip.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cost::{Anchor, CostKind, LocalMode};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::kernel::Kernel;
use crate::sampling::DensitySpec;

/// How the continuum reference value for a sweep is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    /// A known exact value; no reference path is available.
    Fixed { value: f64 },
    /// Polyline descent from the straight segment.
    Refine { knots: usize, iters: usize },
    /// Shortest path on a regular lattice graph.
    Grid { h: f64, r: f64 },
    /// Lattice search first, then polyline descent from its minimizer.
    GridRefine { h: f64, r: f64, knots: usize, iters: usize },
}

/// One cost rule to run in a sweep, keyed by the name used in the config file
/// (so `G` and `G_refined` stay distinct in output rows).
#[derive(Debug, Clone)]
pub struct CostKindSpec {
    pub name: String,
    pub kind: CostKind,
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: Domain,
    pub kernel: Kernel,
    pub density: DensitySpec,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub delta: f64,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub cost_kinds: Vec<CostKindSpec>,
    pub hop_cap: Option<usize>,
    pub quad_order: usize,
    pub oracle: OracleSpec,
    pub out_dir: PathBuf,
    kernel_desc: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    kernel: RawKernel,
    density: Option<RawDensity>,
    experiment: RawExperiment,
    oracle: Option<RawOracle>,
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: String,
    p: Option<f64>,
    weight: Option<String>,
    entries: Option<Vec<String>>,
    lip_c: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    rho: Option<String>,
    c_lo: Option<f64>,
    c_hi: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    a: Vec<f64>,
    b: Vec<f64>,
    delta: f64,
    n_list: Vec<usize>,
    seeds: Vec<u64>,
    cost_kinds: Vec<String>,
    hop_cap: Option<usize>,
    quad_order: Option<usize>,
    anchor: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    mode: String,
    value: Option<f64>,
    h: Option<f64>,
    r: Option<f64>,
    knots: Option<usize>,
    iters: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: String,
}

const DEFAULT_QUAD_ORDER: usize = 8;
const DEFAULT_REFINE_KNOTS: usize = 128;
const DEFAULT_REFINE_ITERS: usize = 2000;

impl RunConfig {
    /// Parse and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Parse and validate config text. All semantic violations are collected
    /// and reported together; syntax and unknown-key errors abort immediately
    /// since nothing after them can be trusted.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| Error::config(format!("config parse: {}", e.message())))?;
        let mut violations: Vec<String> = Vec::new();

        let domain = match Domain::new(raw.domain.lo.clone(), raw.domain.hi.clone()) {
            Ok(d) => Some(d),
            Err(e) => {
                violations.push(format!("[domain] {}", e));
                None
            }
        };
        let dim = domain.as_ref().map(|d| d.dim()).unwrap_or(0);

        let (kernel, kernel_desc) = match &domain {
            Some(d) => build_kernel(&raw.kernel, d, &mut violations),
            None => (None, String::new()),
        };

        let density = build_density(raw.density.as_ref(), &mut violations);

        let exp = &raw.experiment;
        if dim > 0 {
            check_endpoint("a", &exp.a, dim, domain.as_ref(), &mut violations);
            check_endpoint("b", &exp.b, dim, domain.as_ref(), &mut violations);
            if exp.a == exp.b {
                violations.push("[experiment] a and b must be distinct".into());
            }
        }
        if !exp.delta.is_finite() || exp.delta <= 0.0 {
            violations.push(format!(
                "[experiment] delta must be finite and positive, got {}",
                exp.delta
            ));
        } else if dim > 0 && exp.delta >= 1.0 / dim as f64 {
            violations.push(format!(
                "[experiment] delta = {} violates delta < 1/d = {} required for the radius schedule",
                exp.delta,
                1.0 / dim as f64
            ));
        }
        if exp.n_list.is_empty() {
            violations.push("[experiment] n_list must not be empty".into());
        }
        if exp.n_list.iter().any(|&n| n == 0) {
            violations.push("[experiment] n_list entries must be at least 1".into());
        }
        if exp.seeds.is_empty() {
            violations.push("[experiment] seeds must not be empty".into());
        }
        let quad_order = exp.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
        if quad_order == 0 {
            violations.push("[experiment] quad_order must be at least 1".into());
        }
        if let Some(cap) = exp.hop_cap {
            if cap == 0 {
                violations.push("[experiment] hop_cap must be at least 1".into());
            }
        }
        let anchor = match exp.anchor.as_deref() {
            None | Some("left") => Anchor::Left,
            Some("midpoint") => Anchor::Midpoint,
            Some(other) => {
                violations.push(format!(
                    "[experiment] anchor must be \"left\" or \"midpoint\", got \"{}\"",
                    other
                ));
                Anchor::Left
            }
        };
        let cost_kinds = build_cost_kinds(&exp.cost_kinds, anchor, quad_order, &mut violations);

        let oracle = build_oracle(raw.oracle.as_ref(), &mut violations);

        if raw.output.dir.is_empty() {
            violations.push("[output] dir must not be empty".into());
        }

        if !violations.is_empty() {
            return Err(Error::config(format!(
                "{} violation(s): {}",
                violations.len(),
                violations.join("; ")
            )));
        }

        Ok(RunConfig {
            domain: domain.unwrap(),
            kernel: kernel.unwrap(),
            density: density.unwrap(),
            a: exp.a.clone(),
            b: exp.b.clone(),
            delta: exp.delta,
            n_list: exp.n_list.clone(),
            seeds: exp.seeds.clone(),
            cost_kinds,
            hop_cap: exp.hop_cap,
            quad_order,
            oracle: oracle.unwrap(),
            out_dir: PathBuf::from(&raw.output.dir),
            kernel_desc,
        })
    }

    /// The connectivity radius for a given cloud size under this schedule.
    pub fn epsilon_for(&self, n: usize) -> Result<f64> {
        Ok(crate::schedule::epsilon_for(n, self.delta, self.domain.dim(), None)?.epsilon)
    }

    /// A canonical text form of everything the oracle value depends on, used
    /// as cache-key material. Full-precision floats, no map iteration.
    pub fn oracle_cache_desc(&self) -> String {
        let mut s = String::new();
        s.push_str("v1|domain lo=");
        push_floats(&mut s, self.domain.lo());
        s.push_str(" hi=");
        push_floats(&mut s, self.domain.hi());
        s.push_str("|kernel ");
        s.push_str(&self.kernel_desc);
        s.push_str("|a=");
        push_floats(&mut s, &self.a);
        s.push_str("|b=");
        push_floats(&mut s, &self.b);
        s.push_str(&format!("|quad={}", self.quad_order));
        s.push_str("|oracle ");
        match &self.oracle {
            OracleSpec::Fixed { value } => s.push_str(&format!("fixed value={:?}", value)),
            OracleSpec::Refine { knots, iters } => {
                s.push_str(&format!("refine knots={} iters={}", knots, iters))
            }
            OracleSpec::Grid { h, r } => s.push_str(&format!("grid h={:?} r={:?}", h, r)),
            OracleSpec::GridRefine { h, r, knots, iters } => s.push_str(&format!(
                "grid_refine h={:?} r={:?} knots={} iters={}",
                h, r, knots, iters
            )),
        }
        s
    }
}

fn push_floats(s: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!("{:?}", x));
    }
}

fn check_endpoint(
    name: &str,
    x: &[f64],
    dim: usize,
    domain: Option<&Domain>,
    violations: &mut Vec<String>,
) {
    if x.len() != dim {
        violations.push(format!(
            "[experiment] {} has {} coordinates, domain is {}-dimensional",
            name,
            x.len(),
            dim
        ));
        return;
    }
    if x.iter().any(|v| !v.is_finite()) {
        violations.push(format!("[experiment] {} must be finite", name));
        return;
    }
    if let Some(d) = domain {
        if !d.contains(x) {
            violations.push(format!("[experiment] {} = {:?} lies outside the domain", name, x));
        }
    }
}

fn build_kernel(
    raw: &RawKernel,
    domain: &Domain,
    violations: &mut Vec<String>,
) -> (Option<Kernel>, String) {
    let dim = domain.dim();
    let forbid = |field: &str, present: bool, violations: &mut Vec<String>| {
        if present {
            violations.push(format!(
                "[kernel] field \"{}\" does not apply to family \"{}\"",
                field, raw.family
            ));
        }
    };
    let built: Option<(Kernel, String)> = match raw.family.as_str() {
        "power_norm" => {
            forbid("weight", raw.weight.is_some(), violations);
            forbid("entries", raw.entries.is_some(), violations);
            forbid("lip_c", raw.lip_c.is_some(), violations);
            let p = raw.p.unwrap_or(1.0);
            match Kernel::power_norm(p) {
                Ok(k) => Some((k, format!("power_norm p={:?}", p))),
                Err(e) => {
                    violations.push(format!("[kernel] {}", e));
                    None
                }
            }
        }
        "weighted_euclidean" => {
            forbid("p", raw.p.is_some(), violations);
            forbid("entries", raw.entries.is_some(), violations);
            let Some(src) = raw.weight.as_deref() else {
                violations.push("[kernel] weighted_euclidean requires a \"weight\" expression".into());
                return (None, String::new());
            };
            match Expr::parse(src) {
                Ok(w) if w.max_coord() > dim => {
                    violations.push(format!(
                        "[kernel] weight uses x{} but the domain is {}-dimensional",
                        w.max_coord(),
                        dim
                    ));
                    None
                }
                Ok(w) => match Kernel::weighted_euclidean(w, domain) {
                    Ok(k) => Some((k, format!("weighted_euclidean w={}", src))),
                    Err(e) => {
                        violations.push(format!("[kernel] {}", e));
                        None
                    }
                },
                Err(e) => {
                    violations.push(format!("[kernel] weight: {}", e));
                    None
                }
            }
        }
        "quadratic_form" => {
            forbid("p", raw.p.is_some(), violations);
            forbid("weight", raw.weight.is_some(), violations);
            let Some(entry_srcs) = raw.entries.as_ref() else {
                violations.push("[kernel] quadratic_form requires \"entries\"".into());
                return (None, String::new());
            };
            if entry_srcs.len() != dim * dim {
                violations.push(format!(
                    "[kernel] quadratic_form needs {}x{} = {} entries, got {}",
                    dim,
                    dim,
                    dim * dim,
                    entry_srcs.len()
                ));
                return (None, String::new());
            }
            let mut entries = Vec::with_capacity(entry_srcs.len());
            let mut ok = true;
            for (i, src) in entry_srcs.iter().enumerate() {
                match Expr::parse(src) {
                    Ok(e) => entries.push(e),
                    Err(e) => {
                        violations.push(format!("[kernel] entries[{}]: {}", i, e));
                        ok = false;
                    }
                }
            }
            if !ok {
                return (None, String::new());
            }
            match Kernel::quadratic_form(entries, domain) {
                Ok(k) => Some((k, format!("quadratic_form entries={}", entry_srcs.join("|")))),
                Err(e) => {
                    violations.push(format!("[kernel] {}", e));
                    None
                }
            }
        }
        other => {
            violations.push(format!(
                "[kernel] unknown family \"{}\" (expected power_norm, weighted_euclidean, or quadratic_form)",
                other
            ));
            None
        }
    };
    match built {
        Some((k, desc)) => {
            let k = match raw.lip_c {
                Some(c) => match k.with_lip(c) {
                    Ok(k) => k,
                    Err(e) => {
                        violations.push(format!("[kernel] lip_c: {}", e));
                        return (None, String::new());
                    }
                },
                None => k,
            };
            let desc = match raw.lip_c {
                Some(c) => format!("{} lip_c={:?}", desc, c),
                None => desc,
            };
            (Some(k), desc)
        }
        None => (None, String::new()),
    }
}

fn build_density(raw: Option<&RawDensity>, violations: &mut Vec<String>) -> Option<DensitySpec> {
    let Some(raw) = raw else {
        return Some(DensitySpec::uniform());
    };
    match (&raw.rho, raw.c_lo, raw.c_hi) {
        (None, None, None) => Some(DensitySpec::uniform()),
        (Some(src), Some(c_lo), Some(c_hi)) => match Expr::parse(src) {
            Ok(rho) => match DensitySpec::expression(rho, c_lo, c_hi) {
                Ok(d) => Some(d),
                Err(e) => {
                    violations.push(format!("[density] {}", e));
                    None
                }
            },
            Err(e) => {
                violations.push(format!("[density] rho: {}", e));
                None
            }
        },
        _ => {
            violations
                .push("[density] rho, c_lo, and c_hi must be given together (or all omitted)".into());
            None
        }
    }
}

fn build_cost_kinds(
    names: &[String],
    anchor: Anchor,
    quad_order: usize,
    violations: &mut Vec<String>,
) -> Vec<CostKindSpec> {
    if names.is_empty() {
        violations.push("[experiment] cost_kinds must not be empty".into());
        return Vec::new();
    }
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let kind = match name.as_str() {
            "H" => Some(CostKind::Riemann(anchor)),
            "L" => Some(CostKind::Linear {
                quad_order: quad_order.max(1),
            }),
            "G" => Some(CostKind::Quasinormal(LocalMode::Frozen)),
            "G_refined" => Some(CostKind::Quasinormal(LocalMode::refined_default())),
            other => {
                violations.push(format!(
                    "[experiment] unknown cost kind \"{}\" (expected H, L, G, or G_refined)",
                    other
                ));
                None
            }
        };
        if let Some(kind) = kind {
            if out.iter().any(|s: &CostKindSpec| s.name == *name) {
                violations.push(format!("[experiment] duplicate cost kind \"{}\"", name));
            } else {
                out.push(CostKindSpec {
                    name: name.clone(),
                    kind,
                });
            }
        }
    }
    out
}

fn build_oracle(raw: Option<&RawOracle>, violations: &mut Vec<String>) -> Option<OracleSpec> {
    let Some(raw) = raw else {
        return Some(OracleSpec::Refine {
            knots: DEFAULT_REFINE_KNOTS,
            iters: DEFAULT_REFINE_ITERS,
        });
    };
    let forbid = |field: &str, present: bool, violations: &mut Vec<String>| {
        if present {
            violations.push(format!(
                "[oracle] field \"{}\" does not apply to mode \"{}\"",
                field, raw.mode
            ));
        }
    };
    let knots = raw.knots.unwrap_or(DEFAULT_REFINE_KNOTS);
    let iters = raw.iters.unwrap_or(DEFAULT_REFINE_ITERS);
    let check_refine = |violations: &mut Vec<String>| {
        if knots < 2 {
            violations.push("[oracle] knots must be at least 2".into());
        }
        if iters == 0 {
            violations.push("[oracle] iters must be at least 1".into());
        }
    };
    let grid_params = |raw: &RawOracle, violations: &mut Vec<String>| -> Option<(f64, f64)> {
        let (Some(h), Some(r)) = (raw.h, raw.r) else {
            violations.push(format!(
                "[oracle] mode \"{}\" requires both h and r",
                raw.mode
            ));
            return None;
        };
        if !(h.is_finite() && h > 0.0) || !(r.is_finite() && r > 0.0) {
            violations.push("[oracle] h and r must be finite and positive".into());
            return None;
        }
        if r < 3.0 * h {
            violations.push(format!(
                "[oracle] lattice radius r = {} must be at least 3h = {}",
                r,
                3.0 * h
            ));
            return None;
        }
        Some((h, r))
    };
    match raw.mode.as_str() {
        "fixed" => {
            forbid("h", raw.h.is_some(), violations);
            forbid("r", raw.r.is_some(), violations);
            forbid("knots", raw.knots.is_some(), violations);
            forbid("iters", raw.iters.is_some(), violations);
            match raw.value {
                Some(v) if v.is_finite() && v > 0.0 => Some(OracleSpec::Fixed { value: v }),
                Some(v) => {
                    violations.push(format!(
                        "[oracle] fixed value must be finite and positive, got {}",
                        v
                    ));
                    None
                }
                None => {
                    violations.push("[oracle] mode \"fixed\" requires \"value\"".into());
                    None
                }
            }
        }
        "refine" => {
            forbid("value", raw.value.is_some(), violations);
            forbid("h", raw.h.is_some(), violations);
            forbid("r", raw.r.is_some(), violations);
            check_refine(violations);
            Some(OracleSpec::Refine { knots, iters })
        }
        "grid" => {
            forbid("value", raw.value.is_some(), violations);
            forbid("knots", raw.knots.is_some(), violations);
            forbid("iters", raw.iters.is_some(), violations);
            grid_params(raw, violations).map(|(h, r)| OracleSpec::Grid { h, r })
        }
        "grid_refine" => {
            forbid("value", raw.value.is_some(), violations);
            check_refine(violations);
            grid_params(raw, violations).map(|(h, r)| OracleSpec::GridRefine { h, r, knots, iters })
        }
        other => {
            violations.push(format!(
                "[oracle] unknown mode \"{}\" (expected fixed, refine, grid, or grid_refine)",
                other
            ));
            None
        }
    }
}
