//! Randomized audits of the structural kernel conditions.
//!
//! These are falsification attempts, not proofs: each condition's defining
//! inequality is sampled and the worst normalized violation is compared
//! against a tolerance. Failures always carry a concrete witness that
//! reproduces the violation. Sampling is sharded with per-shard generators,
//! so reports are reproducible and independent of thread count.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::kernel::{self, Kernel};
use crate::linalg;
use crate::oracle::{self, RefineOpts};
use crate::path::ContinuousPath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    /// f(x, lambda v) = lambda^p f(x, v).
    Homogeneity,
    /// m1 |v|^p <= f(x, v) <= m2 |v|^p for the declared constants.
    Ellipticity,
    /// |f(x,v) - f(y,v)| <= c |x-y| |v|^p; estimates c when undeclared.
    Lip,
    /// Convexity in v.
    Convexity,
    /// f(x, u+w) <= f(x, u) + f(x, w).
    TrIneq,
    /// Strict triangle gain f(x,w-u) + f(x,v-w) >= f(x,v-u) + C r^alpha for
    /// detours w at distance >= r from the uv line, |uv| <= r^(1/alpha).
    Pythag(f64),
    /// Straight lines are geodesics for the spatially frozen kernel; also
    /// reports the Hamel mixed-partial finite-difference residual.
    Hilb,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Homogeneity => write!(f, "homogeneity"),
            Condition::Ellipticity => write!(f, "ellipticity"),
            Condition::Lip => write!(f, "lip"),
            Condition::Convexity => write!(f, "convexity"),
            Condition::TrIneq => write!(f, "tri-ineq"),
            Condition::Pythag(alpha) => write!(f, "pythag(alpha={})", alpha),
            Condition::Hilb => write!(f, "hilb"),
        }
    }
}

/// A concrete inputs tuple reproducing a violation.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: Vec<f64>,
    /// Condition-specific companions (second point, velocities, scalars);
    /// `detail` says what they are.
    pub vectors: Vec<Vec<f64>>,
    pub violation: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Pass,
    Fail(Witness),
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub condition: Condition,
    pub samples_tested: usize,
    pub worst_violation: f64,
    /// Fitted constant where the condition has one: the Lipschitz ratio, the
    /// Pythag gain C, or the Hamel residual (diagnostic, Hilb only).
    pub estimated_constant: Option<f64>,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }
}

struct ShardStats {
    worst: f64,
    witness: Option<Witness>,
    est_max: f64,
    est_min: f64,
}

impl ShardStats {
    fn new() -> Self {
        ShardStats {
            worst: 0.0,
            witness: None,
            est_max: f64::NEG_INFINITY,
            est_min: f64::INFINITY,
        }
    }

    fn record(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        if violation > self.worst {
            self.worst = violation;
            self.witness = Some(witness());
        }
    }

    fn merge(mut acc: Self, other: Self) -> Self {
        if other.worst > acc.worst {
            acc.worst = other.worst;
            acc.witness = other.witness;
        }
        acc.est_max = acc.est_max.max(other.est_max);
        acc.est_min = acc.est_min.min(other.est_min);
        acc
    }
}

fn collect(stats: Vec<ShardStats>) -> ShardStats {
    stats.into_iter().fold(ShardStats::new(), ShardStats::merge)
}

fn report(
    condition: Condition,
    samples_tested: usize,
    tol: f64,
    stats: ShardStats,
    estimated_constant: Option<f64>,
) -> ConditionReport {
    let verdict = if stats.worst > tol {
        Verdict::Fail(stats.witness.expect("violations always carry a witness"))
    } else {
        Verdict::Pass
    };
    ConditionReport {
        condition,
        samples_tested,
        worst_violation: stats.worst,
        estimated_constant,
        verdict,
    }
}

/// Audit one condition with `n_samples` random probes at tolerance `tol`.
pub fn check_condition(
    kernel: &Kernel,
    condition: Condition,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ConditionReport> {
    if n_samples < 1 {
        return Err(Error::config("condition audits need at least 1 sample"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::config("tolerance must be finite and positive"));
    }
    match condition {
        Condition::Homogeneity => Ok(check_homogeneity(kernel, domain, n_samples, tol, seed)),
        Condition::Ellipticity => Ok(check_ellipticity(kernel, domain, n_samples, tol, seed)),
        Condition::Lip => Ok(check_lip(kernel, domain, n_samples, tol, seed)),
        Condition::Convexity => Ok(check_convexity(kernel, domain, n_samples, tol, seed)),
        Condition::TrIneq => Ok(check_tri_ineq(kernel, domain, n_samples, tol, seed)),
        Condition::Pythag(alpha) => check_pythag(kernel, domain, alpha, n_samples, tol, seed),
        Condition::Hilb => Ok(check_hilb(kernel, domain, n_samples, tol, seed)),
    }
}

fn check_homogeneity(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let p = kernel.p();
    let dim = domain.dim();
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut v);
            let speed = rng.gen_range(0.1..2.0);
            linalg::scale_in_place(&mut v, speed);
            let lambda: f64 = rng.gen_range(0.1..10.0);
            let base = kernel.eval(&x, &v);
            let scaled_v: Vec<f64> = v.iter().map(|c| lambda * c).collect();
            let scaled = kernel.eval(&x, &scaled_v);
            let expected = lambda.powf(p) * base;
            let violation = (scaled - expected).abs() / (1.0 + expected);
            out.record(violation, || Witness {
                x: x.clone(),
                vectors: vec![v.clone(), vec![lambda]],
                violation,
                detail: format!(
                    "f(x, lambda v) = {} but lambda^p f(x, v) = {}",
                    scaled, expected
                ),
            });
        }
        out
    }));
    report(Condition::Homogeneity, n_samples, tol, stats, None)
}

fn check_ellipticity(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let (m1, m2) = (kernel.m1(), kernel.m2());
    let dim = domain.dim();
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut u = vec![0.0; dim];
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut u);
            let val = kernel.eval(&x, &u);
            let violation = ((m1 - val) / m1).max((val - m2) / m2).max(0.0);
            out.record(violation, || Witness {
                x: x.clone(),
                vectors: vec![u.clone()],
                violation,
                detail: format!("f(x, u) = {} outside [{}, {}]", val, m1, m2),
            });
        }
        out
    }));
    report(Condition::Ellipticity, n_samples, tol, stats, None)
}

fn check_lip(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let dim = domain.dim();
    let declared = kernel.lip_c();
    let probe = 1e-3 * domain.diameter();
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut u = vec![0.0; dim];
        let mut dir = vec![0.0; dim];
        for i in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut u);
            if i % 2 == 0 {
                kernel::sample_in_box(&mut rng, domain, &mut y);
            } else {
                // short directional probe, clamped back into the box
                kernel::sample_unit_vector(&mut rng, &mut dir);
                for (yc, (&xc, &dc)) in y.iter_mut().zip(x.iter().zip(dir.iter())) {
                    *yc = xc + probe * dc;
                }
                domain.clamp_into(&mut y);
            }
            let gap = linalg::dist(&x, &y);
            if gap == 0.0 {
                continue;
            }
            let ratio = (kernel.eval(&x, &u) - kernel.eval(&y, &u)).abs() / gap;
            out.est_max = out.est_max.max(ratio);
            if let Some(c) = declared {
                let violation = (ratio - c) / c.max(1.0);
                out.record(violation, || Witness {
                    x: x.clone(),
                    vectors: vec![y.clone(), u.clone()],
                    violation,
                    detail: format!(
                        "spatial ratio |f(x,u)-f(y,u)|/|x-y| = {} exceeds declared c = {}",
                        ratio, c
                    ),
                });
            }
        }
        out
    }));
    let est = if stats.est_max.is_finite() {
        Some(stats.est_max)
    } else {
        None
    };
    report(Condition::Lip, n_samples, tol, stats, est)
}

fn check_convexity(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let dim = domain.dim();
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        let mut w = vec![0.0; dim];
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut v);
            linalg::scale_in_place(&mut v, rng.gen_range(0.1..1.5));
            kernel::sample_unit_vector(&mut rng, &mut w);
            linalg::scale_in_place(&mut w, rng.gen_range(0.1..1.5));
            let t: f64 = rng.gen_range(0.0..1.0);
            let mid: Vec<f64> = v
                .iter()
                .zip(&w)
                .map(|(&a, &b)| t * a + (1.0 - t) * b)
                .collect();
            let lhs = kernel.eval(&x, &mid);
            let rhs = t * kernel.eval(&x, &v) + (1.0 - t) * kernel.eval(&x, &w);
            let violation = (lhs - rhs) / (1.0 + rhs);
            out.record(violation, || Witness {
                x: x.clone(),
                vectors: vec![v.clone(), w.clone(), vec![t]],
                violation,
                detail: format!(
                    "f(x, t v + (1-t) w) = {} > t f(x,v) + (1-t) f(x,w) = {}",
                    lhs, rhs
                ),
            });
        }
        out
    }));
    report(Condition::Convexity, n_samples, tol, stats, None)
}

fn check_tri_ineq(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let dim = domain.dim();
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut u = vec![0.0; dim];
        let mut w = vec![0.0; dim];
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut u);
            linalg::scale_in_place(&mut u, rng.gen_range(0.1..1.5));
            kernel::sample_unit_vector(&mut rng, &mut w);
            linalg::scale_in_place(&mut w, rng.gen_range(0.1..1.5));
            let sum: Vec<f64> = u.iter().zip(&w).map(|(&a, &b)| a + b).collect();
            let lhs = kernel.eval(&x, &sum);
            let rhs = kernel.eval(&x, &u) + kernel.eval(&x, &w);
            let violation = (lhs - rhs) / (1.0 + rhs);
            out.record(violation, || Witness {
                x: x.clone(),
                vectors: vec![u.clone(), w.clone()],
                violation,
                detail: format!("f(x, u+w) = {} > f(x,u) + f(x,w) = {}", lhs, rhs),
            });
        }
        out
    }));
    report(Condition::TrIneq, n_samples, tol, stats, None)
}

fn check_pythag(
    kernel: &Kernel,
    domain: &Domain,
    alpha: f64,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ConditionReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!(
            "pythag exponent alpha must be positive, got {}",
            alpha
        )));
    }
    let dim = domain.dim();
    if dim < 2 {
        return Err(Error::Unsupported(
            "the pythag audit needs a 2-plane, so dimension >= 2".into(),
        ));
    }
    let (log_lo, log_hi) = ((1e-3f64).ln(), 0.5f64.ln());
    let stats = collect(kernel::sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut out = ShardStats::new();
        let mut x = vec![0.0; dim];
        let mut e1 = vec![0.0; dim];
        let mut e2 = vec![0.0; dim];
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut e1);
            // random 2-plane: orthonormalize a second direction against e1
            loop {
                kernel::sample_unit_vector(&mut rng, &mut e2);
                let proj = linalg::dot(&e1, &e2);
                for (c2, &c1) in e2.iter_mut().zip(e1.iter()) {
                    *c2 -= proj * c1;
                }
                let n = linalg::norm(&e2);
                if n > 1e-6 {
                    linalg::scale_in_place(&mut e2, 1.0 / n);
                    break;
                }
            }
            // r log-uniform: the preconditions couple all lengths to r
            let r = (rng.gen_range(log_lo..log_hi)).exp();
            let s = r.powf(1.0 / alpha) * rng.gen_range(0.5..1.0);
            let t: f64 = rng.gen_range(0.2..0.8);
            let q = rng.gen_range(r..1.5 * r);
            // u = x, v = x + s e1, w offset transversally by q >= r
            let v: Vec<f64> = e1.iter().map(|&c| s * c).collect();
            let w: Vec<f64> = e1
                .iter()
                .zip(&e2)
                .map(|(&c1, &c2)| t * s * c1 + q * c2)
                .collect();
            let v_minus_w: Vec<f64> = v.iter().zip(&w).map(|(&a, &b)| a - b).collect();
            let margin = kernel.eval(&x, &w) + kernel.eval(&x, &v_minus_w) - kernel.eval(&x, &v);
            let gain = margin / r.powf(alpha);
            out.est_min = out.est_min.min(gain);
            let violation = (-gain).max(0.0);
            out.record(violation, || Witness {
                x: x.clone(),
                vectors: vec![v.clone(), w.clone(), vec![r]],
                violation,
                detail: format!(
                    "detour margin f(x,w)+f(x,v-w)-f(x,v) = {} with r = {} gives gain {}",
                    margin, r, gain
                ),
            });
        }
        out
    }));
    // the condition demands a strictly positive fitted gain, not only
    // tol-small violations
    let fitted = stats.est_min;
    let verdict = if stats.worst > tol || fitted <= 0.0 {
        Verdict::Fail(stats.witness.unwrap_or_else(|| Witness {
            x: Vec::new(),
            vectors: Vec::new(),
            violation: -fitted,
            detail: format!("fitted gain constant C = {} is not positive", fitted),
        }))
    } else {
        Verdict::Pass
    };
    Ok(ConditionReport {
        condition: Condition::Pythag(alpha),
        samples_tested: n_samples,
        worst_violation: stats.worst,
        estimated_constant: Some(fitted),
        verdict,
    })
}

const HILB_BASE_POINTS: usize = 8;
const HILB_PAIRS_PER_POINT: usize = 2;
const HILB_KNOTS: usize = 17;
const HILB_ITERS: usize = 250;

fn zigzag_init(
    a: &[f64],
    b: &[f64],
    transverse: &[f64],
    amplitude: f64,
    period: usize,
) -> ContinuousPath {
    let dim = a.len();
    let m = HILB_KNOTS - 1;
    let mut coords = Vec::with_capacity(HILB_KNOTS * dim);
    let times: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    for (i, &t) in times.iter().enumerate() {
        let sign = if (i / period) % 2 == 0 { 1.0 } else { -1.0 };
        let bump = amplitude * (std::f64::consts::PI * t).sin() * sign;
        for c in 0..dim {
            coords.push(a[c] + t * (b[c] - a[c]) + bump * transverse[c]);
        }
    }
    ContinuousPath::new(dim, times, coords).expect("zigzag knots are finite by construction")
}

fn check_hilb(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ConditionReport {
    let dim = domain.dim();
    let diam = domain.diameter();

    // verdict stage: descend frozen-kernel polylines from zigzag inits; a
    // value below the straight-line cost is a violation
    struct Run {
        x: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        init: ContinuousPath,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::new();
    let mut x = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut raw = vec![0.0; dim];
    for _ in 0..HILB_BASE_POINTS {
        kernel::sample_in_box(&mut rng, domain, &mut x);
        for _ in 0..HILB_PAIRS_PER_POINT {
            kernel::sample_unit_vector(&mut rng, &mut dir);
            let reach = 0.1 * diam * rng.gen_range(0.5..1.0);
            let mut a = x.clone();
            let mut b = x.clone();
            for c in 0..dim {
                a[c] -= reach * dir[c];
                b[c] += reach * dir[c];
            }
            domain.clamp_into(&mut a);
            domain.clamp_into(&mut b);
            if a == b {
                continue;
            }
            if dim == 1 {
                let init = ContinuousPath::straight(&a, &b)
                    .unwrap()
                    .resample_uniform_t(HILB_KNOTS - 1)
                    .unwrap();
                runs.push(Run {
                    x: x.clone(),
                    a,
                    b,
                    init,
                });
                continue;
            }
            // transverse direction in the chord's orthogonal complement
            let chord = linalg::sub(&b, &a);
            let chord_norm = linalg::norm(&chord);
            let transverse = loop {
                kernel::sample_unit_vector(&mut rng, &mut raw);
                let proj = linalg::dot(&raw, &chord) / (chord_norm * chord_norm);
                let mut t: Vec<f64> = raw
                    .iter()
                    .zip(&chord)
                    .map(|(&rc, &cc)| rc - proj * cc)
                    .collect();
                let n = linalg::norm(&t);
                if n > 1e-6 {
                    linalg::scale_in_place(&mut t, 1.0 / n);
                    break t;
                }
            };
            for (amplitude, period) in [(0.3 * chord_norm, 1), (0.1 * chord_norm, 4)] {
                runs.push(Run {
                    x: x.clone(),
                    a: a.clone(),
                    b: b.clone(),
                    init: zigzag_init(&a, &b, &transverse, amplitude, period),
                });
            }
        }
    }
    let refine_count = runs.len();
    let opts = RefineOpts {
        knots: HILB_KNOTS,
        iters: HILB_ITERS,
        ..RefineOpts::default()
    };
    let per_run: Vec<ShardStats> = exec::map(ExecMode::Auto, runs, |run| {
        let mut out = ShardStats::new();
        let frozen = kernel.frozen(&run.x);
        let chord = linalg::sub(&run.b, &run.a);
        let straight = kernel.eval(&run.x, &chord);
        if let Ok(res) = oracle::refine_geodesic(&frozen, domain, &run.init, &opts) {
            let violation = (straight - res.value) / straight.max(f64::MIN_POSITIVE);
            out.record(violation, || Witness {
                x: run.x.clone(),
                vectors: vec![run.a.clone(), run.b.clone()],
                violation,
                detail: format!(
                    "frozen-kernel polyline minimum {} beats the straight-line cost {}",
                    res.value, straight
                ),
            });
        }
        out
    });
    let stats = collect(per_run);

    // diagnostic stage: Hamel mixed-partial symmetry residual
    // max |d2 f / dx_i dv_j - d2 f / dx_j dv_i| by central differences
    let hx = 1e-4 * diam;
    let hv = 1e-4;
    let residuals = kernel::sharded(n_samples, seed.wrapping_add(0x48414D), |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut worst = 0.0f64;
        let mut x = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        let mixed = |x: &[f64], v: &[f64], i: usize, j: usize| {
            let mut xf = x.to_vec();
            let mut vf = v.to_vec();
            let sample = |sx: f64, sv: f64, xf: &mut [f64], vf: &mut [f64]| {
                xf[i] = x[i] + sx * hx;
                vf[j] = v[j] + sv * hv;
                kernel.eval(xf, vf)
            };
            (sample(1.0, 1.0, &mut xf, &mut vf) - sample(1.0, -1.0, &mut xf, &mut vf)
                - sample(-1.0, 1.0, &mut xf, &mut vf)
                + sample(-1.0, -1.0, &mut xf, &mut vf))
                / (4.0 * hx * hv)
        };
        for _ in 0..count {
            kernel::sample_in_box(&mut rng, domain, &mut x);
            kernel::sample_unit_vector(&mut rng, &mut v);
            linalg::scale_in_place(&mut v, rng.gen_range(0.5..1.5));
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let r = (mixed(&x, &v, i, j) - mixed(&x, &v, j, i)).abs();
                    worst = worst.max(r);
                }
            }
        }
        worst
    });
    let hamel = residuals.into_iter().fold(0.0f64, f64::max);

    report(
        Condition::Hilb,
        n_samples + refine_count,
        tol,
        stats,
        Some(hamel),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::sync::Arc;

    fn unit() -> Domain {
        Domain::unit_square()
    }

    #[test]
    fn power_norm_passes_the_basic_audits() {
        let k = Kernel::power_norm(1.0).unwrap();
        let d = unit();
        for cond in [
            Condition::Homogeneity,
            Condition::Ellipticity,
            Condition::Lip,
            Condition::Convexity,
            Condition::TrIneq,
            Condition::Pythag(1.2),
        ] {
            let rep = check_condition(&k, cond, &d, 2000, 1e-7, 11).unwrap();
            assert!(rep.passed(), "{} failed: {}", cond, rep.worst_violation);
        }
    }

    #[test]
    fn p2_breaks_the_velocity_triangle_inequality() {
        let k = Kernel::power_norm(2.0).unwrap();
        let rep = check_condition(&k, Condition::TrIneq, &unit(), 2000, 1e-7, 3).unwrap();
        match rep.verdict {
            Verdict::Fail(w) => assert!(w.violation > 0.01, "violation {}", w.violation),
            Verdict::Pass => panic!("|v|^2 must fail subadditivity in v"),
        }
    }

    #[test]
    fn nonconvex_kernel_fails_convexity_with_witness() {
        let f = Arc::new(|_x: &[f64], v: &[f64]| {
            let s = v[0].abs().sqrt() + v[1].abs().sqrt();
            s * s
        });
        // sup over the unit sphere is 2*sqrt(2), at the diagonal
        let k = Kernel::custom(f, 1.0, 1.0, 2.9, Some(0.0)).unwrap();
        let rep = check_condition(&k, Condition::Convexity, &unit(), 4000, 1e-7, 5).unwrap();
        assert!(rep.worst_violation > 0.1, "worst {}", rep.worst_violation);
        match rep.verdict {
            Verdict::Fail(w) => {
                assert_eq!(w.x.len(), 2);
                assert_eq!(w.vectors.len(), 3);
            }
            Verdict::Pass => panic!("non-convex kernel must fail the convexity audit"),
        }
    }

    #[test]
    fn nonconvex_kernel_fails_hilb() {
        // axis-aligned detours are cheaper than straight diagonals here
        let f = Arc::new(|_x: &[f64], v: &[f64]| {
            let s = v[0].abs().sqrt() + v[1].abs().sqrt();
            s * s
        });
        let k = Kernel::custom(f, 1.0, 1.0, 2.9, Some(0.0)).unwrap();
        let rep = check_condition(&k, Condition::Hilb, &unit(), 200, 1e-7, 9).unwrap();
        assert!(
            !rep.passed(),
            "expected a sub-straight polyline, worst violation {}",
            rep.worst_violation
        );
    }

    #[test]
    fn declared_lipschitz_constant_too_small_is_caught() {
        let f = Arc::new(|x: &[f64], v: &[f64]| (1.0 + 0.5 * x[0]) * (v[0].abs() + 2.0 * v[1].abs()));
        let k = Kernel::custom(f, 1.0, 0.9, 3.1, Some(0.1)).unwrap();
        let rep = check_condition(&k, Condition::Lip, &unit(), 4000, 1e-7, 7).unwrap();
        match rep.verdict {
            Verdict::Fail(w) => {
                assert_eq!(w.vectors.len(), 2, "witness carries (y, v)");
                assert!(w.violation > 0.1);
            }
            Verdict::Pass => panic!("declared c = 0.1 must be rejected"),
        }
        let est = rep.estimated_constant.unwrap();
        // sup ratio is 0.5 * sup(|v1| + 2|v2|) = 0.5 * sqrt(5) on the sphere
        assert!(est > 0.5 && est <= 0.5 * 5.0f64.sqrt() + 1e-9, "estimated c {}", est);
    }

    #[test]
    fn undeclared_lipschitz_constant_is_estimated() {
        let d = unit();
        let w = Expr::parse("1 + x1").unwrap();
        let k = Kernel::weighted_euclidean(w, &d).unwrap();
        let rep = check_condition(&k, Condition::Lip, &d, 4000, 1e-7, 13).unwrap();
        assert!(rep.passed());
        let est = rep.estimated_constant.unwrap();
        // |w(x) - w(y)| = |x1 - y1|, so the true ratio approaches 1
        assert!(est > 0.8 && est <= 1.0 + 1e-9, "estimated c {}", est);
    }

    #[test]
    fn pythag_needs_two_dimensions() {
        let k = Kernel::power_norm(1.0).unwrap();
        let d1 = Domain::new(vec![0.0], vec![1.0]).unwrap();
        match check_condition(&k, Condition::Pythag(1.2), &d1, 100, 1e-7, 1) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected Unsupported, got {:?}", other.map(|r| r.passed())),
        }
    }

    #[test]
    fn pythag_gain_is_positive_for_the_euclidean_kernel() {
        let k = Kernel::power_norm(1.0).unwrap();
        let rep = check_condition(&k, Condition::Pythag(1.2), &unit(), 4000, 1e-7, 21).unwrap();
        assert!(rep.passed());
        assert!(rep.estimated_constant.unwrap() > 0.0);
    }

    #[test]
    fn quadratic_form_passes_hilb_with_hamel_residual_reported() {
        let d = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let entries = vec![
            Expr::parse("1 + x1*x1").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("2").unwrap(),
        ];
        let k = Kernel::quadratic_form(entries, &d).unwrap();
        let rep = check_condition(&k, Condition::Hilb, &d, 500, 1e-7, 17).unwrap();
        assert!(rep.passed(), "worst violation {}", rep.worst_violation);
        // spatially varying anisotropy: the Hamel residual is genuinely
        // nonzero even though frozen-kernel geodesics are straight
        assert!(rep.estimated_constant.unwrap() > 1e-3);
    }

    #[test]
    fn rejects_bad_audit_parameters() {
        let k = Kernel::power_norm(1.0).unwrap();
        assert!(check_condition(&k, Condition::Homogeneity, &unit(), 0, 1e-7, 1).is_err());
        assert!(check_condition(&k, Condition::Homogeneity, &unit(), 10, 0.0, 1).is_err());
        assert!(check_condition(&k, Condition::Pythag(-1.0), &unit(), 10, 1e-7, 1).is_err());
    }
}
