//! Cost integrands f(x, v) and their declared structure.
//!
//! A [`Kernel`] packages an evaluable integrand together with its homogeneity
//! degree `p` and ellipticity constants `m1 <= f(x, u) <= m2` on unit vectors
//! `u`. The built-in families cover the cases used throughout the crate:
//!
//! * `PowerNorm`: f(x, v) = |v|^p, spatially constant.
//! * `WeightedEuclidean`: f(x, v) = w(x) |v| with a positive weight field.
//! * `QuadraticForm`: f(x, v) = sqrt(v' M(x) v) for a symmetric positive
//!   definite matrix field.
//! * `Custom`: any user closure, with all metadata declared by the caller.
//!
//! Construction of the expression-backed families calibrates `m1`/`m2` by a
//! scan over the domain (with a small outward slack so the declared constants
//! genuinely bound the sampled values); [`estimate_ellipticity`] re-measures
//! them at any time.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::expr::Expr;
use crate::linalg;
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

pub type CustomFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelFamily {
    PowerNorm,
    WeightedEuclidean(Expr),
    /// Row-major `dim x dim` matrix of entry expressions, required symmetric.
    QuadraticForm { dim: usize, entries: Vec<Expr> },
    Custom(CustomFn),
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::PowerNorm => write!(f, "PowerNorm"),
            KernelFamily::WeightedEuclidean(w) => write!(f, "WeightedEuclidean({})", w),
            KernelFamily::QuadraticForm { dim, .. } => write!(f, "QuadraticForm(dim={})", dim),
            KernelFamily::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Kernel {
    family: KernelFamily,
    p: f64,
    m1: f64,
    m2: f64,
    lip_c: Option<f64>,
}

/// Outward slack applied to scanned ellipticity bounds so that later sampling
/// stays inside the declared interval.
const CALIBRATION_SLACK: f64 = 0.02;
const CALIBRATION_SAMPLES: usize = 8192;
const CALIBRATION_SEED: u64 = 0xE11; // fixed so constructors are deterministic

impl Kernel {
    /// f(x, v) = |v|^p.
    pub fn power_norm(p: f64) -> Result<Self> {
        validate_p(p)?;
        Ok(Kernel {
            family: KernelFamily::PowerNorm,
            p,
            m1: 1.0,
            m2: 1.0,
            lip_c: Some(0.0),
        })
    }

    /// f(x, v) = w(x) |v| with w given as an expression over x1..xd.
    ///
    /// The weight must be strictly positive on `domain`; its range calibrates
    /// the ellipticity constants.
    pub fn weighted_euclidean(w: Expr, domain: &Domain) -> Result<Self> {
        if w.max_coord() > domain.dim() {
            return Err(Error::config(format!(
                "weight expression uses x{} but the domain has dimension {}",
                w.max_coord(),
                domain.dim()
            )));
        }
        let mut kernel = Kernel {
            family: KernelFamily::WeightedEuclidean(w),
            p: 1.0,
            m1: 1.0,
            m2: 1.0,
            lip_c: None,
        };
        kernel.calibrate_bounds(domain)?;
        Ok(kernel)
    }

    /// f(x, v) = sqrt(v' M(x) v) with symmetric positive definite M(x) given
    /// entrywise as expressions (row-major).
    pub fn quadratic_form(entries: Vec<Expr>, domain: &Domain) -> Result<Self> {
        let dim = domain.dim();
        if entries.len() != dim * dim {
            return Err(Error::config(format!(
                "quadratic form needs {}x{} = {} entries, got {}",
                dim,
                dim,
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::config(format!(
                        "quadratic form matrix must be symmetric: entry ({},{}) is {:?} but ({},{}) is {:?}",
                        i + 1, j + 1, entries[i * dim + j].src(),
                        j + 1, i + 1, entries[j * dim + i].src()
                    )));
                }
            }
        }
        for (k, e) in entries.iter().enumerate() {
            if e.max_coord() > dim {
                return Err(Error::config(format!(
                    "matrix entry {} uses x{} but the domain has dimension {}",
                    k,
                    e.max_coord(),
                    dim
                )));
            }
        }
        let mut kernel = Kernel {
            family: KernelFamily::QuadraticForm { dim, entries },
            p: 1.0,
            m1: 1.0,
            m2: 1.0,
            lip_c: None,
        };
        kernel.calibrate_bounds(domain)?;
        Ok(kernel)
    }

    /// Arbitrary integrand with every piece of metadata declared by the
    /// caller. The closure is trusted; audits can falsify the declarations.
    pub fn custom(f: CustomFn, p: f64, m1: f64, m2: f64, lip_c: Option<f64>) -> Result<Self> {
        validate_p(p)?;
        validate_bounds(m1, m2)?;
        if let Some(c) = lip_c {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::config("lip_c must be finite and nonnegative"));
            }
        }
        Ok(Kernel {
            family: KernelFamily::Custom(f),
            p,
            m1,
            m2,
            lip_c,
        })
    }

    /// Replace the calibrated ellipticity constants with declared ones.
    pub fn with_bounds(mut self, m1: f64, m2: f64) -> Result<Self> {
        validate_bounds(m1, m2)?;
        self.m1 = m1;
        self.m2 = m2;
        Ok(self)
    }

    /// Declare a spatial Lipschitz constant for later audit.
    pub fn with_lip(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::config("lip_c must be finite and nonnegative"));
        }
        self.lip_c = Some(c);
        Ok(self)
    }

    /// Evaluate f(x, v). No domain check; see [`Kernel::eval_checked`].
    #[inline]
    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        match &self.family {
            KernelFamily::PowerNorm => {
                if self.p == 1.0 {
                    linalg::norm(v)
                } else if self.p == 2.0 {
                    linalg::norm_sq(v)
                } else {
                    linalg::norm(v).powf(self.p)
                }
            }
            KernelFamily::WeightedEuclidean(w) => w.eval(x) * linalg::norm(v),
            KernelFamily::QuadraticForm { dim, entries } => {
                let d = *dim;
                let mut q = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        q += entries[i * d + j].eval(x) * v[i] * v[j];
                    }
                }
                q.max(0.0).sqrt()
            }
            KernelFamily::Custom(f) => f(x, v),
        }
    }

    /// Evaluate with the domain-membership precondition enforced.
    pub fn eval_checked(&self, domain: &Domain, x: &[f64], v: &[f64]) -> Result<f64> {
        if !domain.contains(x) {
            return Err(Error::config(format!(
                "kernel evaluated at {:?}, outside the domain",
                x
            )));
        }
        if !linalg::all_finite(v) {
            return Err(Error::config("kernel velocity must be finite"));
        }
        Ok(self.eval(x, v))
    }

    /// Freeze the spatial argument: returns the kernel g(y, v) = f(x0, v),
    /// which is spatially constant (Lipschitz constant 0).
    pub fn frozen(&self, x0: &[f64]) -> Kernel {
        let base = self.clone();
        let x0: Vec<f64> = x0.to_vec();
        Kernel {
            family: KernelFamily::Custom(Arc::new(move |_x, v| base.eval(&x0, v))),
            p: self.p,
            m1: self.m1,
            m2: self.m2,
            lip_c: Some(0.0),
        }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn lip_c(&self) -> Option<f64> {
        self.lip_c
    }

    fn calibrate_bounds(&mut self, domain: &Domain) -> Result<()> {
        let (lo, hi) = scan_unit_sphere_range(self, domain, CALIBRATION_SAMPLES, CALIBRATION_SEED);
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 {
            return Err(Error::config(format!(
                "kernel is not strictly elliptic on the domain (sampled range [{}, {}]); \
                 weights and quadratic forms must stay positive",
                lo, hi
            )));
        }
        self.m1 = lo * (1.0 - CALIBRATION_SLACK);
        self.m2 = hi * (1.0 + CALIBRATION_SLACK);
        Ok(())
    }
}

fn validate_p(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::config(format!(
            "homogeneity degree p must be finite and >= 1, got {}",
            p
        )));
    }
    Ok(())
}

fn validate_bounds(m1: f64, m2: f64) -> Result<()> {
    if !(m1.is_finite() && m2.is_finite()) || m1 <= 0.0 || m2 < m1 {
        return Err(Error::config(format!(
            "ellipticity constants must satisfy 0 < m1 <= m2, got ({}, {})",
            m1, m2
        )));
    }
    Ok(())
}

/// Min and max of f(x, u) over sampled x in the domain and unit vectors u.
///
/// Deterministic for a given seed: sampling is split into fixed shards with
/// per-shard generators, so the result does not depend on thread count.
pub fn estimate_ellipticity(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(n_samples >= 1, "n_samples must be at least 1");
    scan_unit_sphere_range(kernel, domain, n_samples, seed)
}

const AUDIT_SHARDS: u64 = 64;

/// Run `shard_job(shard_seed, samples_in_shard)` over the fixed shard layout
/// and collect results in shard order. Shared by the ellipticity scan and the
/// condition audits so every randomized audit is reproducible.
pub(crate) fn sharded<T: Send>(
    n_samples: usize,
    seed: u64,
    shard_job: impl Fn(u64, usize) -> T + Send + Sync,
) -> Vec<T> {
    let shards = AUDIT_SHARDS.min(n_samples as u64).max(1);
    let base = n_samples / shards as usize;
    let extra = n_samples % shards as usize;
    let jobs: Vec<(u64, usize)> = (0..shards)
        .map(|s| {
            let count = base + usize::from((s as usize) < extra);
            (seed.wrapping_add(s), count)
        })
        .collect();
    exec::map(ExecMode::Auto, jobs, |(s, count)| shard_job(s, count))
}

fn scan_unit_sphere_range(
    kernel: &Kernel,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    let ranges = sharded(n_samples, seed, |shard_seed, count| {
        let mut rng = ChaCha8Rng::seed_from_u64(shard_seed);
        let mut x = vec![0.0; domain.dim()];
        let mut u = vec![0.0; domain.dim()];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..count {
            sample_in_box(&mut rng, domain, &mut x);
            sample_unit_vector(&mut rng, &mut u);
            let val = kernel.eval(&x, &u);
            lo = lo.min(val);
            hi = hi.max(val);
        }
        (lo, hi)
    });
    ranges
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(alo, ahi), (lo, hi)| {
            (alo.min(lo), ahi.max(hi))
        })
}

/// Uniform draw from the domain box; consumes exactly `dim` uniforms in axis
/// order.
pub(crate) fn sample_in_box<R: Rng>(rng: &mut R, domain: &Domain, out: &mut [f64]) {
    for i in 0..domain.dim() {
        let t: f64 = rng.gen();
        out[i] = domain.lo()[i] + t * (domain.hi()[i] - domain.lo()[i]);
    }
}

/// Uniform draw from the unit sphere via normalized Gaussians; consumes `dim`
/// normal variates per attempt (re-draws on the measure-zero near-origin
/// case).
pub(crate) fn sample_unit_vector<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        for o in out.iter_mut() {
            *o = rand_distr::StandardNormal.sample(rng);
        }
        let n = linalg::norm(out);
        if n > 1e-12 {
            for o in out.iter_mut() {
                *o /= n;
            }
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Domain {
        Domain::unit_square()
    }

    #[test]
    fn power_norm_values() {
        let k = Kernel::power_norm(1.0).unwrap();
        assert_eq!(k.eval(&[0.3, 0.3], &[3.0, 4.0]), 5.0);
        let k2 = Kernel::power_norm(2.0).unwrap();
        assert_eq!(k2.eval(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(k2.eval(&[0.0, 0.0], &[3.0, 4.0]), 25.0);
        assert!(Kernel::power_norm(0.5).is_err());
        assert!(Kernel::power_norm(f64::NAN).is_err());
    }

    #[test]
    fn weighted_euclidean_eval_and_bounds() {
        let d = unit_square();
        let w = Expr::parse("1 + x1").unwrap();
        let k = Kernel::weighted_euclidean(w, &d).unwrap();
        let got = k.eval(&[0.5, 0.2], &[0.0, 2.0]);
        assert!((got - 3.0).abs() < 1e-12);
        // w ranges over [1, 2]; calibrated bounds must bracket that range
        assert!(k.m1() <= 1.0 && k.m1() > 0.9);
        assert!(k.m2() >= 2.0 && k.m2() < 2.2);
        assert_eq!(k.p(), 1.0);
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let d = unit_square();
        let w = Expr::parse("x1 - 0.5").unwrap();
        assert!(Kernel::weighted_euclidean(w, &d).is_err());
    }

    #[test]
    fn quadratic_form_constant_diagonal() {
        let d = unit_square();
        let entries = ["1", "0", "0", "4"]
            .iter()
            .map(|s| Expr::parse(s).unwrap())
            .collect();
        let k = Kernel::quadratic_form(entries, &d).unwrap();
        assert!((k.eval(&[0.5, 0.5], &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((k.eval(&[0.5, 0.5], &[0.0, 1.0]) - 2.0).abs() < 1e-12);
        let (m1h, m2h) = estimate_ellipticity(&k, &d, 20_000, 7);
        assert!((m1h - 1.0).abs() < 1e-3, "m1_hat {}", m1h);
        assert!((m2h - 2.0).abs() < 1e-3, "m2_hat {}", m2h);
    }

    #[test]
    fn quadratic_form_rejects_asymmetric() {
        let d = unit_square();
        let entries = ["1", "x1", "0", "4"]
            .iter()
            .map(|s| Expr::parse(s).unwrap())
            .collect();
        assert!(Kernel::quadratic_form(entries, &d).is_err());
    }

    #[test]
    fn power_norm_ellipticity_is_tight() {
        let d = unit_square();
        let k = Kernel::power_norm(1.0).unwrap();
        let (m1h, m2h) = estimate_ellipticity(&k, &d, 1000, 3);
        assert!((m1h - 1.0).abs() < 1e-12);
        assert!((m2h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_estimate_is_thread_independent() {
        let d = unit_square();
        let w = Expr::parse("1 + x1*x2").unwrap();
        let k = Kernel::weighted_euclidean(w, &d).unwrap();
        let a = estimate_ellipticity(&k, &d, 5000, 42);
        let b = estimate_ellipticity(&k, &d, 5000, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_kernel_ignores_position() {
        let d = unit_square();
        let w = Expr::parse("1 + x1").unwrap();
        let k = Kernel::weighted_euclidean(w, &d).unwrap();
        let g = k.frozen(&[0.5, 0.0]);
        let v = [0.0, 2.0];
        assert_eq!(g.eval(&[0.0, 0.0], &v), g.eval(&[0.9, 0.9], &v));
        assert!((g.eval(&[0.0, 0.0], &v) - 3.0).abs() < 1e-12);
        assert_eq!(g.lip_c(), Some(0.0));
    }

    #[test]
    fn eval_checked_rejects_outside_points() {
        let d = unit_square();
        let k = Kernel::power_norm(1.0).unwrap();
        assert!(k.eval_checked(&d, &[1.5, 0.0], &[1.0, 0.0]).is_err());
        assert!(k.eval_checked(&d, &[0.5, 0.5], &[f64::NAN, 0.0]).is_err());
        assert!(k.eval_checked(&d, &[0.5, 0.5], &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn custom_validation() {
        let f: CustomFn = Arc::new(|_x, v| crate::linalg::norm(v));
        assert!(Kernel::custom(f.clone(), 1.0, 1.0, 1.0, None).is_ok());
        assert!(Kernel::custom(f.clone(), 0.9, 1.0, 1.0, None).is_err());
        assert!(Kernel::custom(f.clone(), 1.0, 0.0, 1.0, None).is_err());
        assert!(Kernel::custom(f.clone(), 1.0, 2.0, 1.0, None).is_err());
        assert!(Kernel::custom(f, 1.0, 1.0, 1.0, Some(-1.0)).is_err());
    }
}
