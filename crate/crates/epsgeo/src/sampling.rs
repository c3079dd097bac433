//! Point-cloud sampling and the spatial queries built on top of it.
//!
//! Sampling is rejection against the uniform proposal on the domain box with
//! a declared envelope. Randomness is consumed in a documented order so that
//! clouds are bit-identical across runs and platforms: for every attempt,
//! `dim` position uniforms in axis order, then (expression densities only)
//! one acceptance uniform. Uniform densities skip the acceptance draw.
//!
//! The same uniform cell grid backs fixed-radius neighbor search (graph
//! construction), nearest-neighbor queries, and covering-radius probes.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::expr::Expr;
use crate::linalg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum DensitySpec {
    Uniform,
    /// Unnormalized density rho with declared bounds 0 < c_lo <= rho <= c_hi
    /// on the domain. c_hi is the rejection envelope.
    Expression { rho: Expr, c_lo: f64, c_hi: f64 },
}

impl DensitySpec {
    pub fn uniform() -> Self {
        DensitySpec::Uniform
    }

    pub fn expression(rho: Expr, c_lo: f64, c_hi: f64) -> Result<Self> {
        if !(c_lo.is_finite() && c_hi.is_finite()) || c_lo <= 0.0 || c_hi < c_lo {
            return Err(Error::config(format!(
                "density bounds must satisfy 0 < c_lo <= c_hi, got ({}, {})",
                c_lo, c_hi
            )));
        }
        Ok(DensitySpec::Expression { rho, c_lo, c_hi })
    }
}

/// n points in the domain, stored as a flat row-major coordinate array.
#[derive(Debug, Clone)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    seed: Option<u64>,
    density: Option<DensitySpec>,
}

impl PointCloud {
    /// Wrap existing coordinates (round-trip helper and test entry point).
    pub fn from_points(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::config(format!(
                "coordinate array length {} is not a positive multiple of dim {}",
                coords.len(),
                dim
            )));
        }
        if !linalg::all_finite(&coords) {
            return Err(Error::config("coordinates must be finite"));
        }
        Ok(PointCloud {
            dim,
            coords,
            seed: None,
            density: None,
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn density(&self) -> Option<&DensitySpec> {
        self.density.as_ref()
    }
}

/// Draw n i.i.d. points from the density on the domain. Deterministic in
/// (seed, density, domain, n).
pub fn sample_points(
    density: &DensitySpec,
    domain: &Domain,
    n: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::config("n must be at least 1"));
    }
    let dim = domain.dim();
    if let DensitySpec::Expression { rho, .. } = density {
        if rho.max_coord() > dim {
            return Err(Error::config(format!(
                "density expression uses x{} but the domain has dimension {}",
                rho.max_coord(),
                dim
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * dim);
    let mut x = vec![0.0; dim];
    let attempt_cap = match density {
        DensitySpec::Uniform => usize::MAX,
        DensitySpec::Expression { c_lo, c_hi, .. } => {
            // acceptance rate is at least c_lo/c_hi when the declared bounds
            // hold, so this cap only trips on misdeclared densities
            ((c_hi / c_lo).ceil() as usize).saturating_mul(50 * n) + 10_000
        }
    };
    let mut attempts = 0usize;
    while coords.len() < n * dim {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::Numeric(format!(
                "rejection sampling stalled after {} attempts; check the declared density bounds",
                attempts - 1
            )));
        }
        crate::kernel::sample_in_box(&mut rng, domain, &mut x);
        match density {
            DensitySpec::Uniform => coords.extend_from_slice(&x),
            DensitySpec::Expression { rho, c_hi, .. } => {
                let r = rho.eval(&x);
                if r > *c_hi {
                    return Err(Error::config(format!(
                        "density envelope violated: rho({:?}) = {} exceeds declared c_hi = {}",
                        x, r, c_hi
                    )));
                }
                if r < 0.0 {
                    return Err(Error::config(format!(
                        "density is negative at {:?}: {}",
                        x, r
                    )));
                }
                let u: f64 = rng.gen();
                if u * *c_hi <= r {
                    coords.extend_from_slice(&x);
                }
            }
        }
    }
    Ok(PointCloud {
        dim,
        coords,
        seed: Some(seed),
        density: Some(density.clone()),
    })
}

/// Uniform hash grid over a bounding box. Cell side adapts upward if the
/// requested side would allocate too many cells; queries stay correct because
/// ranges are computed from the actual side.
pub(crate) struct CellGrid {
    lo: Vec<f64>,
    side: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
    cells: Vec<Vec<u32>>,
}

const MAX_TOTAL_CELLS: usize = 1 << 22;

impl CellGrid {
    pub fn build(dim: usize, coords: &[f64], requested_side: f64) -> Self {
        assert!(dim > 0 && requested_side > 0.0 && !coords.is_empty());
        let n = coords.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for i in 0..n {
            for (a, &c) in coords[i * dim..(i + 1) * dim].iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let mut side = requested_side;
        loop {
            let mut total = 1usize;
            let mut ok = true;
            for a in 0..dim {
                let c = (((hi[a] - lo[a]) / side).ceil() as usize).max(1);
                total = match total.checked_mul(c) {
                    Some(t) if t <= MAX_TOTAL_CELLS => t,
                    _ => {
                        ok = false;
                        break;
                    }
                };
            }
            if ok {
                break;
            }
            side *= 2.0;
        }
        let counts: Vec<usize> = (0..dim)
            .map(|a| (((hi[a] - lo[a]) / side).ceil() as usize).max(1))
            .collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * counts[a + 1];
        }
        let total: usize = counts.iter().product();
        let mut cells = vec![Vec::new(); total];
        for i in 0..n {
            let idx = Self::flat_index(&lo, side, &counts, &strides, &coords[i * dim..(i + 1) * dim]);
            cells[idx].push(i as u32);
        }
        CellGrid {
            lo,
            side,
            counts,
            strides,
            cells,
        }
    }

    fn flat_index(lo: &[f64], side: f64, counts: &[usize], strides: &[usize], x: &[f64]) -> usize {
        let mut idx = 0;
        for a in 0..x.len() {
            let c = (((x[a] - lo[a]) / side).floor() as isize)
                .clamp(0, counts[a] as isize - 1) as usize;
            idx += c * strides[a];
        }
        idx
    }

    fn axis_cell(&self, a: usize, x: f64) -> isize {
        (((x - self.lo[a]) / self.side).floor() as isize).clamp(0, self.counts[a] as isize - 1)
    }

    /// Visit every stored index whose cell intersects the radius-r box around
    /// x. Callers re-check exact distances.
    pub fn for_candidates_within<F: FnMut(u32)>(&self, x: &[f64], r: f64, mut visit: F) {
        let dim = self.lo.len();
        let reach = (r / self.side).ceil() as isize;
        let mut lo_cell = vec![0isize; dim];
        let mut hi_cell = vec![0isize; dim];
        for a in 0..dim {
            let c = self.axis_cell(a, x[a]);
            lo_cell[a] = (c - reach).max(0);
            hi_cell[a] = (c + reach).min(self.counts[a] as isize - 1);
        }
        let mut cur = lo_cell.clone();
        'outer: loop {
            let mut idx = 0usize;
            for a in 0..dim {
                idx += cur[a] as usize * self.strides[a];
            }
            for &p in &self.cells[idx] {
                visit(p);
            }
            for a in (0..dim).rev() {
                cur[a] += 1;
                if cur[a] <= hi_cell[a] {
                    continue 'outer;
                }
                cur[a] = lo_cell[a];
            }
            break;
        }
    }

    /// Nearest stored point to x by expanding ring search; ties broken by the
    /// smallest index. Returns (index, squared distance).
    pub fn nearest(&self, dim: usize, coords: &[f64], x: &[f64]) -> (u32, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        let center: Vec<isize> = (0..dim).map(|a| self.axis_cell(a, x[a])).collect();
        let max_ring = self
            .counts
            .iter()
            .zip(center.iter())
            .map(|(&c, &ctr)| (ctr.max(c as isize - 1 - ctr)) as usize)
            .max()
            .unwrap_or(0);
        for ring in 0..=max_ring {
            self.for_ring(&center, ring, |p| {
                let d2 = linalg::dist_sq(&coords[p as usize * dim..(p as usize + 1) * dim], x);
                if d2 < best.1 || (d2 == best.1 && p < best.0) {
                    best = (p, d2);
                }
            });
            // any point in a farther ring is at least ring*side away
            if best.1.is_finite() {
                let safe = ring as f64 * self.side;
                if best.1 <= safe * safe {
                    break;
                }
            }
        }
        best
    }

    fn for_ring<F: FnMut(u32)>(&self, center: &[isize], ring: usize, mut visit: F) {
        let dim = center.len();
        let r = ring as isize;
        let mut lo_cell = vec![0isize; dim];
        let mut hi_cell = vec![0isize; dim];
        let mut any = true;
        for a in 0..dim {
            lo_cell[a] = (center[a] - r).max(0);
            hi_cell[a] = (center[a] + r).min(self.counts[a] as isize - 1);
            if lo_cell[a] > hi_cell[a] {
                any = false;
            }
        }
        if !any {
            return;
        }
        let mut cur = lo_cell.clone();
        'outer: loop {
            // only the shell: at least one axis at Chebyshev distance exactly r
            let on_shell = ring == 0
                || cur
                    .iter()
                    .zip(center.iter())
                    .any(|(&c, &ctr)| (c - ctr).abs() == r);
            if on_shell {
                let mut idx = 0usize;
                for a in 0..dim {
                    idx += cur[a] as usize * self.strides[a];
                }
                for &p in &self.cells[idx] {
                    visit(p);
                }
            }
            for a in (0..dim).rev() {
                cur[a] += 1;
                if cur[a] <= hi_cell[a] {
                    continue 'outer;
                }
                cur[a] = lo_cell[a];
            }
            break;
        }
    }
}

/// Accelerated nearest-neighbor index over a cloud.
pub struct NearestIndex<'a> {
    cloud: &'a PointCloud,
    grid: CellGrid,
}

impl<'a> NearestIndex<'a> {
    pub fn build(cloud: &'a PointCloud) -> Self {
        let n = cloud.n();
        let dim = cloud.dim();
        // aim for O(1) points per cell on uniform-ish clouds
        let mut span: f64 = 0.0;
        for a in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..n {
                lo = lo.min(cloud.point(i)[a]);
                hi = hi.max(cloud.point(i)[a]);
            }
            span = span.max(hi - lo);
        }
        let per_axis = (n as f64).powf(1.0 / dim as f64).ceil().max(1.0);
        let side = if span > 0.0 { span / per_axis } else { 1.0 };
        let grid = CellGrid::build(dim, cloud.coords(), side);
        NearestIndex { cloud, grid }
    }

    /// Index of the nearest cloud point, smallest index on ties.
    pub fn query(&self, x: &[f64]) -> usize {
        let (idx, _) = self.grid.nearest(self.cloud.dim(), self.cloud.coords(), x);
        idx as usize
    }

    pub fn query_distance(&self, x: &[f64]) -> f64 {
        let (_, d2) = self.grid.nearest(self.cloud.dim(), self.cloud.coords(), x);
        d2.sqrt()
    }
}

/// Index of the cloud point closest to x; equidistant ties resolve to the
/// smallest index regardless of storage layout.
pub fn nearest_neighbor(cloud: &PointCloud, x: &[f64]) -> usize {
    NearestIndex::build(cloud).query(x)
}

/// Estimate sup over the domain of the nearest-cloud distance by probing a
/// regular grid with the given spacing (endpoints included). The estimate
/// under-reports the true radius by at most spacing*sqrt(d)/2.
pub fn estimate_covering_radius(
    cloud: &PointCloud,
    domain: &Domain,
    probe_spacing: f64,
) -> Result<f64> {
    if !(probe_spacing.is_finite() && probe_spacing > 0.0) {
        return Err(Error::config("probe_spacing must be positive"));
    }
    if cloud.dim() != domain.dim() {
        return Err(Error::config(format!(
            "cloud dimension {} does not match domain dimension {}",
            cloud.dim(),
            domain.dim()
        )));
    }
    let dim = domain.dim();
    let index = NearestIndex::build(cloud);
    let counts: Vec<usize> = (0..dim)
        .map(|a| (domain.side(a) / probe_spacing).ceil() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let shards = 64.min(total);
    let chunk = total.div_ceil(shards);
    let ranges: Vec<(usize, usize)> = (0..shards)
        .map(|s| ((s * chunk).min(total), ((s + 1) * chunk).min(total)))
        .collect();
    let maxima = exec::map(ExecMode::Auto, ranges, |(start, end)| {
        let mut x = vec![0.0; dim];
        let mut worst: f64 = 0.0;
        for flat in start..end {
            let mut rem = flat;
            for a in (0..dim).rev() {
                let steps = counts[a];
                let k = rem % steps;
                rem /= steps;
                let t = if steps > 1 {
                    k as f64 / (steps - 1) as f64
                } else {
                    0.5
                };
                x[a] = domain.lo()[a] + t * domain.side(a);
            }
            worst = worst.max(index.query_distance(&x));
        }
        worst
    });
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_sampling_is_bit_identical() {
        let d = Domain::unit_square();
        let a = sample_points(&DensitySpec::uniform(), &d, 4, 7).unwrap();
        let b = sample_points(&DensitySpec::uniform(), &d, 4, 7).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_eq!(a.n(), 4);
        for i in 0..4 {
            assert!(d.contains(a.point(i)));
        }
        let c = sample_points(&DensitySpec::uniform(), &d, 4, 8).unwrap();
        assert_ne!(a.coords(), c.coords());
    }

    #[test]
    fn zero_points_rejected() {
        let d = Domain::unit_square();
        assert!(sample_points(&DensitySpec::uniform(), &d, 0, 1).is_err());
    }

    #[test]
    fn linear_density_first_moment() {
        // rho proportional to 1 + x1 on [0,1]: E[x1] = (1/2 + 1/3) / (3/2) = 5/9
        let d = Domain::new(vec![0.0], vec![1.0]).unwrap();
        let rho = Expr::parse("1 + x1").unwrap();
        let spec = DensitySpec::expression(rho, 1.0, 2.0).unwrap();
        let cloud = sample_points(&spec, &d, 100_000, 11).unwrap();
        let mean: f64 = cloud.coords().iter().sum::<f64>() / cloud.n() as f64;
        assert!(
            (mean - 5.0 / 9.0).abs() < 0.01,
            "mean {} should be near {}",
            mean,
            5.0 / 9.0
        );
    }

    #[test]
    fn envelope_violation_is_an_error() {
        let d = Domain::unit_square();
        let rho = Expr::parse("1 + x1").unwrap();
        let spec = DensitySpec::expression(rho, 0.5, 1.5).unwrap();
        let err = sample_points(&spec, &d, 1000, 3).unwrap_err();
        assert!(err.to_string().contains("envelope"), "got {}", err);
    }

    #[test]
    fn nearest_neighbor_basics() {
        let cloud = PointCloud::from_points(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(nearest_neighbor(&cloud, &[0.1, 0.0]), 0);
        assert_eq!(nearest_neighbor(&cloud, &[0.9, 0.0]), 1);
    }

    #[test]
    fn nearest_neighbor_duplicate_tie_breaks_to_smaller_index() {
        let coords = vec![
            0.1, 0.1, // 0
            0.9, 0.9, // 1
            0.3, 0.7, // 2
            0.4, 0.4, // 3  <- duplicate site, first occurrence
            0.2, 0.8, // 4
            0.8, 0.2, // 5
            0.7, 0.3, // 6
            0.6, 0.6, // 7
            0.4, 0.4, // 8  <- duplicate site, second occurrence
        ];
        let cloud = PointCloud::from_points(2, coords).unwrap();
        assert_eq!(nearest_neighbor(&cloud, &[0.4, 0.4]), 3);
        // equidistant pair straddling the probe
        let cloud2 = PointCloud::from_points(1, vec![0.0, 2.0]).unwrap();
        assert_eq!(nearest_neighbor(&cloud2, &[1.0]), 0);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let d = Domain::unit_square();
        let cloud = sample_points(&DensitySpec::uniform(), &d, 500, 5).unwrap();
        let probes = sample_points(&DensitySpec::uniform(), &d, 200, 6).unwrap();
        let index = NearestIndex::build(&cloud);
        for t in 0..probes.n() {
            let x = probes.point(t);
            let mut best = (usize::MAX, f64::INFINITY);
            for i in 0..cloud.n() {
                let d2 = crate::linalg::dist_sq(cloud.point(i), x);
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            assert_eq!(index.query(x), best.0);
        }
    }

    #[test]
    fn covering_radius_single_center_point() {
        let d = Domain::unit_square();
        let cloud = PointCloud::from_points(2, vec![0.5, 0.5]).unwrap();
        let r = estimate_covering_radius(&cloud, &d, 0.01).unwrap();
        let truth = (0.5f64 * 0.5 + 0.5 * 0.5).sqrt();
        assert!((r - truth).abs() < 0.015, "r {} truth {}", r, truth);
    }

    #[test]
    fn covering_radius_four_corners() {
        let d = Domain::unit_square();
        let cloud =
            PointCloud::from_points(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let r = estimate_covering_radius(&cloud, &d, 1.0 / 200.0).unwrap();
        let truth = (0.5f64 * 0.5 + 0.5 * 0.5).sqrt();
        assert!((truth - r).abs() < 0.01, "r {} truth {}", r, truth);
        assert!(r <= truth + 1e-12, "probe estimate cannot overshoot");
    }
}
