//! Graph paths and time-parametrized polylines.

use crate::error::{Error, Result};
use crate::graph::EpsilonGraph;
use crate::linalg;

/// A walk through graph vertices, v_0 .. v_m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePath {
    vertices: Vec<usize>,
}

impl DiscretePath {
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::config("a discrete path needs at least one vertex"));
        }
        Ok(DiscretePath { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Edge count m.
    pub fn m(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Check membership in V_n(a, b): endpoints and consecutive adjacency.
    pub fn validate(&self, graph: &EpsilonGraph) -> Result<()> {
        let first = *self.vertices.first().unwrap();
        let last = *self.vertices.last().unwrap();
        if first != graph.a_index() || last != graph.b_index() {
            return Err(Error::config(format!(
                "path must run from vertex {} to vertex {}, got {} to {}",
                graph.a_index(),
                graph.b_index(),
                first,
                last
            )));
        }
        for w in self.vertices.windows(2) {
            if graph.edge_slot(w[0], w[1] as u32).is_none() {
                return Err(Error::config(format!(
                    "vertices {} and {} are not adjacent",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Coordinates of the path vertices, flat row-major.
    pub fn points(&self, graph: &EpsilonGraph) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.vertices.len() * graph.dim());
        for &v in &self.vertices {
            out.extend_from_slice(graph.vertex(v));
        }
        out
    }
}

/// Piecewise-linear path on [0, 1] with strictly increasing knot times.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    dim: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
}

impl ContinuousPath {
    pub fn new(dim: usize, times: Vec<f64>, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if times.len() < 2 || coords.len() != times.len() * dim {
            return Err(Error::config(format!(
                "need at least 2 knots and matching coordinates, got {} times and {} coords for dim {}",
                times.len(),
                coords.len(),
                dim
            )));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::config("knot times must start at 0 and end at 1"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("knot times must be strictly increasing"));
        }
        if !linalg::all_finite(&coords) || !linalg::all_finite(&times) {
            return Err(Error::config("path data must be finite"));
        }
        Ok(ContinuousPath { dim, times, coords })
    }

    /// Equal-time knots over the given polyline vertices.
    pub fn from_polyline(dim: usize, points: &[f64]) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::config("polyline length must be a multiple of dim"));
        }
        let k = points.len() / dim;
        if k < 2 {
            return Err(Error::config("polyline needs at least 2 points"));
        }
        let times: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        ContinuousPath::new(dim, times, points.to_vec())
    }

    /// Straight segment from a to b.
    pub fn straight(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::config("endpoints must have equal positive dimension"));
        }
        let mut coords = a.to_vec();
        coords.extend_from_slice(b);
        ContinuousPath::new(a.len(), vec![0.0, 1.0], coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_knots(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Overwrite one flat coordinate. Finiteness is re-checked; interior use
    /// only, for finite-difference probing.
    pub(crate) fn set_coord(&mut self, idx: usize, value: f64) {
        debug_assert!(value.is_finite());
        self.coords[idx] = value;
    }

    #[inline]
    pub fn knot(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.knot(0)
    }

    pub fn end(&self) -> &[f64] {
        self.knot(self.num_knots() - 1)
    }

    /// Evaluate at time t (clamped to [0, 1]).
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(0.0, 1.0);
        let k = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(exact) => {
                out.copy_from_slice(self.knot(exact));
                return;
            }
            Err(ins) => ins.clamp(1, self.times.len() - 1) - 1,
        };
        let t0 = self.times[k];
        let t1 = self.times[k + 1];
        let s = (t - t0) / (t1 - t0);
        linalg::lerp_into(self.knot(k), self.knot(k + 1), s, out);
    }

    pub fn euclid_length(&self) -> f64 {
        (1..self.num_knots())
            .map(|k| linalg::dist(self.knot(k - 1), self.knot(k)))
            .sum()
    }

    /// Max knot speed |dx/dt| over segments.
    pub fn lipschitz_modulus(&self) -> f64 {
        (1..self.num_knots())
            .map(|k| {
                linalg::dist(self.knot(k - 1), self.knot(k)) / (self.times[k] - self.times[k - 1])
            })
            .fold(0.0, f64::max)
    }

    /// Points spaced at most `res` apart along the polyline (all knots kept).
    pub fn densify(&self, res: f64) -> Vec<f64> {
        assert!(res > 0.0, "densification resolution must be positive");
        let mut out = Vec::new();
        out.extend_from_slice(self.knot(0));
        let mut buf = vec![0.0; self.dim];
        for k in 1..self.num_knots() {
            let a = self.knot(k - 1);
            let b = self.knot(k);
            let len = linalg::dist(a, b);
            let pieces = (len / res).ceil().max(1.0) as usize;
            for s in 1..=pieces {
                linalg::lerp_into(a, b, s as f64 / pieces as f64, &mut buf);
                out.extend_from_slice(&buf);
            }
        }
        out
    }

    /// Resample to `m + 1` knots at equal times i/m.
    pub fn resample_uniform_t(&self, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::config("resampling needs at least 1 segment"));
        }
        let mut coords = Vec::with_capacity((m + 1) * self.dim);
        let mut buf = vec![0.0; self.dim];
        let times: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        for &t in &times {
            self.eval(t, &mut buf);
            coords.extend_from_slice(&buf);
        }
        ContinuousPath::new(self.dim, times, coords)
    }

    /// Same polyline image with knot times proportional to arc length.
    /// Consecutive duplicate knots are collapsed (their time slot is empty);
    /// zero-length paths come back as a constant 2-knot path.
    pub fn with_constant_speed_times(&self) -> Self {
        let mut coords = self.knot(0).to_vec();
        let mut cum = vec![0.0];
        for k in 1..self.num_knots() {
            let prev_start = coords.len() - self.dim;
            let d = {
                let prev = &coords[prev_start..];
                linalg::dist(prev, self.knot(k))
            };
            if d > 0.0 {
                coords.extend_from_slice(self.knot(k));
                cum.push(cum[cum.len() - 1] + d);
            }
        }
        let total = *cum.last().unwrap();
        if total <= 0.0 {
            let mut pair = self.knot(0).to_vec();
            pair.extend_from_slice(self.knot(0));
            return ContinuousPath {
                dim: self.dim,
                times: vec![0.0, 1.0],
                coords: pair,
            };
        }
        let mut times: Vec<f64> = cum.iter().map(|c| c / total).collect();
        times[0] = 0.0;
        let last = times.len() - 1;
        times[last] = 1.0;
        ContinuousPath {
            dim: self.dim,
            times,
            coords,
        }
    }

    /// Reparametrize to constant Euclidean speed, keeping the knot count.
    /// Zero-length paths come back as a constant path.
    pub fn reparam_constant_speed(&self) -> Self {
        let k = self.num_knots();
        let mut cum = Vec::with_capacity(k);
        cum.push(0.0);
        for i in 1..k {
            cum.push(cum[i - 1] + linalg::dist(self.knot(i - 1), self.knot(i)));
        }
        let total = *cum.last().unwrap();
        let times: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        if total <= 0.0 {
            let mut coords = Vec::with_capacity(k * self.dim);
            for _ in 0..k {
                coords.extend_from_slice(self.knot(0));
            }
            return ContinuousPath {
                dim: self.dim,
                times,
                coords,
            };
        }
        let mut coords = Vec::with_capacity(k * self.dim);
        let mut buf = vec![0.0; self.dim];
        let mut seg = 0usize;
        for (i, _) in times.iter().enumerate() {
            let target = total * i as f64 / (k - 1) as f64;
            while seg + 2 < k && cum[seg + 1] < target {
                seg += 1;
            }
            let seg_len = cum[seg + 1] - cum[seg];
            let s = if seg_len > 0.0 {
                ((target - cum[seg]) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            linalg::lerp_into(self.knot(seg), self.knot(seg + 1), s, &mut buf);
            coords.extend_from_slice(&buf);
        }
        ContinuousPath {
            dim: self.dim,
            times,
            coords,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validation() {
        assert!(ContinuousPath::new(2, vec![0.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]).is_ok());
        assert!(ContinuousPath::new(2, vec![0.0, 0.5], vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(ContinuousPath::new(2, vec![0.5, 1.0], vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(ContinuousPath::new(2, vec![0.0, 0.0, 1.0], vec![0.0; 6]).is_err());
        assert!(ContinuousPath::new(2, vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn eval_interpolates() {
        let p = ContinuousPath::straight(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut out = [0.0, 0.0];
        p.eval(0.5, &mut out);
        assert_eq!(out, [0.5, 0.5]);
        p.eval(-1.0, &mut out);
        assert_eq!(out, [0.0, 0.0]);
        p.eval(2.0, &mut out);
        assert_eq!(out, [1.0, 1.0]);
    }

    #[test]
    fn midpoint_of_three_vertex_polyline() {
        let p = ContinuousPath::from_polyline(2, &[0.0, 0.0, 0.3, 0.9, 1.0, 1.0]).unwrap();
        let mut out = [0.0, 0.0];
        p.eval(0.5, &mut out);
        assert_eq!(out, [0.3, 0.9]);
    }

    #[test]
    fn lengths_and_modulus() {
        let p = ContinuousPath::from_polyline(2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((p.euclid_length() - 2.0).abs() < 1e-15);
        assert!((p.lipschitz_modulus() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn densify_spacing() {
        let p = ContinuousPath::straight(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let pts = p.densify(0.3);
        let k = pts.len() / 2;
        assert_eq!(k, 5); // knots 0 and 1 plus 3 interior subdivisions
        for w in 0..k - 1 {
            let d = crate::linalg::dist(&pts[w * 2..w * 2 + 2], &pts[(w + 1) * 2..(w + 1) * 2 + 2]);
            assert!(d <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn constant_speed_reparam_evens_out_time_law() {
        // same image, lopsided time law
        let p = ContinuousPath::new(
            1,
            vec![0.0, 0.9, 1.0],
            vec![0.0, 0.1, 1.0],
        )
        .unwrap();
        let q = p.reparam_constant_speed();
        let mut out = [0.0];
        q.eval(0.5, &mut out);
        assert!((out[0] - 0.5).abs() < 1e-12);
        // idempotent up to numerical jitter
        let r = q.reparam_constant_speed();
        for (a, b) in q.coords().iter().zip(r.coords().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_length_reparam_is_constant() {
        let p = ContinuousPath::new(2, vec![0.0, 1.0], vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let q = p.reparam_constant_speed();
        assert_eq!(q.knot(0), &[0.5, 0.5]);
        assert_eq!(q.knot(1), &[0.5, 0.5]);
    }

    #[test]
    fn resample_uniform_t_hits_knots() {
        let p = ContinuousPath::from_polyline(2, &[0.0, 0.0, 0.5, 0.5, 1.0, 0.0]).unwrap();
        let q = p.resample_uniform_t(4).unwrap();
        assert_eq!(q.num_knots(), 5);
        assert_eq!(q.knot(2), &[0.5, 0.5]);
        assert_eq!(q.knot(0), p.knot(0));
        assert_eq!(q.knot(4), p.knot(2));
    }
}
