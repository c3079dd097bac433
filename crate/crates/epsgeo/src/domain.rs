//! Axis-aligned box domains.

use crate::error::{Error, Result};
use crate::linalg;

/// Closed axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`, `d >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::config(format!(
                "domain bounds must be non-empty and of equal length (got {} and {})",
                lo.len(),
                hi.len()
            )));
        }
        if !linalg::all_finite(&lo) || !linalg::all_finite(&hi) {
            return Err(Error::config("domain bounds must be finite"));
        }
        for i in 0..lo.len() {
            if lo[i] >= hi[i] {
                return Err(Error::config(format!(
                    "domain axis {} is degenerate: lo={} hi={}",
                    i + 1,
                    lo[i],
                    hi[i]
                )));
            }
        }
        Ok(Domain { lo, hi })
    }

    pub fn unit_square() -> Self {
        Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Membership in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    pub fn clamp_into(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn diameter(&self) -> f64 {
        linalg::dist(&self.lo, &self.hi)
    }

    pub fn side(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_bounds() {
        assert!(Domain::new(vec![], vec![]).is_err());
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![1.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn contains_is_closed() {
        let d = Domain::unit_square();
        assert!(d.contains(&[0.0, 1.0]));
        assert!(d.contains(&[1.0, 1.0]));
        assert!(!d.contains(&[1.0 + 1e-12, 0.5]));
        assert!(!d.contains(&[0.5]));
    }

    #[test]
    fn geometry_helpers() {
        let d = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!((d.diameter() - 8.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.volume(), 4.0);
        assert_eq!(d.center(), vec![0.0, 0.0]);
        let mut x = [2.0, -3.0];
        d.clamp_into(&mut x);
        assert_eq!(x, [1.0, -1.0]);
    }
}
