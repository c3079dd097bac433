//! Gauss-Legendre quadrature on the unit interval.

/// Nodes and weights for `n`-point Gauss-Legendre quadrature, mapped to [0, 1].
///
/// Exact for polynomials of degree `2n - 1`, which makes low orders plenty for
/// the smooth integrands that show up in segment costs.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order;
        // Find roots of the Legendre polynomial P_n on [-1, 1] by Newton's
        // method from the Chebyshev-based initial guess, exploiting symmetry.
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map from [-1, 1] to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrate `f` over [0, 1].
    pub fn integrate01<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += w * f(t);
        }
        acc
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
