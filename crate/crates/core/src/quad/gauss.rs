//! Gauss–Legendre rules on [−1, 1].

use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MAX_CACHED: usize = 128;

static CACHE: [OnceLock<GaussLegendre>; MAX_CACHED + 1] = [const { OnceLock::new() }; MAX_CACHED + 1];

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn cached(n: usize) -> &'static GaussLegendre {
        assert!(n >= 1 && n <= MAX_CACHED, "cached rules cover 1..={MAX_CACHED} nodes");
        CACHE[n].get_or_init(|| GaussLegendre::new(n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 40] {
            let g = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let v = g.integrate(|x| x.powi(deg as i32) + x.powi(deg as i32 - 1), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0) + 1.0 / deg as f64;
            assert!((v - exact).abs() < 1e-13, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        let g = GaussLegendre::cached(33);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert_eq!(g.len(), 33);
    }
}
