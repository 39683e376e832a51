//! Fixed-rule quadrature: composite Simpson for kernel constants and
//! trapezoid sums over the evaluation grid.

use serde::{Deserialize, Serialize};

/// Composite Simpson rule with a fixed node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Number of nodes; forced odd (Simpson needs an even panel count).
    pub nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 2001 }
    }
}

impl QuadratureSpec {
    pub fn new(nodes: usize) -> Self {
        QuadratureSpec { nodes: nodes.max(3) }
    }

    /// Composite Simpson integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let n = if self.nodes % 2 == 0 { self.nodes + 1 } else { self.nodes };
        let m = n - 1; // even panel count
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }
}

/// Trapezoid sum of samples `v` on a uniform grid with spacing `step`.
pub fn trapezoid_uniform(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        _ => {
            let inner: f64 = values[1..values.len() - 1].iter().sum();
            step * (0.5 * (values[0] + values[values.len() - 1]) + inner)
        }
    }
}

/// Trapezoid weight of node `i` on a `count`-point uniform grid.
pub fn trapezoid_weight(i: usize, count: usize, step: f64) -> f64 {
    if count < 2 {
        0.0
    } else if i == 0 || i == count - 1 {
        0.5 * step
    } else {
        step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_for_cubics() {
        let q = QuadratureSpec::new(11);
        let v = q.integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0);
        // antiderivative x^4/4 - x^2 + x
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_smooth_accuracy() {
        let q = QuadratureSpec::default();
        let v = q.integrate(|x| (-x * x / 2.0).exp(), -8.0, 8.0);
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn trapezoid_matches_weights() {
        let step = 0.1;
        let values: Vec<f64> = (0..11).map(|i| (i as f64 * step).sin()).collect();
        let direct = trapezoid_uniform(&values, step);
        let via_weights: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| v * trapezoid_weight(i, 11, step))
            .sum();
        assert!((direct - via_weights).abs() < 1e-15);
    }
}
