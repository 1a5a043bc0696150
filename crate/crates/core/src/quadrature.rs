//! Gauss–Legendre and trapezoid rules.

use std::f64::consts::PI;

/// A one-dimensional quadrature rule on some interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> Rule1d {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    let half = order.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    Rule1d { nodes, weights }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre rule on `[a, b]` split into `elements`
/// equal sub-intervals with `order` points each.
pub fn composite_gauss_legendre(a: f64, b: f64, elements: usize, order: usize) -> Rule1d {
    let reference = gauss_legendre(order);
    let h = (b - a) / elements as f64;
    let mut nodes = Vec::with_capacity(elements * order);
    let mut weights = Vec::with_capacity(elements * order);
    for e in 0..elements {
        let left = a + e as f64 * h;
        for (xi, wi) in reference.nodes.iter().zip(&reference.weights) {
            nodes.push(left + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    Rule1d { nodes, weights }
}

/// Periodic trapezoid rule on `[0, length)` with `points` nodes. Exact for
/// trigonometric polynomials of degree below `points`.
pub fn periodic_trapezoid(length: f64, points: usize) -> Rule1d {
    let h = length / points as f64;
    Rule1d {
        nodes: (0..points).map(|i| i as f64 * h).collect(),
        weights: vec![h; points],
    }
}
