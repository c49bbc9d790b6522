//! Gauss-Legendre nodes and composite quadrature helpers.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`, computed by Newton iteration on the
/// Legendre recurrence and cached per order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_n'(x) by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    cache.lock().unwrap().insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// Nodes and weights mapped to `[a, b]`.
pub fn gl_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|t| half * t).collect(),
    )
}

/// Composite rule: `panels` copies of an `order`-point rule on `[a, b]`.
pub fn composite_gl(order: usize, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(order * panels);
    let mut ws = Vec::with_capacity(order * panels);
    let step = (b - a) / panels as f64;
    for p in 0..panels {
        let (x, w) = gl_on(order, a + p as f64 * step, a + (p as f64 + 1.0) * step);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Uniform periodic (trapezoid) nodes on `[0, 2 pi)`; spectrally accurate for
/// trigonometric polynomials under the Nyquist limit.
pub fn torus_nodes(n: usize) -> (Vec<f64>, f64) {
    let w = std::f64::consts::TAU / n as f64;
    ((0..n).map(|k| k as f64 * w).collect(), w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gl_on(8, 0.0, 2.0);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((v - 2.0f64.powi(10) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn composite_matches_smooth_integral() {
        let (x, w) = composite_gl(16, 0.0, std::f64::consts::PI, 4);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((v - 2.0).abs() < 1e-14);
    }
}
