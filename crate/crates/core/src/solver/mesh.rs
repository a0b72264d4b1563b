use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-uniform mesh refined in both end layers, with `gamma` a node.
#[derive(Debug, Clone, Serialize)]
pub struct LayerMesh {
    pub nodes: Vec<f64>,
    pub tau_a: f64,
    pub tau_b: f64,
    pub gamma_index: usize,
}

impl LayerMesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cells `h_i = t_{i+1} - t_i`.
    pub fn steps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Transition width `min((b-a)/4, 2 sqrt(eps/m) ln n)`.
pub fn transition_width(a: f64, b: f64, eps: f64, m: f64, n: usize) -> f64 {
    (0.25 * (b - a)).min(2.0 * (eps / m).sqrt() * (n as f64).ln())
}

/// `n/4` cells on `[a, a+tau]`, `n/2` across the middle, `n/4` on `[b-tau, b]`;
/// the interior node nearest to `gamma` is replaced by `gamma`.
pub fn shishkin_mesh((a, gamma, b): (f64, f64, f64), eps: f64, m: f64, n: usize) -> Result<LayerMesh> {
    if !(a < gamma && gamma < b) || ![a, gamma, b].iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid(format!("degenerate geometry {a}, {gamma}, {b}")));
    }
    if n < 64 || n % 4 != 0 {
        return Err(Error::Invalid(format!("mesh size must be a multiple of 4 and at least 64, got {n}")));
    }
    if !(eps > 0.0 && m > 0.0) {
        return Err(Error::Invalid("mesh needs eps > 0 and m > 0".into()));
    }
    let tau = transition_width(a, b, eps, m, n);
    let q = n / 4;
    let mut nodes = Vec::with_capacity(n + 1);
    let (left, right) = (a + tau, b - tau);
    for i in 0..q {
        nodes.push(a + tau * i as f64 / q as f64);
    }
    for i in 0..2 * q {
        nodes.push(left + (right - left) * i as f64 / (2 * q) as f64);
    }
    for i in 0..q {
        nodes.push(right + tau * i as f64 / q as f64);
    }
    nodes.push(b);

    let gamma_index = (1..n)
        .min_by(|&i, &j| (nodes[i] - gamma).abs().total_cmp(&(nodes[j] - gamma).abs()))
        .expect("n >= 64");
    nodes[gamma_index] = gamma;
    debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    Ok(LayerMesh { nodes, tau_a: tau, tau_b: tau, gamma_index })
}
