//! Exponential boundary-layer functions for the three-point condition.
//!
//! With `s = sqrt(m/eps)`, `X = b-a`, `Y = b-gamma`, `Z = gamma-a`:
//!
//! ```text
//! D      = 2(sinh sX - sinh sY - sinh sZ)       = 8 sinh(sX/2) sinh(sY/2) sinh(sZ/2)
//! zeta   = A/D * 2(sinh s(b-t) + sinh s(t-gamma)) = A cosh(s(t - (b+gamma)/2)) / (2 sinh(sX/2) sinh(sZ/2))
//! zeta^  = B/D * 2(sinh s(t-a) + sinh s(gamma-t)) = B cosh(s(t - (a+gamma)/2)) / (2 sinh(sX/2) sinh(sY/2))
//! ```
//!
//! The right-hand forms are what gets evaluated. Each hyperbolic factor is
//! written as `e^{s|x|}` times a factor in `(0, 2]`, and the large exponentials
//! cancel analytically, so the code only ever calls `exp` with a non-positive
//! argument. This holds from `eps = 1` down to `eps = 1e-14` and below.

use serde::Serialize;

use crate::error::Result;
use crate::problem::ReducedPath;

/// Envelope constant for [`LayerFamily::decay_bound`]. It dominates the
/// prefactor `2 / ((1 - e^{-sX})(1 - e^{-sZ}))` once that product reaches 1/2.
pub const ENVELOPE_K: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct LayerFamily {
    /// Inverse layer width `sqrt(m/eps)`.
    pub s: f64,
    pub m: f64,
    pub eps: f64,
    pub lambda: f64,
    /// `eta(gamma) - eta(a)`, signed.
    pub big_a: f64,
    /// `|eta(b) - eta(gamma)|`.
    pub big_b: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    // psi at a, gamma, b, used by v_corr
    psi_nodes: [f64; 3],
}

/// `1 - e^{-x}` without cancellation.
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

impl LayerFamily {
    pub fn new(m: f64, eps: f64, lambda: f64, (a, gamma, b): (f64, f64, f64), big_a: f64, big_b: f64) -> Self {
        assert!(m > 0.0 && eps > 0.0, "layer family needs m > 0 and eps > 0");
        assert!(a < gamma && gamma < b, "layer family needs a < gamma < b");
        let mut fam = LayerFamily {
            s: (m / eps).sqrt(),
            m,
            eps,
            lambda,
            big_a,
            big_b: big_b.abs(),
            a,
            gamma,
            b,
            x: b - a,
            y: b - gamma,
            z: gamma - a,
            psi_nodes: [0.0; 3],
        };
        fam.psi_nodes = [fam.psi(a), fam.psi(gamma), fam.psi(b)];
        fam
    }

    /// Family for a problem's reduced path at perturbation `eps`.
    pub fn from_path(path: &ReducedPath, eps: f64) -> Result<Self> {
        let p = path.problem();
        let (ea, eg, eb) = (path.eta(p.a)?, path.eta(p.gamma)?, path.eta(p.b)?);
        Ok(Self::new(p.m(), eps, p.lambda, p.geometry(), eg - ea, (eb - eg).abs()))
    }

    /// `(D, D e^{-sX})`. The raw value overflows to `+inf` for large `sX`;
    /// the scaled one is always in `(0, 1]`.
    pub fn big_d(&self) -> (f64, f64) {
        let scaled =
            one_minus_exp_neg(self.s * self.x) * one_minus_exp_neg(self.s * self.y) * one_minus_exp_neg(self.s * self.z);
        ((self.s * self.x).exp() * scaled, scaled)
    }

    // cosh(s q) / (2 sinh(s L1/2) sinh(s L2/2)) and the matching sinh ratio,
    // for |q| <= (L1 + L2)/2. `excess` is |q| - (L1 + L2)/2, passed in as a
    // distance to the nearer end so that it is exact at the nodes.
    fn ratios(&self, q: f64, excess: f64, l1: f64, l2: f64) -> (f64, f64) {
        let s = self.s;
        let aq = q.abs();
        let scale = (s * excess).exp() / (one_minus_exp_neg(s * l1) * one_minus_exp_neg(s * l2));
        let decay = (-2.0 * s * aq).exp();
        let cosh_part = scale * (1.0 + decay);
        let sinh_part = q.signum() * scale * one_minus_exp_neg(2.0 * s * aq);
        (cosh_part, if q == 0.0 { 0.0 } else { sinh_part })
    }

    // centred at (b+gamma)/2 over lengths X, Z
    fn zeta_q(&self, t: f64) -> (f64, f64) {
        let q = 0.5 * (2.0 * t - (self.b + self.gamma));
        (q, if q >= 0.0 { (t - self.b) - self.z } else { self.a - t })
    }

    fn zeta_parts(&self, t: f64) -> (f64, f64) {
        let (q, excess) = self.zeta_q(t);
        self.ratios(q, excess, self.x, self.z)
    }

    fn zeta_hat_parts(&self, t: f64) -> (f64, f64) {
        let q = 0.5 * (2.0 * t - (self.a + self.gamma));
        let excess = if q >= 0.0 { t - self.b } else { (self.a - t) - self.y };
        self.ratios(q, excess, self.x, self.y)
    }

    pub fn zeta(&self, t: f64) -> f64 {
        if self.big_a == 0.0 {
            return 0.0;
        }
        self.big_a * self.zeta_parts(t).0
    }

    pub fn zeta_d1(&self, t: f64) -> f64 {
        if self.big_a == 0.0 {
            return 0.0;
        }
        self.big_a * self.s * self.zeta_parts(t).1
    }

    pub fn zeta_d2(&self, t: f64) -> f64 {
        if self.big_a == 0.0 {
            return 0.0;
        }
        self.big_a * self.s * self.s * self.zeta_parts(t).0
    }

    pub fn zeta_hat(&self, t: f64) -> f64 {
        if self.big_b == 0.0 {
            return 0.0;
        }
        self.big_b * self.zeta_hat_parts(t).0
    }

    pub fn zeta_hat_d1(&self, t: f64) -> f64 {
        if self.big_b == 0.0 {
            return 0.0;
        }
        self.big_b * self.s * self.zeta_hat_parts(t).1
    }

    pub fn zeta_hat_d2(&self, t: f64) -> f64 {
        if self.big_b == 0.0 {
            return 0.0;
        }
        self.big_b * self.s * self.s * self.zeta_hat_parts(t).0
    }

    /// `lambda |A| t / (D sqrt(m eps)) * 2(cosh s(b-t) - cosh s(t-gamma))`.
    pub fn psi(&self, t: f64) -> f64 {
        if self.big_a == 0.0 || t == 0.0 {
            return 0.0;
        }
        // cosh s(b-t) - cosh s(t-gamma) = 2 sinh(sY/2) sinh(s((b+gamma)/2 - t))
        let (q, excess) = self.zeta_q(t);
        let (_, sinh_ratio) = self.ratios(-q, excess, self.x, self.z);
        self.lambda * self.big_a.abs() * t / (self.m * self.eps).sqrt() * sinh_ratio
    }

    /// Correction `v = -(psi(a)-psi(gamma))/A * zeta + (psi(gamma)-psi(b))/B * zeta^ + psi`;
    /// a coefficient with a zero denominator is taken as zero.
    pub fn v_corr(&self, t: f64) -> f64 {
        let [pa, pg, pb] = self.psi_nodes;
        let ca = if self.big_a == 0.0 { 0.0 } else { -(pa - pg) / self.big_a };
        let cb = if self.big_b == 0.0 { 0.0 } else { (pg - pb) / self.big_b };
        ca * self.zeta(t) + cb * self.zeta_hat(t) + self.psi(t)
    }

    /// Decay exponents `(chi(t), chi^(t))`, both non-positive on `[a, b]`.
    pub fn chi(&self, t: f64) -> (f64, f64) {
        let chi = if t <= 0.5 * (self.b + self.gamma) {
            self.a - t
        } else {
            t - self.b + self.a - self.gamma
        };
        let chi_hat = if t >= 0.5 * (self.a + self.gamma) {
            t - self.b
        } else {
            self.gamma - self.b + self.a - t
        };
        (chi, chi_hat)
    }

    /// Envelopes `(K|A| e^{s chi(t)}, K B e^{s chi^(t)})` for `|zeta|` and `zeta^`.
    pub fn decay_bound(&self, t: f64) -> (f64, f64) {
        let (chi, chi_hat) = self.chi(t);
        (
            ENVELOPE_K * self.big_a.abs() * (self.s * chi).exp(),
            ENVELOPE_K * self.big_b * (self.s * chi_hat).exp(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use crate::problem::{eta_derivatives, tests::p1};

    // the paper's D display, evaluated term by term (only usable for small s)
    fn d_direct(s: f64, a: f64, g: f64, b: f64) -> f64 {
        ((s * (b - a)).exp() + (s * (g - b)).exp() + (s * (a - g)).exp())
            - ((s * (a - b)).exp() + (s * (b - g)).exp() + (s * (g - a)).exp())
    }

    fn zeta_direct(f: &LayerFamily, t: f64) -> f64 {
        let s = f.s;
        f.big_a / d_direct(s, f.a, f.gamma, f.b)
            * ((s * (f.b - t)).exp() - (s * (t - f.b)).exp() + (s * (t - f.gamma)).exp() - (s * (f.gamma - t)).exp())
    }

    fn zeta_hat_direct(f: &LayerFamily, t: f64) -> f64 {
        let s = f.s;
        f.big_b / d_direct(s, f.a, f.gamma, f.b)
            * ((s * (t - f.a)).exp() - (s * (f.a - t)).exp() + (s * (f.gamma - t)).exp() - (s * (t - f.gamma)).exp())
    }

    fn psi_direct(f: &LayerFamily, t: f64) -> f64 {
        let s = f.s;
        f.lambda * f.big_a.abs() * t / (d_direct(s, f.a, f.gamma, f.b) * (f.m * f.eps).sqrt())
            * ((s * (f.b - t)).exp() + (s * (t - f.b)).exp() - (s * (f.gamma - t)).exp() - (s * (t - f.gamma)).exp())
    }

    fn p1_family(eps: f64) -> LayerFamily {
        LayerFamily::from_path(&eta_derivatives(&p1()).unwrap(), eps).unwrap()
    }

    #[test]
    fn big_d_unit_geometry() {
        // s = 1 with m = eps
        let f = LayerFamily::new(1.0, 1.0, 0.5, (0.0, 1.0, 2.0), 1.0, 1.0);
        let (d, scaled) = f.big_d();
        let want = 2.0 * (2f64.sinh() - 2.0 * 1f64.sinh());
        assert!((want - 2.552_916_041_118_832_5).abs() < 1e-14);
        assert!((d - want).abs() < 1e-14);
        assert!((d_direct(1.0, 0.0, 1.0, 2.0) - want).abs() < 1e-14);
        assert!((scaled - want * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn big_d_scaled_at_tiny_eps() {
        let f = LayerFamily::new(0.4, 1e-12, 1.6, (0.0, 0.25, 0.5), -0.13, 0.16);
        assert!(f.s * f.x > 3.0e5);
        let (raw, scaled) = f.big_d();
        assert!(raw.is_infinite());
        assert!(scaled > 0.99 && scaled <= 1.0);
        for t in linspace(0.0, 0.5, 101) {
            for v in [f.zeta(t), f.zeta_hat(t), f.psi(t), f.v_corr(t), f.zeta_d1(t)] {
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn factorised_forms_match_direct_sums() {
        for &eps in &[1.0, 0.1, 1e-2, 1e-3] {
            let f = LayerFamily::new(0.4, eps, 1.6, (0.0, 0.25, 0.5), -0.134, 0.159);
            for t in linspace(0.0, 0.5, 41) {
                let tol = 1e-12 * (1.0 + zeta_direct(&f, t).abs());
                assert!((f.zeta(t) - zeta_direct(&f, t)).abs() < tol);
                assert!((f.zeta_hat(t) - zeta_hat_direct(&f, t)).abs() < 1e-12 * (1.0 + zeta_hat_direct(&f, t)));
                assert!((f.psi(t) - psi_direct(&f, t)).abs() < 1e-11 * (1.0 + psi_direct(&f, t).abs()));
            }
        }
    }

    #[test]
    fn boundary_identities() {
        let f = p1_family(1e-4);
        let (a, g, b) = (f.a, f.gamma, f.b);
        assert!((f.zeta(g) - f.zeta(a) + f.big_a).abs() < 1e-13 * f.big_a.abs());
        assert_eq!(f.zeta(b), f.zeta(g));
        assert_eq!(f.zeta_hat(g), f.zeta_hat(a));
        assert!((f.zeta_hat(b) - f.zeta_hat(g) - f.big_b).abs() < 1e-13 * f.big_b);
        let (va, vg, vb) = (f.v_corr(a), f.v_corr(g), f.v_corr(b));
        assert!((va - vg).abs() <= 1e-12 * va.abs().max(1e-300));
        assert!((vb - vg).abs() <= 1e-12 * va.abs().max(1e-300));
    }

    #[test]
    fn zero_amplitudes() {
        let f = LayerFamily::new(0.4, 1e-3, 1.6, (0.0, 0.25, 0.5), 0.0, 0.0);
        for t in linspace(0.0, 0.5, 11) {
            assert_eq!(f.zeta(t), 0.0);
            assert_eq!(f.zeta_hat(t), 0.0);
            assert_eq!(f.psi(t), 0.0);
            assert_eq!(f.v_corr(t), 0.0);
        }
    }

    #[test]
    fn psi_examples() {
        let f = p1_family(1e-4);
        assert_eq!(f.psi(0.0), 0.0);
        let got = f.psi(0.5);
        assert!(got < 0.0);
        // direct scaled evaluation: D e^{-sX} and (1 - cosh(sY)) e^{-sX}
        let s = f.s;
        let d_scaled = f.big_d().1;
        let num_scaled = 2.0 * ((-s * f.x).exp() - 0.5 * ((s * (f.y - f.x)).exp() + (-s * (f.y + f.x)).exp()));
        let want = f.lambda * f.big_a.abs() * 0.5 / (d_scaled * (f.m * f.eps).sqrt()) * num_scaled;
        assert!((got - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn correction_shrinks_with_eps() {
        let maxes: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let f = p1_family(e);
                linspace(0.0, 0.5, 2001).into_iter().map(|t| f.v_corr(t).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(maxes[0] > maxes[1] && maxes[1] > maxes[2], "{maxes:?}");
    }

    #[test]
    fn stationary_points_are_exact() {
        let f = p1_family(1e-3);
        assert_eq!(f.zeta_d1(0.5 * (f.b + f.gamma)), 0.0);
        assert_eq!(f.zeta_hat_d1(0.5 * (f.a + f.gamma)), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = LayerFamily::new(0.4, 1e-2, 1.6, (0.0, 0.25, 0.5), -0.134, 0.159);
        let h = 1e-6;
        for t in linspace(0.01, 0.49, 25) {
            let fd = (f.zeta(t + h) - f.zeta(t - h)) / (2.0 * h);
            assert!((fd - f.zeta_d1(t)).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd = (f.zeta_hat(t + h) - f.zeta_hat(t - h)) / (2.0 * h);
            assert!((fd - f.zeta_hat_d1(t)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn monotone_shapes() {
        // A > 0: zeta >= 0, decreasing then increasing about (b+gamma)/2
        let f = LayerFamily::new(0.4, 1e-3, 1.6, (0.0, 0.25, 0.5), 0.2, 0.1);
        let c = 0.5 * (f.b + f.gamma);
        let ch = 0.5 * (f.a + f.gamma);
        let ts = linspace(0.0, 0.5, 4001);
        for w in ts.windows(2) {
            assert!(f.zeta(w[0]) >= 0.0 && f.zeta_hat(w[0]) >= 0.0);
            if w[1] <= c {
                assert!(f.zeta(w[1]) <= f.zeta(w[0]));
            } else if w[0] >= c {
                assert!(f.zeta(w[1]) >= f.zeta(w[0]));
            }
            if w[1] <= ch {
                assert!(f.zeta_hat(w[1]) <= f.zeta_hat(w[0]));
            } else if w[0] >= ch {
                assert!(f.zeta_hat(w[1]) >= f.zeta_hat(w[0]));
            }
        }
    }

    #[test]
    fn uniform_decay_away_from_a() {
        let c = 0.05;
        let maxes: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-6]
            .iter()
            .map(|&e| {
                let f = p1_family(e);
                linspace(c, 0.5, 500).into_iter().map(|t| f.zeta(t).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(maxes.windows(2).all(|w| w[1] < w[0]), "{maxes:?}");
        assert!(maxes[3] < 1e-10);
    }

    #[test]
    fn decay_envelopes_hold() {
        for eps in [1e-3, 1e-4] {
            let f = p1_family(eps);
            for t in linspace(0.0, 0.5, 101) {
                let (bz, bh) = f.decay_bound(t);
                assert!(f.zeta(t).abs() <= bz, "eps={eps} t={t}");
                assert!(f.zeta_hat(t) <= bh, "eps={eps} t={t}");
            }
            let (chi_a, _) = f.chi(f.a);
            let (_, chi_hat_b) = f.chi(f.b);
            assert_eq!(chi_a, 0.0);
            assert_eq!(chi_hat_b, 0.0);
            assert_eq!(f.decay_bound(f.a).0, ENVELOPE_K * f.big_a.abs());
            assert_eq!(f.decay_bound(f.b).1, ENVELOPE_K * f.big_b);
            let (chi_b, _) = f.chi(f.b);
            let (_, chi_hat_a) = f.chi(f.a);
            assert!(chi_b < 0.0 && chi_hat_a < 0.0);
        }
    }

    #[test]
    fn layer_ode_residual() {
        for eps in [1.0, 1e-2, 1e-4, 1e-8] {
            let f = p1_family(eps);
            for t in linspace(0.0, 0.5, 101) {
                let r = eps * f.zeta_d2(t) - f.m * f.zeta(t);
                assert!(r.abs() <= 1e-9 * (f.big_a.abs() + (f.m * f.zeta(t)).abs()));
                let r = eps * f.zeta_hat_d2(t) - f.m * f.zeta_hat(t);
                assert!(r.abs() <= 1e-9 * (f.big_b + (f.m * f.zeta_hat(t)).abs()));
            }
        }
    }
}
