//! Feasibility of `eps*y'' + k*y = y^2 + u(t)` and its admissible `lambda` range.
//!
//! `iota(t) = sqrt(k^2 - 4u(t))` is the discriminant root of `y^2 - k*y + u`;
//! the reduced solution is `eta = (k + iota)/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::numeric::{bisect, linspace};
use crate::problem::{ProblemDoc, VALIDATION_POINTS};

/// Resolution of the `lambda` interval endpoints.
pub const LAMBDA_TOL: f64 = 1e-6;
const LAMBDA_SCAN: usize = 4000;

#[derive(Debug, Clone)]
pub struct QuadraticInstance {
    pub k: f64,
    pub u: Expr,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub lambda: f64,
    /// `c1..c5`
    pub holds: [bool; 5],
    /// Worst `rhs - lhs` per condition; strictly positive means satisfied.
    pub margins: [f64; 5],
    pub pass: bool,
}

// what the conditions need from `u`
struct Samples {
    u_min: f64,
    u_max: f64,
    iota: [f64; 3],
    du_left: f64,
    du_right: f64,
}

impl Samples {
    fn report(&self, k: f64, lambda: f64) -> ConditionReport {
        let lower = 0.25 * (k * k - (lambda - k).powi(2));
        let upper = 0.25 * (k * k - (lambda + k).powi(2));
        let [ia, ig, ib] = self.iota;
        let margins = [
            (self.u_min - lower).min(upper - self.u_max),
            0.125 * (lambda - k - ia) * (ia + ig) - self.du_left,
            0.125 * (lambda - k - ib) * (ib + ig) - self.du_right,
            0.125 * (lambda + k + ia) * (ia + ig) - self.du_left,
            0.125 * (lambda + k + ib) * (ib + ig) - self.du_right,
        ];
        let holds = margins.map(|m| m > 0.0);
        ConditionReport { lambda, holds, margins, pass: holds.iter().all(|&h| h) }
    }
}

impl QuadraticInstance {
    pub fn new(k: f64, u: Expr, (a, gamma, b): (f64, f64, f64)) -> Result<Self> {
        if !(k < 0.0 && k.is_finite()) {
            return Err(Error::Invalid(format!("need k < 0, got {k}")));
        }
        if !(a < gamma && gamma < b) {
            return Err(Error::Invalid(format!("need a < gamma < b, got {a}, {gamma}, {b}")));
        }
        Ok(QuadraticInstance { k, u, a, gamma, b })
    }

    /// Reads `k`, `u` and the geometry from a problem document whose `f` must
    /// be `y^2 + u` (checked by sampling).
    pub fn from_doc(doc: &ProblemDoc) -> Result<Self> {
        let f = parse(&doc.f, &["u", "y"]).map_err(Error::expr("f"))?;
        for u in [-1.5, 0.0, 0.7] {
            for y in [-2.0, -0.3, 0.0, 1.1] {
                let v = f.eval(&[("u", u), ("y", y)]).map_err(Error::expr("f"))?;
                if (v - (y * y + u)).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::Invalid(format!("`f` must be y^2 + u, got `{}`", doc.f)));
                }
            }
        }
        let u = parse(&doc.u, &["t"]).map_err(Error::expr("u"))?;
        Self::new(doc.k, u, (doc.a, doc.gamma, doc.b))
    }

    pub fn u_at(&self, t: f64) -> Result<f64> {
        self.u.eval1("t", t).map_err(Error::expr("u"))
    }

    pub fn iota(&self, t: f64) -> Result<f64> {
        let disc = self.k * self.k - 4.0 * self.u_at(t)?;
        if disc < 0.0 {
            return Err(Error::NoReducedSolution { t });
        }
        Ok(disc.sqrt())
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        Ok(0.5 * (self.k + self.iota(t)?))
    }

    fn samples(&self) -> Result<Samples> {
        let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in linspace(self.a, self.b, VALIDATION_POINTS) {
            let u = self.u_at(t)?;
            u_min = u_min.min(u);
            u_max = u_max.max(u);
        }
        Ok(Samples {
            u_min,
            u_max,
            iota: [self.iota(self.a)?, self.iota(self.gamma)?, self.iota(self.b)?],
            du_left: (self.u_at(self.gamma)? - self.u_at(self.a)?).abs(),
            du_right: (self.u_at(self.b)? - self.u_at(self.gamma)?).abs(),
        })
    }

    pub fn check_conditions(&self, lambda: f64) -> Result<ConditionReport> {
        Ok(self.samples()?.report(self.k, lambda))
    }

    /// Longest run of admissible `lambda` in `(0, -k)`, endpoints refined by
    /// bisection. An end that reaches the scan boundary is reported as the
    /// boundary itself.
    pub fn lambda_interval(&self) -> Result<Option<(f64, f64)>> {
        for t in linspace(self.a, self.b, VALIDATION_POINTS) {
            if self.iota(t).is_err() {
                return Ok(None);
            }
        }
        let samples = self.samples()?;
        let passes = |l: f64| samples.report(self.k, l).pass;
        let top = -self.k;
        let grid: Vec<f64> = (1..LAMBDA_SCAN).map(|i| top * i as f64 / LAMBDA_SCAN as f64).collect();
        let ok: Vec<bool> = grid.iter().map(|&l| passes(l)).collect();

        let mut best: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < ok.len() {
            if ok[i] {
                let start = i;
                while i + 1 < ok.len() && ok[i + 1] {
                    i += 1;
                }
                if best.is_none_or(|(s, e)| i - start > e - s) {
                    best = Some((start, i));
                }
            }
            i += 1;
        }
        let Some((s, e)) = best else { return Ok(None) };
        let indicator = |l: f64| if passes(l) { 1.0 } else { -1.0 };
        let lo = if s == 0 {
            0.0
        } else {
            bisect(indicator, grid[s - 1], grid[s], LAMBDA_TOL).expect("sign change by construction")
        };
        let hi = if e == ok.len() - 1 {
            top
        } else {
            bisect(indicator, grid[e], grid[e + 1], LAMBDA_TOL).expect("sign change by construction")
        };
        Ok(Some((lo, hi)))
    }
}
