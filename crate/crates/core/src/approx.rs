//! The approximate realization `y~` and its error envelopes.

use serde::Serialize;

use crate::error::Result;
use crate::layers::LayerFamily;
use crate::problem::ReducedPath;

/// Sign pattern of `(eta(b) - eta(gamma), eta(gamma) - eta(a))`; zero counts
/// as non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "u8")]
pub enum SignCase {
    /// both jumps `<= 0`
    BothNonPositive = 1,
    /// both jumps `> 0`
    BothPositive = 2,
    /// right jump `<= 0`, left jump `> 0`
    RightNonPositive = 3,
    /// right jump `> 0`, left jump `<= 0`
    RightPositive = 4,
}

impl SignCase {
    pub fn classify(right_jump: f64, left_jump: f64) -> Self {
        match (right_jump <= 0.0, left_jump <= 0.0) {
            (true, true) => SignCase::BothNonPositive,
            (false, false) => SignCase::BothPositive,
            (true, false) => SignCase::RightNonPositive,
            (false, true) => SignCase::RightPositive,
        }
    }

    pub fn id(self) -> u8 {
        self as u8
    }
}

impl From<SignCase> for u8 {
    fn from(c: SignCase) -> u8 {
        c.id()
    }
}

#[derive(Debug, Clone)]
pub struct Approximation {
    pub layers: LayerFamily,
    /// `max|eta''| / m`
    pub c: f64,
    /// `+1` when `eta(b) - eta(gamma) <= 0` (layers added, `+C eps`), `-1` otherwise.
    pub branch: f64,
    pub case: SignCase,
    path: ReducedPath,
}

impl Approximation {
    pub fn new(path: &ReducedPath, eps: f64) -> Result<Self> {
        let p = path.problem();
        let (ea, eg, eb) = (path.eta(p.a)?, path.eta(p.gamma)?, path.eta(p.b)?);
        let layers = LayerFamily::from_path(path, eps)?;
        let right = eb - eg;
        Ok(Approximation {
            layers,
            c: path.c_constant(),
            branch: if right <= 0.0 { 1.0 } else { -1.0 },
            case: SignCase::classify(right, eg - ea),
            path: path.clone(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.layers.eps
    }

    pub fn path(&self) -> &ReducedPath {
        &self.path
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        self.path.eta(t)
    }

    pub fn y_tilde(&self, t: f64) -> Result<f64> {
        let l = &self.layers;
        Ok(self.path.eta(t)? + l.zeta(t) + self.branch * (l.zeta_hat(t) + self.c * l.eps))
    }

    /// Analytic derivative of [`Self::y_tilde`].
    pub fn w_tilde(&self, t: f64) -> Result<f64> {
        let l = &self.layers;
        Ok(self.path.d1(t)? + l.zeta_d1(t) + self.branch * l.zeta_hat_d1(t))
    }

    /// Bounds `(lo, hi)` on `y~(t) - y(t)`.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        let l = &self.layers;
        let v = l.v_corr(t);
        let side = 2.0 * l.zeta_hat(t) + 2.0 * self.c * l.eps;
        match self.case {
            SignCase::BothNonPositive => (-v, side),
            SignCase::BothPositive => (-side, v),
            SignCase::RightNonPositive => (0.0, v + side),
            SignCase::RightPositive => (-(v + side), 0.0),
        }
    }
}
