//! Open-loop input synthesis for the semilinear plant
//!
//! ```text
//! eps*y'' = -k*y + f(y) + u(t),    v = g(y)
//! ```
//!
//! For a desired output `v0(t)` the reduced state is `eta0 = g^{-1}(v0)` and the
//! input `u0 = k*eta0 - f(eta0)`; the output error then obeys
//! `|g(y) - v0| <= mu * (eps/m) * max|eta0''|` in the interior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr};
use crate::numeric::{linspace, newton_bracketed};
use crate::problem::{FeasibilityTube, Problem, A2_Y_POINTS, VALIDATION_POINTS};

/// Half-width of the range on which `|f'| <= lambda` and monotonicity of `g`
/// are sampled; also the bracket for numeric inversion of `g`.
pub const SAMPLE_RANGE: f64 = 50.0;
const SAMPLE_POINTS: usize = 20_001;
const INVERSE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantDoc {
    pub k: f64,
    pub f: String,
    #[serde(default = "identity")]
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_inv: Option<String>,
    pub lambda: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn identity() -> String {
    "y".into()
}

#[derive(Debug, Clone)]
pub struct SemilinearPlant {
    pub k: f64,
    /// `f(y)`
    pub f: Expr,
    /// output map `g(y)`
    pub g: Expr,
    /// `g^{-1}(v)`, when known in closed form
    pub g_inv: Option<Expr>,
    pub lambda: f64,
    /// Largest sampled `|f'(y)|` on `[-SAMPLE_RANGE, SAMPLE_RANGE]`.
    pub max_abs_fprime: f64,
    pub g_increasing: bool,
    g_d1: Expr,
    g_d2: Expr,
}

impl SemilinearPlant {
    pub fn new(k: f64, f: Expr, g: Expr, g_inv: Option<Expr>, lambda: f64) -> Result<Self> {
        if !(k < 0.0 && k.is_finite()) {
            return Err(Error::Invalid(format!("need k < 0, got {k}")));
        }
        if !(lambda > 0.0 && lambda < -k) {
            return Err(Error::Invalid(format!("need 0 < lambda < -k = {}, got {lambda}", -k)));
        }
        let f_d1 = f.diff("y");
        let g_d1 = g.diff("y");
        let g_d2 = g_d1.diff("y");
        let ys = linspace(-SAMPLE_RANGE, SAMPLE_RANGE, SAMPLE_POINTS);
        let mut max_fp = 0.0f64;
        for &y in &ys {
            max_fp = max_fp.max(f_d1.eval1("y", y).map_err(Error::expr("f"))?.abs());
        }
        if max_fp > lambda {
            return Err(Error::Invalid(format!("|f'| reaches {max_fp} > lambda = {lambda}")));
        }
        let gs = ys.iter().map(|&y| g.eval1("y", y)).collect::<Result<Vec<_>, _>>().map_err(Error::expr("g"))?;
        let increasing = gs.windows(2).all(|w| w[1] > w[0]);
        if !increasing && !gs.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Invalid("`g` is not strictly monotone".into()));
        }
        Ok(SemilinearPlant { k, f, g, g_inv, lambda, max_abs_fprime: max_fp, g_increasing: increasing, g_d1, g_d2 })
    }

    pub fn from_doc(doc: &PlantDoc) -> Result<Self> {
        let f = parse(&doc.f, &["y"]).map_err(Error::expr("f"))?;
        let g = parse(&doc.g, &["y"]).map_err(Error::expr("g"))?;
        let g_inv = match &doc.g_inv {
            Some(src) => Some(parse(src, &["v"]).map_err(Error::expr("g_inv"))?),
            None => None,
        };
        Self::new(doc.k, f, g, g_inv, doc.lambda)
    }

    pub fn m(&self) -> f64 {
        -self.k - self.lambda
    }

    fn g_at(&self, y: f64) -> Result<f64> {
        self.g.eval1("y", y).map_err(Error::expr("g"))
    }

    pub fn g_inverse(&self, v: f64) -> Result<f64> {
        if let Some(inv) = &self.g_inv {
            return inv.eval1("v", v).map_err(Error::expr("g_inv"));
        }
        let (lo, hi) = (-SAMPLE_RANGE, SAMPLE_RANGE);
        let (glo, ghi) = (self.g_at(lo)?, self.g_at(hi)?);
        if !(v >= glo.min(ghi) && v <= glo.max(ghi)) {
            return Err(Error::Invalid(format!("output {v} outside g([{lo}, {hi}])")));
        }
        let f = |y: f64| self.g.eval1("y", y).map(|g| g - v).unwrap_or(f64::NAN);
        let df = |y: f64| self.g_d1.eval1("y", y).unwrap_or(f64::NAN);
        newton_bracketed(f, df, lo, hi, INVERSE_TOL)
            .ok_or_else(|| Error::Numeric(format!("could not invert g at {v}")))
    }

    pub fn synthesize_input(&self, v0: &Expr) -> Result<Synthesis<'_>> {
        let v0_d1 = v0.diff("t");
        let v0_d2 = v0_d1.diff("t");
        let eta = match &self.g_inv {
            Some(inv) => Some(inv.subst("v", v0)),
            None if is_identity(&self.g) => Some(v0.clone()),
            None => None,
        };
        let eta_d2 = eta.as_ref().map(|e| e.diff("t").diff("t"));
        Ok(Synthesis { plant: self, v0: v0.clone(), v0_d1, v0_d2, eta, eta_d2 })
    }
}

fn is_identity(g: &Expr) -> bool {
    matches!(g, Expr::Var(name) if &**name == "y")
}

/// `eta0 = g^{-1}(v0)` and `u0 = k*eta0 - f(eta0)` for one desired output.
#[derive(Debug, Clone)]
pub struct Synthesis<'p> {
    pub plant: &'p SemilinearPlant,
    pub v0: Expr,
    v0_d1: Expr,
    v0_d2: Expr,
    eta: Option<Expr>,
    eta_d2: Option<Expr>,
}

impl Synthesis<'_> {
    pub fn v0_at(&self, t: f64) -> Result<f64> {
        self.v0.eval1("t", t).map_err(Error::expr("v0"))
    }

    pub fn eta0(&self, t: f64) -> Result<f64> {
        match &self.eta {
            Some(e) => e.eval1("t", t).map_err(Error::expr("eta0")),
            None => self.plant.g_inverse(self.v0_at(t)?),
        }
    }

    pub fn u0(&self, t: f64) -> Result<f64> {
        let eta = self.eta0(t)?;
        Ok(self.plant.k * eta - self.plant.f.eval1("y", eta).map_err(Error::expr("f"))?)
    }

    /// `eta0''`: symbolic when `eta0` is an expression, otherwise from
    /// `eta'' = (v'' - g''(eta) eta'^2) / g'(eta)` with `eta' = v'/g'(eta)`.
    pub fn eta0_dd(&self, t: f64) -> Result<f64> {
        if let Some(d2) = &self.eta_d2 {
            return d2.eval1("t", t).map_err(Error::expr("eta0"));
        }
        let eta = self.eta0(t)?;
        let g1 = self.plant.g_d1.eval1("y", eta).map_err(Error::expr("g"))?;
        let g2 = self.plant.g_d2.eval1("y", eta).map_err(Error::expr("g"))?;
        let v1 = self.v0_d1.eval1("t", t).map_err(Error::expr("v0"))?;
        let v2 = self.v0_d2.eval1("t", t).map_err(Error::expr("v0"))?;
        let e1 = v1 / g1;
        Ok((v2 - g2 * e1 * e1) / g1)
    }

    /// `u0` as an expression in `t`, available when `eta0` is.
    pub fn u0_expr(&self) -> Option<Expr> {
        let eta = self.eta.as_ref()?;
        let k_eta = Expr::Binary(BinOp::Mul, Box::new(Expr::Const(self.plant.k)), Box::new(eta.clone()));
        Some(Expr::Binary(BinOp::Sub, Box::new(k_eta), Box::new(self.plant.f.subst("y", eta))))
    }

    /// The three-point problem driven by `u0`: `f(u, y) = f(y) + u`, reduced
    /// solution `eta0`. Needs `eta0` in closed form.
    pub fn closed_loop_problem(&self, geometry: (f64, f64, f64), delta: f64, eps: f64) -> Result<Problem> {
        let (Some(eta), Some(u)) = (self.eta.clone(), self.u0_expr()) else {
            return Err(Error::Invalid("closed-loop solve needs `g` = y or an explicit `g_inv`".into()));
        };
        let f = Expr::Binary(BinOp::Add, Box::new(self.plant.f.clone()), Box::new(Expr::var("u")));
        Problem::new(
            self.plant.k,
            geometry,
            f,
            u,
            self.plant.g.clone(),
            Some(eta),
            None,
            self.plant.lambda,
            delta,
            eps,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub mu: f64,
    pub m: f64,
    pub max_abs_eta0_dd: f64,
    pub epsilon: f64,
    pub bound: f64,
}

/// `mu * (eps/m) * max|eta0''|`, with `mu = max|g'|` over the tube around `eta0`.
pub fn output_error_bound(syn: &Synthesis<'_>, (a, gamma, b): (f64, f64, f64), delta: f64, eps: f64) -> Result<BoundReport> {
    let plant = syn.plant;
    let ends = (syn.eta0(a)?, syn.eta0(gamma)?, syn.eta0(b)?);
    let tube = FeasibilityTube::from_endpoints(delta, (a, gamma, b), ends);
    let (mut mu, mut dd) = (0.0f64, 0.0f64);
    for t in linspace(a, b, VALIDATION_POINTS) {
        dd = dd.max(syn.eta0_dd(t)?.abs());
        let eta = syn.eta0(t)?;
        let d = tube.width(t);
        for y in linspace(eta - d, eta + d, A2_Y_POINTS) {
            mu = mu.max(plant.g_d1.eval1("y", y).map_err(Error::expr("g"))?.abs());
        }
    }
    let m = plant.m();
    Ok(BoundReport { mu, m, max_abs_eta0_dd: dd, epsilon: eps, bound: mu * (eps / m) * dd })
}
