//! Turning points of `eps*y'' + f~(y)/2 = 0`, `y(0) = y0`, `y'(0) = y1 > 0`.
//!
//! Along trajectories `eps*y'^2 + F~(y) = c1` with `F~' = f~`, so the time to
//! reach the maximum is
//!
//! ```text
//! t* = 2 sqrt(eps) * int_0^{sqrt(eps) y1} dz / f~(F~^{-1}(c1 - z^2))
//! ```
//!
//! For `f~ = e^y` (with `F~ = e^y`) everything is explicit:
//! `y = ln c1 - 2 ln cosh(sqrt(c1/eps) (t - t*)/2)` and
//! `t* = sqrt(eps/c1) ln((sqrt(c1) + sqrt(eps) y1) / (sqrt(c1) - sqrt(eps) y1))`.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, UnaryOp};
use crate::numeric::{bisect, integrate, newton_bracketed, rk4_step};

/// Relative tolerance of the time-map quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// RK4 steps per `min(sqrt(eps), gamma)`.
pub const STEPS_PER_SCALE: f64 = 200.0;
const Y1_SCAN_START: f64 = 1e-3;
const Y1_SCAN_FACTOR: f64 = 1.5;
const Y1_SCAN_MAX: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Exp,
    Const(f64),
    General,
}

fn shape_of(f: &Expr) -> Shape {
    if let Some(c) = f.as_const() {
        return Shape::Const(c);
    }
    match f {
        Expr::Unary(UnaryOp::Exp, arg) if matches!(&**arg, Expr::Var(v) if &**v == "y") => Shape::Exp,
        _ => Shape::General,
    }
}

#[derive(Debug, Clone)]
pub struct AutonomousProblem {
    /// `f~(y)`, positive on the reachable range
    pub f_tilde: Expr,
    pub y0: f64,
    pub y1: f64,
    pub gamma: f64,
    pub eps: f64,
    shape: Shape,
}

/// `F~` and its inverse, anchored at `F~ = e^y` for the exponential and at
/// `F~(y0) = 0` otherwise.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    pub y0: f64,
    /// `eps*y1^2 + F~(y0)`
    pub c1: f64,
    f: Expr,
    shape: Shape,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
}

impl AutonomousProblem {
    pub fn new(f_tilde: Expr, y0: f64, y1: f64, gamma: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && gamma > 0.0 && y0.is_finite() && y1.is_finite()) {
            return Err(Error::Invalid("need eps > 0, gamma > 0 and finite initial data".into()));
        }
        if y1 <= 0.0 {
            return Err(Error::Invalid(format!("initial slope must be positive, got {y1}")));
        }
        let p = AutonomousProblem { shape: shape_of(&f_tilde), f_tilde, y0, y1, gamma, eps };
        if !(p.f_at(y0)? > 0.0) {
            return Err(Error::Invalid(format!("f~({y0}) must be positive")));
        }
        Ok(p)
    }

    pub fn with_y1(&self, y1: f64) -> Result<Self> {
        Self::new(self.f_tilde.clone(), self.y0, y1, self.gamma, self.eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.f_tilde.clone(), self.y0, self.y1, self.gamma, eps)
    }

    pub fn is_exp(&self) -> bool {
        self.shape == Shape::Exp
    }

    pub fn f_at(&self, y: f64) -> Result<f64> {
        fast_eval(&self.f_tilde, self.shape, y)
    }

    pub fn energy(&self) -> Result<EnergyFunctional> {
        let mut e = EnergyFunctional { y0: self.y0, c1: 0.0, f: self.f_tilde.clone(), shape: self.shape };
        e.c1 = self.eps * self.y1 * self.y1 + e.f_tilde_anti(self.y0)?;
        Ok(e)
    }

    /// `eps*yp^2 + F~(y)`.
    pub fn first_integral(&self, energy: &EnergyFunctional, y: f64, yp: f64) -> Result<f64> {
        Ok(self.eps * yp * yp + energy.f_tilde_anti(y)?)
    }

    /// `t*` from the energy quadrature.
    pub fn turning_time(&self) -> Result<f64> {
        let e = self.energy()?;
        let top = self.eps.sqrt() * self.y1;
        let mut failure = None;
        let integrand = |z: f64| {
            let v = e.inverse(e.c1 - z * z).and_then(|y| self.f_at(y));
            match v {
                Ok(f) if f > 0.0 => 1.0 / f,
                Ok(_) => {
                    failure.get_or_insert(Error::Numeric("f~ is not positive along the trajectory".into()));
                    f64::NAN
                }
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        };
        let r = integrate(integrand, 0.0, top, QUAD_TOL, 0.0);
        if let Some(err) = failure {
            return Err(err);
        }
        Ok(2.0 * self.eps.sqrt() * r?)
    }

    /// Closed-form `t*` for `f~ = e^y`.
    pub fn exp_turning_time(&self) -> Option<f64> {
        if !self.is_exp() {
            return None;
        }
        let c1 = self.eps * self.y1 * self.y1 + self.y0.exp();
        let (r, q) = (c1.sqrt(), self.eps.sqrt() * self.y1);
        // ln((r+q)/(r-q)) = 2 atanh(q/r)
        Some((self.eps / c1).sqrt() * 2.0 * (q / r).atanh())
    }

    /// `(y, y', y'')` of the closed-form solution for `f~ = e^y`.
    pub fn exp_exact_solution(&self, t: f64) -> Result<(f64, f64, f64)> {
        let t_star = self.exp_turning_time().ok_or_else(|| Error::Invalid("closed form needs f~ = exp(y)".into()))?;
        let c1 = self.eps * self.y1 * self.y1 + self.y0.exp();
        let alpha = 0.5 * (c1 / self.eps).sqrt();
        let x = alpha * (t - t_star);
        let ax = x.abs();
        let ln_cosh = ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2;
        let sech = 1.0 / x.cosh();
        Ok((c1.ln() - 2.0 * ln_cosh, -2.0 * alpha * x.tanh(), -2.0 * alpha * alpha * sech * sech))
    }

    fn step_size(&self, span: f64) -> (f64, usize) {
        let target = self.eps.sqrt().min(self.gamma) / STEPS_PER_SCALE;
        let n = (span / target).ceil().max(1.0) as usize;
        (span / n as f64, n)
    }

    /// RK4 trajectory on `[0, t_end]`.
    pub fn trajectory(&self, t_end: f64) -> Result<Trajectory> {
        let f = |_t: f64, y: f64| self.f_at(y);
        integrate_ivp(&f, self.eps, self.y0, self.y1, t_end, self.step_size(t_end))
    }
}

fn fast_eval(f: &Expr, shape: Shape, y: f64) -> Result<f64> {
    match shape {
        Shape::Exp => Ok(y.exp()),
        Shape::Const(c) => Ok(c),
        Shape::General => f.eval1("y", y).map_err(Error::expr("f_tilde")),
    }
}

impl EnergyFunctional {
    /// `F~(y)`.
    pub fn f_tilde_anti(&self, y: f64) -> Result<f64> {
        match self.shape {
            Shape::Exp => Ok(y.exp()),
            Shape::Const(c) => Ok(c * (y - self.y0)),
            Shape::General => {
                let mut bad = None;
                let v = integrate(
                    |s| match self.f.eval1("y", s) {
                        Ok(v) => v,
                        Err(e) => {
                            bad.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    self.y0,
                    y,
                    1e-14,
                    1e-300,
                );
                if let Some(e) = bad {
                    return Err(Error::expr("f_tilde")(e));
                }
                v
            }
        }
    }

    /// `F~^{-1}(w)`.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        match self.shape {
            Shape::Exp if w > 0.0 => Ok(w.ln()),
            Shape::Exp => Err(Error::Numeric(format!("e^y = {w} has no solution"))),
            Shape::Const(c) => Ok(self.y0 + w / c),
            Shape::General => {
                let g = |y: f64| self.f_tilde_anti(y).map(|v| v - w).unwrap_or(f64::NAN);
                let (mut lo, mut hi, mut step) = (self.y0, self.y0, 1.0);
                for _ in 0..200 {
                    if g(lo) <= 0.0 && g(hi) >= 0.0 {
                        break;
                    }
                    if g(hi) < 0.0 {
                        lo = hi;
                        hi += step;
                    } else {
                        hi = lo;
                        lo -= step;
                    }
                    step *= 2.0;
                }
                let df = |y: f64| self.f.eval1("y", y).unwrap_or(f64::NAN);
                newton_bracketed(g, df, lo, hi, 1e-15)
                    .ok_or_else(|| Error::Numeric(format!("cannot invert F~ at {w}")))
            }
        }
    }
}

fn integrate_ivp(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    eps: f64,
    y0: f64,
    y1: f64,
    t_end: f64,
    (h, n): (f64, usize),
) -> Result<Trajectory> {
    let failure = RefCell::new(None);
    let acc = |t: f64, y: f64, _yp: f64| match f(t, y) {
        Ok(v) => -v / (2.0 * eps),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let mut tr = Trajectory { t: Vec::with_capacity(n + 1), y: Vec::with_capacity(n + 1), yp: Vec::with_capacity(n + 1) };
    let (mut y, mut yp) = (y0, y1);
    tr.t.push(0.0);
    tr.y.push(y);
    tr.yp.push(yp);
    for i in 0..n {
        let t = i as f64 * h;
        (y, yp) = rk4_step(&acc, t, y, yp, h);
        if !(y.is_finite() && yp.is_finite()) {
            break;
        }
        tr.t.push(if i + 1 == n { t_end } else { (i + 1) as f64 * h });
        tr.y.push(y);
        tr.yp.push(yp);
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if tr.t.len() != n + 1 {
        return Err(Error::Numeric("trajectory blew up".into()));
    }
    Ok(tr)
}

/// Result of shooting for `y(0) = y(gamma)`.
#[derive(Debug, Clone, Serialize)]
pub struct Shot {
    pub y1: f64,
    pub t_star: f64,
    /// `y(gamma) - y0` at the returned slope
    pub mismatch: f64,
}

// Shooting engine shared by the autonomous and the scanned problems.
struct Shooter<'a> {
    f: &'a (dyn Fn(f64, f64) -> Result<f64> + Sync),
    eps: f64,
    y0: f64,
    gamma: f64,
}

impl Shooter<'_> {
    fn grid(&self) -> (f64, usize) {
        let target = self.eps.sqrt().min(self.gamma) / STEPS_PER_SCALE;
        let n = (self.gamma / target).ceil().max(1.0) as usize;
        (self.gamma / n as f64, n)
    }

    fn trajectory(&self, y1: f64) -> Result<Trajectory> {
        integrate_ivp(self.f, self.eps, self.y0, y1, self.gamma, self.grid())
    }

    fn mismatch(&self, y1: f64) -> f64 {
        match self.trajectory(y1) {
            Ok(tr) => tr.y[tr.y.len() - 1] - self.y0,
            Err(_) => f64::NAN,
        }
    }

    fn shoot(&self) -> Result<Shot> {
        let mut prev = (Y1_SCAN_START, self.mismatch(Y1_SCAN_START));
        let mut bracket = None;
        for _ in 0..Y1_SCAN_MAX {
            let y1 = prev.0 * Y1_SCAN_FACTOR;
            let m = self.mismatch(y1);
            if m.is_nan() {
                break;
            }
            if prev.1 < 0.0 && m >= 0.0 {
                bracket = Some((prev.0, y1));
                break;
            }
            prev = (y1, m);
        }
        let (lo, hi) = bracket.ok_or_else(|| {
            Error::Numeric(format!("no slope y1 gives y(gamma) = y0 (eps = {}, y0 = {})", self.eps, self.y0))
        })?;
        let y1 = bisect(|s| self.mismatch(s), lo, hi, 1e-15 * hi).expect("bracketed");
        let tr = self.trajectory(y1)?;
        let t_star = self.turning_point(&tr)?;
        Ok(Shot { y1, t_star, mismatch: tr.y[tr.y.len() - 1] - self.y0 })
    }

    // first sign change of y', refined by Newton on the one-step RK4 map
    fn turning_point(&self, tr: &Trajectory) -> Result<f64> {
        let i = (0..tr.yp.len() - 1)
            .find(|&i| tr.yp[i] > 0.0 && tr.yp[i + 1] <= 0.0)
            .ok_or_else(|| Error::Numeric("trajectory has no turning point".into()))?;
        let (t0, y0, p0) = (tr.t[i], tr.y[i], tr.yp[i]);
        let h = tr.t[i + 1] - t0;
        let acc = |t: f64, y: f64, _yp: f64| -(self.f)(t, y).unwrap_or(f64::NAN) / (2.0 * self.eps);
        let slope_at = |tau: f64| rk4_step(&acc, t0, y0, p0, tau);
        let g = |tau: f64| slope_at(tau).1;
        let dg = |tau: f64| {
            let (y, yp) = slope_at(tau);
            acc(t0 + tau, y, yp)
        };
        let tau = newton_bracketed(g, dg, 0.0, h, 1e-15).ok_or_else(|| Error::Numeric("turning point refinement failed".into()))?;
        Ok(t0 + tau)
    }
}

/// Finds `y1 > 0` with `y(0) = y(gamma)` (lowest such slope) and the turning time.
pub fn shoot_bc(template: &AutonomousProblem, gamma: f64) -> Result<Shot> {
    let f = |_t: f64, y: f64| template.f_at(y);
    Shooter { f: &f, eps: template.eps, y0: template.y0, gamma }.shoot()
}

/// Shot trajectory on `[0, gamma]` for the autonomous problem.
pub fn shot_trajectory(template: &AutonomousProblem, gamma: f64, y1: f64) -> Result<Trajectory> {
    let f = |_t: f64, y: f64| template.f_at(y);
    Shooter { f: &f, eps: template.eps, y0: template.y0, gamma }.trajectory(y1)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub control: String,
    pub eps: f64,
    pub y1: Option<f64>,
    pub t_star: Option<f64>,
    /// `t* - gamma/2`
    pub drift: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub f: String,
    pub gamma: f64,
    pub y0: f64,
    pub rows: Vec<ScanRow>,
}

/// Shoots `eps*y'' + f~(u(t), y)/2 = 0` for every control and `eps`; failures
/// are recorded per row.
pub fn turning_scan(f: &Expr, controls: &[Expr], eps_ladder: &[f64], y0: f64, gamma: f64) -> ScanReport {
    let jobs: Vec<(usize, f64)> =
        (0..controls.len()).flat_map(|i| eps_ladder.iter().map(move |&e| (i, e))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, eps)| {
            let control = controls[i].to_string();
            let ft = f.subst("u", &controls[i]);
            let eval = |t: f64, y: f64| ft.eval(&[("t", t), ("y", y)]).map_err(Error::expr("f_tilde"));
            match (Shooter { f: &eval, eps, y0, gamma }).shoot() {
                Ok(s) => ScanRow {
                    control,
                    eps,
                    y1: Some(s.y1),
                    t_star: Some(s.t_star),
                    drift: Some(s.t_star - 0.5 * gamma),
                    error: None,
                },
                Err(e) => ScanRow { control, eps, y1: None, t_star: None, drift: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    ScanReport { f: f.to_string(), gamma, y0, rows }
}

/// On-disk turning-point description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurningDoc {
    /// `f~` in `y`, or in `(u, y)` when `controls` are given
    pub f_tilde: String,
    pub y0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y1: Option<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Vec<String>>,
}

impl TurningDoc {
    pub fn autonomous(&self, eps: f64) -> Result<AutonomousProblem> {
        let f = parse(&self.f_tilde, &["y"]).map_err(Error::expr("f_tilde"))?;
        AutonomousProblem::new(f, self.y0, self.y1.unwrap_or(1.0), self.gamma, eps)
    }

    pub fn scan_inputs(&self) -> Result<Option<(Expr, Vec<Expr>)>> {
        let Some(controls) = &self.controls else { return Ok(None) };
        let f = parse(&self.f_tilde, &["u", "y"]).map_err(Error::expr("f_tilde"))?;
        let us = controls
            .iter()
            .map(|c| parse(c, &["t"]).map_err(Error::expr("controls")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((f, us)))
    }
}
