//! Three-point problems `eps*y'' + k*y = f(u(t), y)`, `y(a) = y(gamma) = y(b)`,
//! their reduced (eps = 0) solution and the assumption checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::numeric::linspace;

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Grid used for max |eta''|, residual validation and the A2 scan.
pub const VALIDATION_POINTS: usize = 2001;
/// `y` samples across the tube at each `t` when checking `|df/dy| <= lambda`.
pub const A2_Y_POINTS: usize = 201;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// On-disk problem description; field names follow the JSON problem schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub k: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    pub f: String,
    pub u: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_seed: Option<f64>,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub k: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    /// Nonlinearity in `(u, y)`.
    pub f: Expr,
    /// Control input in `t`.
    pub u: Expr,
    /// Output map in `y`.
    pub g: Expr,
    pub eta: Option<Expr>,
    pub eta_seed: Option<f64>,
    /// Lipschitz bound on `|df/dy|` over the tube.
    pub lambda: f64,
    pub delta: f64,
    pub epsilon: f64,
    // f with u(t) substituted, as an expression in (t, y), and its partials
    f_ty: Expr,
    f_ty_t: Expr,
    f_ty_y: Expr,
}

/// Parses and validates a problem document.
pub fn load_problem(doc: &ProblemDoc) -> Result<Problem> {
    let f = parse(&doc.f, &["u", "y"]).map_err(Error::expr("f"))?;
    let u = parse(&doc.u, &["t"]).map_err(Error::expr("u"))?;
    let g = match &doc.g {
        Some(src) => parse(src, &["y"]).map_err(Error::expr("g"))?,
        None => Expr::var("y"),
    };
    let eta = match &doc.eta {
        Some(src) => Some(parse(src, &["t"]).map_err(Error::expr("eta"))?),
        None => None,
    };
    Problem::new(
        doc.k,
        (doc.a, doc.gamma, doc.b),
        f,
        u,
        g,
        eta,
        doc.eta_seed,
        doc.lambda,
        doc.delta.unwrap_or(DEFAULT_DELTA),
        doc.epsilon.unwrap_or(DEFAULT_EPSILON),
    )
}

impl Problem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: f64,
        (a, gamma, b): (f64, f64, f64),
        f: Expr,
        u: Expr,
        g: Expr,
        eta: Option<Expr>,
        eta_seed: Option<f64>,
        lambda: f64,
        delta: f64,
        epsilon: f64,
    ) -> Result<Problem> {
        let all = [k, a, gamma, b, lambda, delta, epsilon];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("parameters must be finite".into()));
        }
        if !(a < gamma && gamma < b) {
            return Err(Error::Invalid(format!("need a < gamma < b, got {a}, {gamma}, {b}")));
        }
        if k >= 0.0 {
            return Err(Error::Invalid(format!("need k < 0, got {k}")));
        }
        if !(lambda > 0.0 && lambda < -k) {
            return Err(Error::Invalid(format!("need 0 < lambda < -k = {}, got {lambda}", -k)));
        }
        if delta <= 0.0 {
            return Err(Error::Invalid(format!("need delta > 0, got {delta}")));
        }
        if epsilon <= 0.0 {
            return Err(Error::Invalid(format!("need epsilon > 0, got {epsilon}")));
        }
        if eta.is_none() && eta_seed.is_none() {
            return Err(Error::Invalid("either `eta` or `eta_seed` must be given".into()));
        }
        let f_ty = f.subst("u", &u);
        let f_ty_t = f_ty.diff("t");
        let f_ty_y = f_ty.diff("y");
        Ok(Problem {
            k,
            a,
            gamma,
            b,
            f,
            u,
            g,
            eta,
            eta_seed,
            lambda,
            delta,
            epsilon,
            f_ty,
            f_ty_t,
            f_ty_y,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Problem> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("need epsilon > 0, got {epsilon}")));
        }
        Ok(Problem { epsilon, ..self.clone() })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Problem> {
        if !(lambda > 0.0 && lambda < -self.k) {
            return Err(Error::Invalid(format!("need 0 < lambda < -k = {}, got {lambda}", -self.k)));
        }
        Ok(Problem { lambda, ..self.clone() })
    }

    pub fn with_delta(&self, delta: f64) -> Result<Problem> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Invalid(format!("need delta > 0, got {delta}")));
        }
        Ok(Problem { delta, ..self.clone() })
    }

    /// `m = -k - lambda`, positive for every validated problem.
    pub fn m(&self) -> f64 {
        -self.k - self.lambda
    }

    pub fn geometry(&self) -> (f64, f64, f64) {
        (self.a, self.gamma, self.b)
    }

    pub fn u_at(&self, t: f64) -> Result<f64> {
        self.u.eval1("t", t).map_err(Error::expr("u"))
    }

    /// `f(u(t), y)`.
    pub fn f_at(&self, t: f64, y: f64) -> Result<f64> {
        self.f_ty.eval(&[("t", t), ("y", y)]).map_err(Error::expr("f"))
    }

    /// `df/dy` at `(u(t), y)`.
    pub fn fy_at(&self, t: f64, y: f64) -> Result<f64> {
        self.f_ty_y.eval(&[("t", t), ("y", y)]).map_err(Error::expr("f"))
    }

    /// `k*y - f(u(t), y)`, zero on the reduced solution.
    pub fn reduced_residual(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.k * y - self.f_at(t, y)?)
    }

    fn newton_reduced(&self, t: f64, seed: f64) -> Result<f64> {
        let mut y = seed;
        for _ in 0..NEWTON_MAX_ITER {
            let r = self.reduced_residual(t, y)?;
            let dr = self.k - self.fy_at(t, y)?;
            if dr == 0.0 || !dr.is_finite() {
                break;
            }
            let step = r / dr;
            y -= step;
            if !y.is_finite() {
                break;
            }
            if step.abs() <= NEWTON_TOL * (1.0 + y.abs()) {
                return Ok(y);
            }
        }
        Err(Error::NoReducedSolution { t })
    }
}

/// Reduced solution at `t`: the `eta` expression when present, otherwise the
/// Newton root continued from `eta_seed` at `t = a`.
pub fn resolve_eta(p: &Problem, t: f64) -> Result<f64> {
    if !(t >= p.a && t <= p.b) {
        return Err(Error::Invalid(format!("t = {t} outside [{}, {}]", p.a, p.b)));
    }
    if let Some(eta) = &p.eta {
        return eta.eval1("t", t).map_err(Error::expr("eta"));
    }
    let seed = p.eta_seed.expect("validated problem has eta or eta_seed");
    let steps = (((t - p.a) / (p.b - p.a)) * (VALIDATION_POINTS - 1) as f64).ceil() as usize;
    let mut y = p.newton_reduced(p.a, seed)?;
    for i in 1..=steps {
        let ti = p.a + (t - p.a) * i as f64 / steps as f64;
        y = p.newton_reduced(ti, y)?;
    }
    Ok(y)
}

#[derive(Debug, Clone)]
enum PathKind {
    Symbolic { eta: Expr, d1: Expr, d2: Expr },
    /// Newton-resolved roots on the validation grid with implicit derivatives
    /// written as expressions in `(t, y)`.
    Implicit { roots: Vec<f64>, d1: Expr, d2: Expr },
}

/// The reduced solution `eta` with its first two derivatives.
#[derive(Debug, Clone)]
pub struct ReducedPath {
    kind: PathKind,
    problem: Problem,
    grid: Vec<f64>,
    pub max_abs_eta_dd: f64,
}

/// Builds the reduced path and validates its residual on the grid.
pub fn eta_derivatives(p: &Problem) -> Result<ReducedPath> {
    let grid = linspace(p.a, p.b, VALIDATION_POINTS);
    let kind = match &p.eta {
        Some(eta) => {
            let d1 = eta.diff("t");
            let d2 = d1.diff("t");
            PathKind::Symbolic { eta: eta.clone(), d1, d2 }
        }
        None => {
            let seed = p.eta_seed.expect("validated problem has eta or eta_seed");
            let mut roots = Vec::with_capacity(grid.len());
            let mut prev = seed;
            for &t in &grid {
                prev = p.newton_reduced(t, prev)?;
                roots.push(prev);
            }
            // eta' = f_t / (k - f_y) with f = f(u(t), y); eta'' = P_t + P_y * P
            let denom = Expr::Binary(
                crate::expr::BinOp::Sub,
                Box::new(Expr::Const(p.k)),
                Box::new(p.f_ty_y.clone()),
            );
            let d1 = Expr::Binary(crate::expr::BinOp::Div, Box::new(p.f_ty_t.clone()), Box::new(denom));
            let d2 = Expr::Binary(
                crate::expr::BinOp::Add,
                Box::new(d1.diff("t")),
                Box::new(Expr::Binary(
                    crate::expr::BinOp::Mul,
                    Box::new(d1.diff("y")),
                    Box::new(d1.clone()),
                )),
            );
            PathKind::Implicit { roots, d1, d2 }
        }
    };
    let mut path = ReducedPath { kind, problem: p.clone(), grid, max_abs_eta_dd: 0.0 };

    let mut max_dd = 0.0f64;
    for i in 0..path.grid.len() {
        let t = path.grid[i];
        let eta = path.eta_on_grid(i)?;
        if let PathKind::Implicit { .. } = path.kind {
            if p.k - p.fy_at(t, eta)? == 0.0 {
                return Err(Error::DegenerateLinearization { t });
            }
        }
        let r = p.reduced_residual(t, eta)?;
        if r.abs() > 1e-10 * (1.0 + eta.abs()) {
            return Err(Error::Invalid(format!(
                "eta does not solve k*y = f(u(t), y): residual {r:e} at t = {t}"
            )));
        }
        max_dd = max_dd.max(path.d2_at(i, t, eta)?.abs());
    }
    path.max_abs_eta_dd = max_dd;
    Ok(path)
}

impl ReducedPath {
    fn eta_on_grid(&self, i: usize) -> Result<f64> {
        match &self.kind {
            PathKind::Symbolic { eta, .. } => eta.eval1("t", self.grid[i]).map_err(Error::expr("eta")),
            PathKind::Implicit { roots, .. } => Ok(roots[i]),
        }
    }

    fn d2_at(&self, i: usize, t: f64, eta: f64) -> Result<f64> {
        match &self.kind {
            PathKind::Symbolic { d2, .. } => match d2.eval1("t", t) {
                Ok(v) if v.is_finite() => Ok(v),
                _ => self.d2_fallback(i),
            },
            PathKind::Implicit { d2, .. } => match d2.eval(&[("t", t), ("y", eta)]) {
                Ok(v) if v.is_finite() => Ok(v),
                _ => self.d2_fallback(i),
            },
        }
    }

    // central (one-sided at the ends) difference of eta' on the grid
    fn d2_fallback(&self, i: usize) -> Result<f64> {
        let n = self.grid.len();
        let (l, r) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let dl = self.d1(self.grid[l])?;
        let dr = self.d1(self.grid[r])?;
        Ok((dr - dl) / (self.grid[r] - self.grid[l]))
    }

    fn locate(&self, t: f64) -> usize {
        let h = (self.problem.b - self.problem.a) / (self.grid.len() - 1) as f64;
        (((t - self.problem.a) / h).round().max(0.0) as usize).min(self.grid.len() - 1)
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        match &self.kind {
            PathKind::Symbolic { eta, .. } => eta.eval1("t", t).map_err(Error::expr("eta")),
            PathKind::Implicit { roots, .. } => {
                let i = self.locate(t);
                if self.grid[i] == t {
                    return Ok(roots[i]);
                }
                let slope = self.d1_at(self.grid[i], roots[i])?;
                self.problem.newton_reduced(t, roots[i] + slope * (t - self.grid[i]))
            }
        }
    }

    fn d1_at(&self, t: f64, eta: f64) -> Result<f64> {
        match &self.kind {
            PathKind::Symbolic { d1, .. } => d1.eval1("t", t).map_err(Error::expr("eta")),
            PathKind::Implicit { d1, .. } => d1.eval(&[("t", t), ("y", eta)]).map_err(Error::expr("f")),
        }
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        let eta = self.eta(t)?;
        self.d1_at(t, eta)
    }

    pub fn d2(&self, t: f64) -> Result<f64> {
        let eta = self.eta(t)?;
        let i = self.locate(t);
        self.d2_at(i, t, eta)
    }

    /// `C = max|eta''| / m`.
    pub fn c_constant(&self) -> f64 {
        self.max_abs_eta_dd / self.problem.m()
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }
}

/// The neighbourhood `H(eta)` of half-width `d(t)`.
#[derive(Debug, Clone)]
pub struct FeasibilityTube {
    pub delta: f64,
    a: f64,
    b: f64,
    jump_left: f64,
    jump_right: f64,
}

impl FeasibilityTube {
    pub fn new(path: &ReducedPath, delta: f64) -> Result<Self> {
        let p = path.problem();
        let (ea, eg, eb) = (path.eta(p.a)?, path.eta(p.gamma)?, path.eta(p.b)?);
        Ok(Self::from_endpoints(delta, p.geometry(), (ea, eg, eb)))
    }

    /// Tube for a path with values `(eta(a), eta(gamma), eta(b))` at the three points.
    pub fn from_endpoints(delta: f64, (a, _gamma, b): (f64, f64, f64), (ea, eg, eb): (f64, f64, f64)) -> Self {
        FeasibilityTube { delta, a, b, jump_left: (eg - ea).abs(), jump_right: (eb - eg).abs() }
    }

    /// Width `d(t)`: widened by the endpoint jumps on `[a, a+delta/2]` and
    /// `[b-delta/2, b]`, equal to `delta` on `[a+delta, b-delta]`, linear in
    /// between. Overlapping ramps (large delta) add up.
    pub fn width(&self, t: f64) -> f64 {
        let ramp = |dist: f64| ((self.delta - dist) / (0.5 * self.delta)).clamp(0.0, 1.0);
        self.delta + self.jump_left * ramp(t - self.a) + self.jump_right * ramp(self.b - t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct A2Report {
    pub max_abs_fy: f64,
    pub at_t: f64,
    pub at_y: f64,
    pub lambda: f64,
    pub delta: f64,
    pub pass: bool,
}

/// Dense-grid check of `|df/dy| <= lambda` over the tube; sampling, not a proof.
pub fn verify_a2(path: &ReducedPath, delta: f64) -> Result<A2Report> {
    let p = path.problem();
    let tube = FeasibilityTube::new(path, delta)?;
    let mut worst = (0.0f64, p.a, 0.0);
    for t in linspace(p.a, p.b, VALIDATION_POINTS) {
        let eta = path.eta(t)?;
        let d = tube.width(t);
        for y in linspace(eta - d, eta + d, A2_Y_POINTS) {
            let fy = p.fy_at(t, y)?.abs();
            if fy > worst.0 || fy.is_nan() {
                worst = (fy, t, y);
            }
        }
    }
    Ok(A2Report {
        max_abs_fy: worst.0,
        at_t: worst.1,
        at_y: worst.2,
        lambda: p.lambda,
        delta,
        pass: worst.0 <= p.lambda,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn p1_doc() -> ProblemDoc {
        ProblemDoc {
            k: -2.0,
            a: 0.0,
            gamma: 0.25,
            b: 0.5,
            f: "y^2+u".into(),
            u: "t".into(),
            g: Some("y".into()),
            eta: Some("-1+sqrt(1-t)".into()),
            eta_seed: None,
            lambda: 1.6,
            delta: None,
            epsilon: None,
        }
    }

    pub(crate) fn p1() -> Problem {
        load_problem(&p1_doc()).unwrap()
    }

    fn p1_newton() -> Problem {
        let mut doc = p1_doc();
        doc.eta = None;
        doc.eta_seed = Some(0.0);
        load_problem(&doc).unwrap()
    }

    #[test]
    fn load_validates() {
        let p = p1();
        assert!(p.m() > 0.0);
        assert_eq!(p.delta, DEFAULT_DELTA);

        let mut doc = p1_doc();
        doc.gamma = 0.6;
        assert!(matches!(load_problem(&doc), Err(Error::Invalid(_))));

        let mut doc = p1_doc();
        doc.lambda = 2.5;
        assert!(matches!(load_problem(&doc), Err(Error::Invalid(_))));

        let mut doc = p1_doc();
        doc.k = 0.0;
        assert!(matches!(load_problem(&doc), Err(Error::Invalid(_))));

        let mut doc = p1_doc();
        doc.f = "y^2 + w".into();
        assert!(matches!(load_problem(&doc), Err(Error::Expr { field: "f", .. })));

        let mut doc = p1_doc();
        doc.eta = None;
        assert!(load_problem(&doc).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let src = r#"{"k":-2,"a":0,"gamma":0.25,"b":0.5,"f":"y^2+u","u":"t","g":"y",
                      "eta":"-1+sqrt(1-t)","lambda":1.6}"#;
        let doc: ProblemDoc = serde_json::from_str(src).unwrap();
        let p = load_problem(&doc).unwrap();
        assert_eq!(p.lambda, 1.6);
        let bad = r#"{"k":-2,"a":0,"gamma":0.25,"b":0.5,"f":"y","u":"t","lambda":1,"oops":1}"#;
        assert!(serde_json::from_str::<ProblemDoc>(bad).is_err());
    }

    #[test]
    fn resolve_eta_expression_and_newton() {
        let p = p1();
        assert_eq!(resolve_eta(&p, 0.0).unwrap(), 0.0);
        let want = 3f64.sqrt() / 2.0 - 1.0;
        assert!((resolve_eta(&p, 0.25).unwrap() - want).abs() < 1e-15);

        // y^2 + 2y + t = 0 has roots 0 and -2 at t = 0; continuation keeps 0
        let q = p1_newton();
        assert!(resolve_eta(&q, 0.0).unwrap().abs() < 1e-14);
        assert!((resolve_eta(&q, 0.25).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn resolve_eta_exponential_nonlinearity() {
        let doc = ProblemDoc {
            f: "exp(y)+u".into(),
            u: "1".into(),
            eta: None,
            eta_seed: Some(0.0),
            lambda: 1.0,
            ..p1_doc()
        };
        let p = load_problem(&doc).unwrap();
        // bisection oracle for -2y = e^y + 1
        let oracle = crate::numeric::bisect(|y| -2.0 * y - y.exp() - 1.0, -2.0, 0.0, 1e-15).unwrap();
        assert!((oracle + 0.738_835_031_131_607_8).abs() < 1e-12);
        assert!((resolve_eta(&p, 0.1).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn rootless_reduced_problem_is_reported() {
        // k*y - f = -(y^2 + 2) has no real root
        let doc = ProblemDoc {
            f: "y^2 - 2*y + 2 + u".into(),
            u: "0".into(),
            eta: None,
            eta_seed: Some(0.0),
            lambda: 1.0,
            ..p1_doc()
        };
        let p = load_problem(&doc).unwrap();
        assert!(matches!(resolve_eta(&p, 0.0), Err(Error::NoReducedSolution { .. })));
        assert!(matches!(eta_derivatives(&p), Err(Error::NoReducedSolution { .. })));
    }

    #[test]
    fn second_derivative_and_c_constant() {
        let path = eta_derivatives(&p1()).unwrap();
        let want = 0.25 * 0.5f64.powf(-1.5);
        assert!((path.d2(0.5).unwrap() + want).abs() < 1e-12);
        assert!((path.max_abs_eta_dd - want).abs() < 1e-12);
        // 1 / ((2 - lambda) sqrt 2) with lambda = 1.6
        assert!((path.c_constant() - 1.0 / (0.4 * 2f64.sqrt())).abs() < 1e-12);
        assert!((path.c_constant() - 1.767_766_952_966_368_8).abs() < 1e-12);
    }

    #[test]
    fn linear_eta_has_zero_curvature() {
        // k*eta = f(u, eta) with f = y + u and eta = 2 - 3t gives u = -3*(2 - 3t)
        let doc = ProblemDoc {
            f: "y + u".into(),
            u: "-3*(2 - 3*t)".into(),
            eta: Some("2-3*t".into()),
            lambda: 1.5,
            ..p1_doc()
        };
        let path = eta_derivatives(&load_problem(&doc).unwrap()).unwrap();
        assert_eq!(path.max_abs_eta_dd, 0.0);
        assert_eq!(path.c_constant(), 0.0);
    }

    #[test]
    fn inconsistent_eta_is_rejected() {
        let mut doc = p1_doc();
        doc.eta = Some("-1 + sqrt(1 - t) + 0.001".into());
        assert!(matches!(eta_derivatives(&load_problem(&doc).unwrap()), Err(Error::Invalid(_))));
    }

    #[test]
    fn implicit_derivatives_match_symbolic_and_fd() {
        let sym = eta_derivatives(&p1()).unwrap();
        let imp = eta_derivatives(&p1_newton()).unwrap();
        let q = p1_newton();
        for t in [0.01, 0.1, 0.2, 0.3, 0.4, 0.49] {
            assert!((sym.eta(t).unwrap() - imp.eta(t).unwrap()).abs() < 1e-12);
            assert!((sym.d1(t).unwrap() - imp.d1(t).unwrap()).abs() < 1e-10);
            let dd = imp.d2(t).unwrap();
            assert!((sym.d2(t).unwrap() - dd).abs() < 1e-9);
            let h = 1e-3;
            let fd = (resolve_eta(&q, t + h).unwrap() - 2.0 * resolve_eta(&q, t).unwrap()
                + resolve_eta(&q, t - h).unwrap())
                / (h * h);
            assert!((fd - dd).abs() <= 1e-5 * dd.abs(), "t={t} fd={fd} dd={dd}");
        }
        assert!((sym.max_abs_eta_dd - imp.max_abs_eta_dd).abs() < 1e-9);
    }

    #[test]
    fn residual_invariant_on_grid() {
        let path = eta_derivatives(&p1_newton()).unwrap();
        let p = path.problem();
        for t in linspace(0.0, 0.5, 101) {
            let e = path.eta(t).unwrap();
            assert!(p.reduced_residual(t, e).unwrap().abs() <= 1e-10 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn tube_width_matches_piecewise_definition() {
        let path = eta_derivatives(&p1()).unwrap();
        let tube = FeasibilityTube::new(&path, 0.05).unwrap();
        let ja = (path.eta(0.25).unwrap() - path.eta(0.0).unwrap()).abs();
        let jb = (path.eta(0.5).unwrap() - path.eta(0.25).unwrap()).abs();
        assert!((tube.width(0.0) - (ja + 0.05)).abs() < 1e-15);
        assert!((tube.width(0.02) - (ja + 0.05)).abs() < 1e-15);
        assert_eq!(tube.width(0.25), 0.05);
        assert!((tube.width(0.49) - (jb + 0.05)).abs() < 1e-15);
        assert!(linspace(0.0, 0.5, 501).into_iter().all(|t| tube.width(t) > 0.0));
    }

    #[test]
    fn a2_checks() {
        let path = eta_derivatives(&p1()).unwrap();
        let r = verify_a2(&path, 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_abs_fy > 0.9 && r.max_abs_fy < 1.1);
        assert!(!verify_a2(&path, 1.0).unwrap().pass);

        let doc = ProblemDoc {
            f: "0.5*sin(y) + u".into(),
            u: "0".into(),
            eta: Some("0".into()),
            lambda: 0.6,
            ..p1_doc()
        };
        let path = eta_derivatives(&load_problem(&doc).unwrap()).unwrap();
        assert!(verify_a2(&path, 5.0).unwrap().pass);
    }
}
