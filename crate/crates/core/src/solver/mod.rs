//! Finite-difference reference solver for the three-point problem.
//!
//! Damped Newton on the `N+1` unknowns: a three-point second difference at
//! every interior node (including `gamma`) and the two constraint rows
//! `y_0 - y_g = 0`, `y_g - y_N = 0`. The constraint rows are eliminated, which
//! leaves a tridiagonal system plus one coupling unknown `delta_g`; that is
//! solved exactly with two tridiagonal sweeps.

mod mesh;

pub use mesh::{shishkin_mesh, transition_width, LayerMesh};

use log::{debug, warn};
use serde::Serialize;

use crate::approx::Approximation;
use crate::error::{Error, Result};
use crate::numeric::solve_tridiagonal;
use crate::problem::{eta_derivatives, FeasibilityTube, Problem};

pub const MAX_NEWTON_STEPS: usize = 50;
pub const MAX_HALVINGS: usize = 30;
/// Relative residual tolerance; the absolute one is `REL_TOL * (1 + max|y|)`.
pub const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSolution {
    pub mesh: LayerMesh,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub newton_iters: usize,
    pub residual_norm: f64,
    /// Tolerance the residual was driven below.
    pub tol: f64,
    /// Nodes where the solution leaves the tube around `eta`, if checked.
    pub tube_violations: Option<usize>,
}

struct System<'a> {
    p: &'a Problem,
    t: &'a [f64],
    h: Vec<f64>,
    g: usize,
    eps: f64,
}

impl System<'_> {
    fn n(&self) -> usize {
        self.t.len() - 1
    }

    // coefficients of y_{i-1}, y_i, y_{i+1} in eps * D2 y_i
    fn stencil(&self, i: usize) -> (f64, f64, f64) {
        let (hl, hr) = (self.h[i - 1], self.h[i]);
        let s = 2.0 * self.eps / (hl + hr);
        (s / hl, -s / hl - s / hr, s / hr)
    }

    fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut r = vec![0.0; n + 1];
        r[0] = y[0] - y[self.g];
        r[n] = y[self.g] - y[n];
        for i in 1..n {
            let (l, d, u) = self.stencil(i);
            r[i] = l * y[i - 1] + d * y[i] + u * y[i + 1] + self.p.k * y[i] - self.p.f_at(self.t[i], y[i])?;
        }
        Ok(r)
    }

    fn newton_step(&self, y: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let m = n - 1;
        let (mut lower, mut diag, mut upper) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let mut rhs = vec![0.0; m];
        for i in 1..n {
            let (l, d, u) = self.stencil(i);
            let j = i - 1;
            lower[j] = l;
            diag[j] = d + self.p.k - self.p.fy_at(self.t[i], y[i])?;
            upper[j] = u;
            rhs[j] = -r[i];
        }
        // delta_0 = delta_g - r_0 and delta_N = delta_g + r_N
        let first_l = lower[0];
        let last_u = upper[m - 1];
        rhs[0] += first_l * r[0];
        rhs[m - 1] -= last_u * r[n];
        let mut coupling = vec![0.0; m];
        coupling[0] += first_l;
        coupling[m - 1] += last_u;

        let singular = || Error::Numeric("singular Newton matrix".into());
        let p = solve_tridiagonal(&lower, &diag, &upper, &rhs).ok_or_else(singular)?;
        let q = solve_tridiagonal(&lower, &diag, &upper, &coupling).ok_or_else(singular)?;
        let gj = self.g - 1;
        let denom = 1.0 + q[gj];
        if denom == 0.0 || !denom.is_finite() {
            return Err(singular());
        }
        let dg = p[gj] / denom;
        let mut delta = vec![0.0; n + 1];
        for j in 0..m {
            delta[j + 1] = p[j] - dg * q[j];
        }
        delta[0] = dg - r[0];
        delta[n] = dg + r[n];
        Ok(delta)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Second-order derivative estimates: central inside, one-sided at the ends.
pub fn mesh_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len() - 1;
    let mut w = vec![0.0; n + 1];
    for i in 1..n {
        let (hl, hr) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        w[i] = (hl * hl * y[i + 1] - hr * hr * y[i - 1] + (hr * hr - hl * hl) * y[i]) / (hl * hr * (hl + hr));
    }
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    w[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1] - h0 / (h1 * (h0 + h1)) * y[2];
    let (h0, h1) = (t[n] - t[n - 1], t[n - 1] - t[n - 2]);
    w[n] = (2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[n] - (h0 + h1) / (h0 * h1) * y[n - 1] + h0 / (h1 * (h0 + h1)) * y[n - 2];
    w
}

/// Newton from an explicit initial iterate on a given mesh, at `p.epsilon`.
pub fn solve_with_guess(p: &Problem, mesh: LayerMesh, guess: Vec<f64>) -> Result<DiscreteSolution> {
    if guess.len() != mesh.len() {
        return Err(Error::Invalid("initial iterate does not match the mesh".into()));
    }
    let sys = System { p, t: &mesh.nodes, h: mesh.steps(), g: mesh.gamma_index, eps: p.epsilon };
    let mut y = guess;
    let mut r = sys.residual(&y)?;
    let mut norm = max_abs(&r);
    for iter in 0..=MAX_NEWTON_STEPS {
        let tol = REL_TOL * (1.0 + max_abs(&y));
        debug!("newton {iter}: residual {norm:e} (tol {tol:e})");
        if norm <= tol {
            let w = mesh_derivative(&mesh.nodes, &y);
            return Ok(DiscreteSolution {
                mesh,
                y,
                w,
                newton_iters: iter,
                residual_norm: norm,
                tol,
                tube_violations: None,
            });
        }
        if iter == MAX_NEWTON_STEPS {
            break;
        }
        let delta = sys.newton_step(&y, &r)?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = y.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            let tr = sys.residual(&trial)?;
            let tn = max_abs(&tr);
            if tn.is_nan() {
                return Err(Error::Divergence("residual became NaN".into()));
            }
            if tn < norm {
                y = trial;
                r = tr;
                norm = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::Divergence(format!(
                "no decrease after {MAX_HALVINGS} halvings (residual {norm:e})"
            )));
        }
    }
    Err(Error::Divergence(format!("no convergence in {MAX_NEWTON_STEPS} steps (residual {norm:e})")))
}

/// Solves `p` at `p.epsilon` on a Shishkin mesh of `n` cells, starting from
/// the approximation `y~`, and counts nodes outside the tube around `eta`.
pub fn solve_bvp3(p: &Problem, n: usize) -> Result<DiscreteSolution> {
    let path = eta_derivatives(p)?;
    let appr = Approximation::new(&path, p.epsilon)?;
    let mesh = shishkin_mesh(p.geometry(), p.epsilon, p.m(), n)?;
    let guess = mesh.nodes.iter().map(|&t| appr.y_tilde(t)).collect::<Result<Vec<_>>>()?;
    let mut sol = solve_with_guess(p, mesh, guess)?;
    let tube = FeasibilityTube::new(&path, p.delta)?;
    let mut outside = 0;
    for (&t, &y) in sol.mesh.nodes.iter().zip(&sol.y) {
        if (y - path.eta(t)?).abs() > tube.width(t) {
            outside += 1;
        }
    }
    if outside > 0 {
        warn!("solution leaves the tube around eta at {outside} nodes");
    }
    sol.tube_violations = Some(outside);
    Ok(sol)
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub max_err: f64,
    pub interior_max_err: f64,
    pub envelope_violations: usize,
    pub err_over_eps: f64,
    pub case_id: u8,
}

/// Error of `y~` against the reference solution at the mesh nodes; envelope
/// checks use `lo - slack <= y~ - y <= hi + slack`.
pub fn compare(sol: &DiscreteSolution, appr: &Approximation, slack: f64) -> Result<Metrics> {
    let nodes = &sol.mesh.nodes;
    let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
    let (ia, ib) = (a + 0.1 * (b - a), b - 0.1 * (b - a));
    let (mut max_err, mut interior, mut violations) = (0.0f64, 0.0f64, 0);
    for (&t, &y) in nodes.iter().zip(&sol.y) {
        let diff = appr.y_tilde(t)? - y;
        max_err = max_err.max(diff.abs());
        if t >= ia && t <= ib {
            interior = interior.max(diff.abs());
        }
        let (lo, hi) = appr.envelope(t);
        if diff < lo - slack || diff > hi + slack {
            violations += 1;
        }
    }
    Ok(Metrics {
        max_err,
        interior_max_err: interior,
        envelope_violations: violations,
        err_over_eps: max_err / appr.eps(),
        case_id: appr.case.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::problem::tests::p1;
    use std::f64::consts::PI;

    fn manufactured(eps: f64) -> Problem {
        // y_m = cos(8 pi t) solves eps*y'' + k*y = y^2 + u for this u
        let u = format!("{eps}*(-64*pi^2)*cos(8*pi*t) - 2*cos(8*pi*t) - cos(8*pi*t)^2");
        Problem::new(
            -2.0,
            (0.0, 0.25, 0.5),
            parse("y^2 + u", &["u", "y"]).unwrap(),
            parse(&u, &["t"]).unwrap(),
            parse("y", &["y"]).unwrap(),
            None,
            Some(0.0),
            1.0,
            0.05,
            eps,
        )
        .unwrap()
    }

    fn manufactured_error(n: usize) -> f64 {
        let p = manufactured(1e-3);
        let mesh = shishkin_mesh(p.geometry(), p.epsilon, p.m(), n).unwrap();
        let guess = mesh.nodes.iter().map(|&t| (8.0 * PI * t).cos() + 0.1 * (2.0 * PI * t).sin()).collect();
        let sol = solve_with_guess(&p, mesh, guess).unwrap();
        sol.mesh.nodes.iter().zip(&sol.y).map(|(&t, &y)| (y - (8.0 * PI * t).cos()).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let p = Problem::new(
            -2.0,
            (0.0, 0.25, 0.5),
            parse("0*y", &["u", "y"]).unwrap(),
            parse("0", &["t"]).unwrap(),
            parse("y", &["y"]).unwrap(),
            Some(parse("0", &["t"]).unwrap()),
            None,
            1.0,
            0.05,
            1e-3,
        )
        .unwrap();
        let mesh = shishkin_mesh(p.geometry(), p.epsilon, p.m(), 64).unwrap();
        let guess = mesh.nodes.iter().map(|&t| 1.0 + t).collect();
        let sol = solve_with_guess(&p, mesh, guess).unwrap();
        assert!(max_abs(&sol.y) <= 1e-12);
        let sol = solve_bvp3(&p, 64).unwrap();
        assert!(max_abs(&sol.y) <= 1e-12);
    }

    #[test]
    fn manufactured_solution_converges() {
        let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| manufactured_error(n)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.5, "{errs:?}");
        }
    }

    #[test]
    fn p1_solution_meets_constraints() {
        let p = p1().with_epsilon(1e-4).unwrap();
        let sol = solve_bvp3(&p, 512).unwrap();
        let n = sol.y.len() - 1;
        let g = sol.mesh.gamma_index;
        assert!((sol.y[0] - sol.y[g]).abs() <= sol.tol);
        assert!((sol.y[n] - sol.y[g]).abs() <= sol.tol);
        assert!(sol.residual_norm <= sol.tol);
        assert!(sol.w[0].abs() >= 10.0 && sol.w[n].abs() >= 10.0);
        assert_eq!(sol.tube_violations, Some(0));
        // residual recomputed independently of the solver
        let t = &sol.mesh.nodes;
        for i in 1..n {
            let (hl, hr) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let d2 = 2.0 / (hl + hr) * ((sol.y[i + 1] - sol.y[i]) / hr - (sol.y[i] - sol.y[i - 1]) / hl);
            let r = 1e-4 * d2 - 2.0 * sol.y[i] - sol.y[i] * sol.y[i] - t[i];
            assert!(r.abs() <= 1e-9, "i={i} r={r}");
        }
    }

    #[test]
    fn derivative_estimates_are_second_order() {
        let t: Vec<f64> = (0..=40).map(|i| (i as f64 / 40.0).powi(2)).collect();
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        let w = mesh_derivative(&t, &y);
        for (x, d) in t.iter().zip(w) {
            assert!((d - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn approximation_against_itself() {
        let p = p1().with_epsilon(1e-3).unwrap();
        let path = eta_derivatives(&p).unwrap();
        let appr = Approximation::new(&path, 1e-3).unwrap();
        let mut sol = solve_bvp3(&p, 64).unwrap();
        sol.y = sol.mesh.nodes.iter().map(|&t| appr.y_tilde(t).unwrap()).collect();
        let m = compare(&sol, &appr, 0.0).unwrap();
        assert_eq!(m.max_err, 0.0);
        assert_eq!(m.case_id, 1);
    }
}
