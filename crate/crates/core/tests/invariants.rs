mod common;

use common::{p1, p1_doc};
use proptest::prelude::*;
use sps_core::approx::Approximation;
use sps_core::expr::parse;
use sps_core::layers::LayerFamily;
use sps_core::numeric::linspace;
use sps_core::problem::{eta_derivatives, load_problem};
use sps_core::solver::{compare, solve_bvp3};
use sps_core::turning::{shoot_bc, shot_trajectory, AutonomousProblem};

fn geometry() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0..1.0f64, 0.05..1.0f64, 0.05..1.0f64).prop_map(|(a, z, y)| (a, a + z, a + z + y))
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn layer_boundary_identities(
        geom in geometry(),
        eps in log_uniform(1e-14, 1.0),
        m in 0.05..3.0f64,
        big_a in -2.0..2.0f64,
        big_b in 0.0..2.0f64,
    ) {
        let (a, g, b) = geom;
        let l = LayerFamily::new(m, eps, 0.0, geom, big_a, big_b);
        prop_assert!(l.big_d().1 > 0.0);
        let scale = big_a.abs().max(big_b).max(1e-300);
        prop_assert!((l.zeta(g) - l.zeta(a) + big_a).abs() <= 1e-12 * scale);
        prop_assert!(rel(l.zeta(b), l.zeta(g)) <= 1e-12);
        prop_assert!(rel(l.zeta_hat(g), l.zeta_hat(a)) <= 1e-12);
        prop_assert!((l.zeta_hat(b) - l.zeta_hat(g) - l.big_b).abs() <= 1e-12 * scale);
        let (va, vg, vb) = (l.v_corr(a), l.v_corr(g), l.v_corr(b));
        let v_scale = common::v_term_scale(&l);
        prop_assert!((va - vg).abs() <= 1e-12 * v_scale && (vb - vg).abs() <= 1e-12 * v_scale);
        for t in linspace(a, b, 101) {
            let vals = [l.zeta(t), l.zeta_hat(t), l.psi(t), l.v_corr(t), l.zeta_d2(t), l.zeta_hat_d2(t)];
            prop_assert!(vals.iter().all(|v| v.is_finite()), "t = {t}: {vals:?}");
            let r = eps * l.zeta_d2(t) - m * l.zeta(t);
            prop_assert!(r.abs() <= 1e-9 * (big_a.abs() + (m * l.zeta(t)).abs()));
            let r = eps * l.zeta_hat_d2(t) - m * l.zeta_hat(t);
            prop_assert!(r.abs() <= 1e-9 * (big_b + (m * l.zeta_hat(t)).abs()));
            prop_assert!(l.zeta_hat(t) >= 0.0);
            prop_assert!(l.zeta(t) * big_a >= 0.0);
        }
        prop_assert_eq!(l.zeta_d1(0.5 * (b + g)), 0.0);
        prop_assert_eq!(l.zeta_hat_d1(0.5 * (a + g)), 0.0);
    }

    #[test]
    fn approximation_meets_three_point_condition(eps in log_uniform(1e-10, 1.0)) {
        let path = eta_derivatives(&p1()).unwrap();
        let ap = Approximation::new(&path, eps).unwrap();
        let (ya, yg, yb) = (ap.y_tilde(0.0).unwrap(), ap.y_tilde(0.25).unwrap(), ap.y_tilde(0.5).unwrap());
        prop_assert!((ya - yg).abs() <= 1e-14 && (yb - yg).abs() <= 1e-14, "{ya} {yg} {yb}");
    }

    #[test]
    fn evaluation_is_pure(e in common::smooth_expr(), (x, y) in common::point()) {
        let at = [("x", x), ("y", y)];
        prop_assert_eq!(e.eval(&at).unwrap().to_bits(), e.eval(&at).unwrap().to_bits());
    }

    #[test]
    fn validated_problems_have_positive_margin(k in -5.0..1.0f64, lambda in 0.0..5.0f64) {
        let mut doc = p1_doc();
        doc.k = k;
        doc.lambda = lambda;
        doc.eta = None;
        doc.eta_seed = Some(0.0);
        if let Ok(p) = load_problem(&doc) {
            prop_assert!(p.m() > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_conserve_energy(
        f in prop_oneof![Just("exp(y)"), Just("3"), Just("2 + sin(y)")],
        y0 in -6.0..0.0f64,
        y1 in 0.1..3.0f64,
        eps in log_uniform(1e-4, 1e-1),
    ) {
        let p = AutonomousProblem::new(parse(f, &["y"]).unwrap(), y0, y1, 0.25, eps).unwrap();
        let energy = p.energy().unwrap();
        // out and back to y0, where F~ stays within the energy level
        let tr = p.trajectory(2.0 * p.turning_time().unwrap()).unwrap();
        for (&y, &yp) in tr.y.iter().zip(&tr.yp) {
            let drift = (p.first_integral(&energy, y, yp).unwrap() - energy.c1).abs();
            prop_assert!(drift <= 1e-8 * energy.c1.abs(), "{f}: drift {drift:e}, c1 {}", energy.c1);
        }
    }

    #[test]
    fn shot_trajectories_rise_then_fall(
        f in prop_oneof![Just("exp(y)"), Just("3"), Just("2 + sin(y)")],
        eps in log_uniform(1e-4, 1e-2),
    ) {
        let p = AutonomousProblem::new(parse(f, &["y"]).unwrap(), -6.0, 1.0, 0.25, eps).unwrap();
        let shot = shoot_bc(&p, 0.25).unwrap();
        prop_assert!((shot.t_star - 0.125).abs() <= 1e-6, "t* = {}", shot.t_star);
        let tr = shot_trajectory(&p, 0.25, shot.y1).unwrap();
        for (w, t) in tr.y.windows(2).zip(tr.t.windows(2)) {
            if t[1] <= shot.t_star {
                prop_assert!(w[1] > w[0]);
            } else if t[0] >= shot.t_star {
                prop_assert!(w[1] < w[0]);
            }
        }
    }
}

#[test]
fn reference_solution_stays_in_tube_for_small_eps() {
    let p = p1();
    let mut eps0 = None;
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let sol = solve_bvp3(&p.with_epsilon(eps).unwrap(), 512).unwrap();
        if sol.tube_violations == Some(0) {
            eps0.get_or_insert(eps);
        } else {
            assert!(eps0.is_none(), "tube left again at eps = {eps}");
        }
    }
    let eps0 = eps0.expect("no eps with the solution inside the tube");
    println!("reference solution stays in the tube for eps <= {eps0:e}");
    assert!(eps0 >= 1e-3);
}

#[test]
fn mesh_refinement_is_consistent() {
    let p = p1().with_epsilon(1e-4).unwrap();
    let sols: Vec<_> = [128, 256, 512].iter().map(|&n| solve_bvp3(&p, n).unwrap()).collect();
    // nodes a, gamma and b are shared by every mesh
    let shared = |i: usize| {
        let s = &sols[i];
        [s.y[0], s.y[s.mesh.gamma_index], s.y[s.y.len() - 1]]
    };
    let (coarse, mid, fine) = (shared(0), shared(1), shared(2));
    for j in 0..3 {
        let estimate = (coarse[j] - mid[j]).abs() / 3.0;
        let change = (mid[j] - fine[j]).abs();
        assert!(change <= 4.0 * estimate + 1e-12, "node {j}: change {change:e}, estimate {estimate:e}");
    }
}

#[test]
fn affine_reduced_solution_converges_fast() {
    let doc = sps_core::problem::ProblemDoc {
        f: "u".into(),
        u: "-2*(1 + t)".into(),
        eta: Some("1 + t".into()),
        lambda: 0.5,
        ..p1_doc()
    };
    let p = load_problem(&doc).unwrap();
    let path = eta_derivatives(&p).unwrap();
    assert_eq!(path.c_constant(), 0.0);
    let errors: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let sol = solve_bvp3(&p.with_epsilon(eps).unwrap(), 512).unwrap();
            let ap = Approximation::new(&path, eps).unwrap();
            compare(&sol, &ap, 0.0).unwrap().max_err
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] / w[0] <= 0.05, "errors {errors:?}");
    }
}
