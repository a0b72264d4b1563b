//! Shared fixtures: the worked problem file and random expressions in `x, y`
//! that stay smooth and finite on `[-2, 2]^2`. Singular functions are only
//! applied to arguments bounded away from their singularities.

#![allow(dead_code)]

use proptest::prelude::*;
use sps_core::expr::{BinOp, Expr, UnaryOp};
use sps_core::layers::LayerFamily;
use sps_core::problem::{load_problem, Problem, ProblemDoc};

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn p1_doc() -> ProblemDoc {
    serde_json::from_str(&std::fs::read_to_string(data_path("P1.json")).unwrap()).unwrap()
}

pub fn p1() -> Problem {
    load_problem(&p1_doc()).unwrap()
}

pub const VARS: [&str; 2] = ["x", "y"];

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, b(l), b(r))
}

fn un(op: UnaryOp, a: Expr) -> Expr {
    Expr::Unary(op, b(a))
}

// 1 + a^2 >= 1
fn lifted(a: Expr) -> Expr {
    bin(BinOp::Add, Expr::Const(1.0), Expr::Pow(b(a), 2.0))
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (1u32..=30).prop_map(|k| Expr::Const(k as f64 / 10.0)),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
    ]
}

pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Add, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Sub, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Mul, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Div, l, lifted(r))),
            inner.clone().prop_map(|a| un(UnaryOp::Neg, a)),
            inner.clone().prop_map(|a| un(UnaryOp::Sin, a)),
            inner.clone().prop_map(|a| un(UnaryOp::Cos, a)),
            inner.clone().prop_map(|a| un(UnaryOp::Exp, un(UnaryOp::Sin, a))),
            inner.clone().prop_map(|a| un(UnaryOp::Ln, lifted(a))),
            inner.clone().prop_map(|a| un(UnaryOp::Sqrt, lifted(a))),
            inner.clone().prop_map(|a| un(UnaryOp::Abs, bin(BinOp::Add, Expr::Const(2.0), un(UnaryOp::Sin, a)))),
            (inner.clone(), 2u32..=3).prop_map(|(a, p)| Expr::Pow(b(a), p as f64)),
            (inner, prop_oneof![Just(-1.5), Just(-0.5), Just(0.5), Just(1.5)])
                .prop_map(|(a, p)| Expr::Pow(b(lifted(a)), p)),
        ]
    })
}

pub fn point() -> impl Strategy<Value = (f64, f64)> {
    (-2.0..2.0f64, -2.0..2.0f64)
}

/// Central differences in `x`, Richardson-extrapolated over shrinking steps
/// (Ridders' scheme); returns the estimate with the smallest error.
pub fn central_difference(e: &Expr, x: f64, y: f64) -> f64 {
    const SHRINK: f64 = 1.4;
    const N: usize = 10;
    let f = |dx: f64| e.eval(&[("x", x + dx), ("y", y)]).unwrap();
    let mut h = 1e-3;
    let mut table = [[0.0f64; N]; N];
    table[0][0] = (f(h) - f(-h)) / (2.0 * h);
    let (mut best, mut err) = (table[0][0], f64::INFINITY);
    for i in 1..N {
        h /= SHRINK;
        table[0][i] = (f(h) - f(-h)) / (2.0 * h);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let e_new = (table[j][i] - table[j - 1][i]).abs().max((table[j][i] - table[j - 1][i - 1]).abs());
            if e_new <= err {
                err = e_new;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    best
}

/// `Ok` when the symbolic derivative matches finite differences to `1e-6`
/// relative to `1 + |derivative|`.
pub fn derivative_agrees(e: &Expr, (x, y): (f64, f64)) -> Result<(), String> {
    let exact = e.diff("x").eval(&[("x", x), ("y", y)]).map_err(|err| err.to_string())?;
    let fd = central_difference(e, x, y);
    if !exact.is_finite() || !fd.is_finite() {
        return Err(format!("non-finite derivative of {e} at ({x}, {y})"));
    }
    if (exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()) {
        Ok(())
    } else {
        Err(format!("d/dx {e} at ({x}, {y}): symbolic {exact}, differences {fd}"))
    }
}

/// `Ok` when printing and re-parsing reproduces the tree exactly.
pub fn round_trips(e: &Expr) -> Result<(), String> {
    let text = e.to_string();
    match sps_core::expr::parse(&text, &VARS) {
        Ok(back) if back == *e => Ok(()),
        Ok(back) => Err(format!("`{text}` re-parsed as {back:?}, expected {e:?}")),
        Err(err) => Err(format!("`{text}` failed to parse: {err}")),
    }
}

/// Largest `|c_a zeta| + |c_b zeta^| + |psi|` over the three nodes.
pub fn v_term_scale(l: &LayerFamily) -> f64 {
    let (pa, pg, pb) = (l.psi(l.a), l.psi(l.gamma), l.psi(l.b));
    let ca = if l.big_a == 0.0 { 0.0 } else { (pa - pg) / l.big_a };
    let cb = if l.big_b == 0.0 { 0.0 } else { (pg - pb) / l.big_b };
    [l.a, l.gamma, l.b]
        .iter()
        .map(|&t| (ca * l.zeta(t)).abs() + (cb * l.zeta_hat(t)).abs() + l.psi(t).abs())
        .fold(0.0, f64::max)
}
