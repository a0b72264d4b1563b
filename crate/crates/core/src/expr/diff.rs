use super::{BinOp, Expr, UnaryOp};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => c(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => c(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => c(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => c(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        // keep constants in front: `2*y` rather than `y*2`
        (None, Some(_)) => Expr::Binary(BinOp::Mul, Box::new(b), Box::new(a)),
        _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => c(x / y),
        (Some(x), _) if x == 0.0 => c(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => c(-x),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

fn unary(op: UnaryOp, a: Expr) -> Expr {
    Expr::Unary(op, Box::new(a))
}

fn pow(base: Expr, p: f64) -> Expr {
    if p == 0.0 {
        c(1.0)
    } else if p == 1.0 {
        base
    } else {
        Expr::Pow(Box::new(base), p)
    }
}

impl Expr {
    /// Exact derivative with respect to `var`, with 0/1 folding.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => c(0.0),
            Expr::Var(v) => c(if &**v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, arg) => {
                let da = arg.diff(var);
                if da.as_const() == Some(0.0) {
                    return c(0.0);
                }
                let a = (**arg).clone();
                let outer = match op {
                    UnaryOp::Neg => return neg(da),
                    UnaryOp::Sin => unary(UnaryOp::Cos, a),
                    UnaryOp::Cos => neg(unary(UnaryOp::Sin, a)),
                    UnaryOp::Exp => self.clone(),
                    UnaryOp::Ln => return div(da, a),
                    UnaryOp::Sqrt => return div(da, mul(c(2.0), self.clone())),
                    // sign(a), written so that it stays inside the language
                    UnaryOp::Abs => div(a.clone(), self.clone()),
                };
                mul(outer, da)
            }
            Expr::Binary(op, l, r) => {
                let dl = l.diff(var);
                let dr = r.diff(var);
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinOp::Add => add(dl, dr),
                    BinOp::Sub => sub(dl, dr),
                    BinOp::Mul => add(mul(dl, r), mul(l, dr)),
                    BinOp::Div => {
                        if dr.as_const() == Some(0.0) {
                            div(dl, r)
                        } else {
                            div(sub(mul(dl, r.clone()), mul(l, dr)), pow(r, 2.0))
                        }
                    }
                }
            }
            Expr::Pow(base, p) => {
                let db = base.diff(var);
                if db.as_const() == Some(0.0) {
                    return c(0.0);
                }
                mul(mul(c(*p), pow((**base).clone(), p - 1.0)), db)
            }
        }
    }
}
