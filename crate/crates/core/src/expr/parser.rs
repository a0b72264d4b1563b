use std::sync::Arc;

use super::{BinOp, Expr, ExprError, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            // unicode minus, so formulas pasted from typeset text still parse
            '\u{2212}' => Tok::Op('-'),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ExprError::Syntax { pos: start, msg: "malformed number".into() });
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all, e.g. `2e` would be an identifier clash
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| ExprError::Syntax { pos: start, msg: format!("malformed number `{text}`") })
    }
}

struct Parser<'v> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    vars: &'v [&'v str],
}

/// Parses `src`, accepting only the identifiers in `vars` as variables.
///
/// Grammar, loosest first: `+ -` (left), `* /` (left), unary `-`, `^` (right,
/// constant exponent). Functions: `sin cos exp ln sqrt abs`; constant `pi`.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks: Lexer::tokens(src)?, i: 0, vars };
    let e = p.expr()?;
    match p.peek() {
        (Tok::End, _) => Ok(e),
        (_, pos) => Err(ExprError::Syntax { pos, msg: "unexpected trailing input".into() }),
    }
}

impl Parser<'_> {
    fn peek(&self) -> (Tok, usize) {
        self.toks[self.i].clone()
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.peek();
        if t.0 != Tok::End {
            self.i += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let (Tok::Op(c @ ('+' | '-')), _) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let (Tok::Op(c @ ('*' | '/')), _) = self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if let (Tok::Op('-'), _) = self.peek() {
            self.bump();
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if let (Tok::Op('^'), _) = self.peek() {
            self.bump();
            let at = self.peek().1;
            let exponent = self.unary()?;
            let value = fold_const(&exponent).ok_or(ExprError::NonConstantExponent { pos: at })?;
            return Ok(Expr::Pow(Box::new(base), value));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            (Tok::Num(v), _) => Ok(Expr::Const(v)),
            (Tok::LParen, _) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            (Tok::Ident(name), pos) => {
                if let (Tok::LParen, _) = self.peek() {
                    let op = UnaryOp::from_name(&name)
                        .ok_or(ExprError::UnknownIdentifier { name: name.clone(), pos })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                if self.vars.contains(&name.as_str()) {
                    Ok(Expr::Var(Arc::from(name.as_str())))
                } else if name == "pi" {
                    Ok(Expr::Const(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownIdentifier { name, pos })
                }
            }
            (Tok::End, pos) => Err(ExprError::Syntax { pos, msg: "unexpected end of input".into() }),
            (tok, pos) => Err(ExprError::Syntax { pos, msg: format!("unexpected token {tok:?}") }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.bump() {
            (Tok::RParen, _) => Ok(()),
            (_, pos) => Err(ExprError::Syntax { pos, msg: "expected `)`".into() }),
        }
    }
}

fn fold_const(e: &Expr) -> Option<f64> {
    if e.mentions_any_var() {
        return None;
    }
    e.eval(&|_: &str| None).ok()
}

impl Expr {
    fn mentions_any_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.mentions_any_var(),
            Expr::Binary(_, l, r) => l.mentions_any_var() || r.mentions_any_var(),
        }
    }
}
