//! A small expression language for spatial coefficient fields.
//!
//! Grammar (standard precedence, left-associative binary operators):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' term-factor) | ('/' number))*
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'y' | 'pi' | ('cos' | 'sin') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Division is restricted to literal divisors so that every expression is
//! total on the whole plane.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Division by a nonzero literal.
    Div(Box<Expr>, f64),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
}

/// Parsed coefficient field `a(x, y)`.
pub type CoefficientExpr = Expr;

/// Spatial scalar field, implemented by expressions and plain closures.
pub trait Field2 {
    fn at(&self, x: f64, y: f64) -> f64;
}

impl Field2 for Expr {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y)
    }
}

impl<F: Fn(f64, f64) -> f64> Field2 for F {
    fn at(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        if tokens.is_empty() {
            return Err(Error::Syntax { pos: 0, msg: "empty expression".into() });
        }
        let mut p = Parser { tokens, pos: 0, end: src.len() };
        let e = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(Error::Syntax { pos: t.pos, msg: format!("unexpected {}", t.kind) });
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, d) => a.eval(x, y) / d,
            Expr::Cos(a) => a.eval(x, y).cos(),
            Expr::Sin(a) => a.eval(x, y).sin(),
        }
    }

    /// True when the expression mentions neither `x` nor `y`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::X | Expr::Y => false,
            Expr::Neg(a) | Expr::Div(a, _) | Expr::Cos(a) | Expr::Sin(a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Value of a constant expression.
    pub fn constant_value(&self) -> Option<f64> {
        self.is_constant().then(|| self.eval(0.0, 0.0))
    }

    /// Symbolic partial derivative, with zero and one folded away.
    pub fn derivative(&self, var: Var) -> Expr {
        use Expr::*;
        match self {
            Num(_) | Pi => Num(0.0),
            X => Num(if var == Var::X { 1.0 } else { 0.0 }),
            Y => Num(if var == Var::Y { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, d) => div(a.derivative(var), *d),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative(var))),
            Sin(a) => mul(Cos(a.clone()), a.derivative(var)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        a if is_zero(&a) => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Num(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, d: f64) -> Expr {
    if is_zero(&a) {
        Expr::Num(0.0)
    } else {
        Expr::Div(Box::new(a), d)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        let left = |f: &mut fmt::Formatter<'_>, e: &Expr| {
            if e.precedence() < prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let right = |f: &mut fmt::Formatter<'_>, e: &Expr| {
            if e.precedence() <= prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Y => f.write_str("y"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                if a.precedence() < 3 {
                    write!(f, "({a})")
                } else {
                    write!(f, "{a}")
                }
            }
            Expr::Add(a, b) => {
                left(f, a)?;
                f.write_str(" + ")?;
                right(f, b)
            }
            Expr::Sub(a, b) => {
                left(f, a)?;
                f.write_str(" - ")?;
                right(f, b)
            }
            Expr::Mul(a, b) => {
                left(f, a)?;
                f.write_str(" * ")?;
                right(f, b)
            }
            Expr::Div(a, d) => {
                left(f, a)?;
                write!(f, " / {d}")
            }
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "identifier `{s}`"),
            Kind::Plus => f.write_str("`+`"),
            Kind::Minus => f.write_str("`-`"),
            Kind::Star => f.write_str("`*`"),
            Kind::Slash => f.write_str("`/`"),
            Kind::LParen => f.write_str("`(`"),
            Kind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Kind::Plus,
            b'-' => Kind::Minus,
            b'*' => Kind::Star,
            b'/' => Kind::Slash,
            b'(' => Kind::LParen,
            b')' => Kind::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Syntax { pos, msg: format!("malformed number `{text}`") })?;
                i = j;
                out.push(Token { kind: Kind::Num(v), pos });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let name = src[i..j].to_string();
                i = j;
                out.push(Token { kind: Kind::Ident(name), pos });
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { pos, msg: format!("unexpected character `{ch}`") });
            }
        };
        out.push(Token { kind, pos });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Syntax { pos: self.end, msg: "unexpected end of input".into() })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kind: Kind) -> Result<()> {
        let t = self.next()?;
        if t.kind != kind {
            return Err(Error::Syntax { pos: t.pos, msg: format!("expected {kind}, found {}", t.kind) });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            match t.kind {
                Kind::Plus => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Kind::Minus => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            match t.kind {
                Kind::Star => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Kind::Slash => {
                    self.pos += 1;
                    let t = self.next()?;
                    match t.kind {
                        Kind::Num(d) if d != 0.0 => lhs = Expr::Div(Box::new(lhs), d),
                        Kind::Num(_) => {
                            return Err(Error::Syntax { pos: t.pos, msg: "division by zero".into() })
                        }
                        other => {
                            return Err(Error::Syntax {
                                pos: t.pos,
                                msg: format!("divisor must be a numeric literal, found {other}"),
                            })
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token { kind: Kind::Minus, .. })) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.next()?;
        match t.kind {
            Kind::Num(v) => Ok(Expr::Num(v)),
            Kind::LParen => {
                let e = self.expr()?;
                self.expect(Kind::RParen)?;
                Ok(e)
            }
            Kind::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "pi" => Ok(Expr::Pi),
                "cos" | "sin" => {
                    self.expect(Kind::LParen)?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Kind::RParen)?;
                    Ok(if name == "cos" { Expr::Cos(arg) } else { Expr::Sin(arg) })
                }
                _ => Err(Error::UnknownSymbol { pos: t.pos, name }),
            },
            other => Err(Error::Syntax { pos: t.pos, msg: format!("unexpected {other}") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_cosine_mode_coefficients() {
        let e = Expr::parse("1/4 * cos(2*pi*x)").unwrap();
        assert!((e.eval(0.0, 0.0) - 0.25).abs() < 1e-15);
        let e = Expr::parse("1").unwrap();
        assert_eq!(e.eval(0.3, -2.0), 1.0);
        assert_eq!(e.constant_value(), Some(1.0));
        let e = Expr::parse("1/8 * cos(2*pi*x) * cos(2*pi*y)").unwrap();
        assert!((e.eval(0.5, 0.5) - 0.125).abs() < 1e-15);
        assert!(!e.is_constant());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0, 0.0), -4.0);
        let e = Expr::parse("2 + 3 * x").unwrap();
        assert_eq!(e.eval(2.0, 0.0), 8.0);
        let e = Expr::parse("-x * y").unwrap();
        assert_eq!(e.eval(2.0, 3.0), -6.0);
        let e = Expr::parse("12 / 4 / 3").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 1.0);
        let e = Expr::parse("2.5e-1 * (x + 1)").unwrap();
        assert_eq!(e.eval(1.0, 0.0), 0.5);
    }

    #[test]
    fn errors_carry_positions() {
        match Expr::parse("1 + z") {
            Err(Error::UnknownSymbol { pos, name }) => {
                assert_eq!(pos, 4);
                assert_eq!(name, "z");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Expr::parse("1 +"), Err(Error::Syntax { pos: 3, .. })));
        assert!(matches!(Expr::parse("x / y"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(Expr::parse("x / 0"), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("cos x"), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("(1"), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("1 2"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(Expr::parse(""), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("x # 2"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn derivatives() {
        let e = Expr::parse("1/4 * cos(2*pi*x)").unwrap();
        let dx = e.derivative(Var::X);
        let dy = e.derivative(Var::Y);
        for &x in &[0.0, 0.1, 0.37] {
            let expected = -0.25 * 2.0 * PI * (2.0 * PI * x).sin();
            assert!((dx.eval(x, 0.2) - expected).abs() < 1e-13);
            assert_eq!(dy.eval(x, 0.2), 0.0);
        }
        let e = Expr::parse("x * x * y - sin(y) / 2").unwrap();
        let dy = e.derivative(Var::Y);
        assert!((dy.eval(1.5, 0.3) - (2.25 - 0.3f64.cos() / 2.0)).abs() < 1e-14);
        assert_eq!(Expr::parse("3").unwrap().derivative(Var::X), Expr::Num(0.0));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
            Just(Expr::X),
            Just(Expr::Y),
            Just(Expr::Pi),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
                (inner.clone(), 1u32..64).prop_map(|(a, d)| Expr::Div(Box::new(a), d as f64)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = Expr::parse(&printed).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn derivative_matches_central_difference(e in arb_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let h = 1e-5;
            let fd = (e.eval(x + h, y) - e.eval(x - h, y)) / (2.0 * h);
            let d = e.derivative(Var::X).eval(x, y);
            let scale = 1.0 + d.abs() + e.eval(x, y).abs();
            prop_assume!(scale < 1e6);
            prop_assert!((fd - d).abs() <= 1e-4 * scale * scale, "fd {} vs {}", fd, d);
        }
    }
}
