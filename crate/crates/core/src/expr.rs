//! Tiny arithmetic expression language used for matrix entries in model
//! files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | var | func '(' sum ')' | '(' sum ')'
//! var     := 'x' | 'x' digits
//! func    := sqrt | sin | cos | exp | ln
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^9`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error in `{node}`: {message}")]
    Domain { node: String, message: String },

    #[error("variable x{index} not supplied ({available} values given)")]
    MissingVariable { index: usize, available: usize },
}

impl ExprError {
    pub fn is_syntax(&self) -> bool {
        matches!(
            self,
            ExprError::Syntax { .. } | ExprError::UnknownIdentifier { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// One-based variable index; `x` is `x1`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Num(v)
    }

    /// Largest variable index referenced, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) | Expr::Call(_, e) => e.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var() == 0
    }

    pub fn eval(&self, vars: &[f64]) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => *vars.get(i - 1).ok_or(ExprError::MissingVariable {
                index: *i,
                available: vars.len(),
            })?,
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(vars)?, b.eval(vars)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(self.domain("non-integer power of a negative base"));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(self.domain("negative power of zero"));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval(vars)?;
                match f {
                    Func::Sqrt if x < 0.0 => return Err(self.domain("sqrt of a negative number")),
                    Func::Ln if x <= 0.0 => return Err(self.domain("ln of a non-positive number")),
                    Func::Sqrt => x.sqrt(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                }
            }
        };
        if !v.is_finite() {
            return Err(self.domain("non-finite result"));
        }
        Ok(v)
    }

    fn domain(&self, message: &str) -> ExprError {
        ExprError::Domain {
            node: self.to_string(),
            message: message.to_string(),
        }
    }
}

/// Canonical printer: every compound node is parenthesized, literals use the
/// shortest round-trip representation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.syntax("expected a number, variable, function or `(`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = mark;
                return Err(self.syntax("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Expr::Num)
            .ok_or_else(|| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.sum()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if name == "x" {
            return Ok(Expr::Var(1));
        }
        if let Some(idx) = name.strip_prefix('x') {
            if !idx.starts_with('0') && idx.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(i) = idx.parse::<usize>() {
                    return Ok(Expr::Var(i));
                }
            }
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[f64]) -> f64 {
        parse(src).unwrap().eval(vars).unwrap()
    }

    #[test]
    fn linear() {
        assert_eq!(ev("2*x+1", &[0.25]), 1.5);
    }

    #[test]
    fn sqrt_forced_algebra() {
        assert!((ev("sqrt(1-x)", &[0.19]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn malformed_input_offset() {
        match parse("2*+") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pythagorean_identity() {
        assert!((ev("sin(x)^2+cos(x)^2", &[0.7]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_of_two_vars() {
        assert!((ev("x1*x2", &[0.5, 0.3]) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn ln_zero_is_domain_error() {
        let e = parse("ln(x)").unwrap();
        match e.eval(&[0.0]) {
            Err(ExprError::Domain { node, .. }) => assert_eq!(node, "ln(x1)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", &[]), -4.0);
        assert_eq!(ev("2^3^2", &[]), 512.0);
        assert_eq!(ev("8/4/2", &[]), 1.0);
        assert_eq!(ev("10-4-3", &[]), 3.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("(1+2)*3", &[]), 9.0);
        assert_eq!(ev("1.5e1 + .5", &[]), 15.5);
    }

    #[test]
    fn negative_base_fractional_power() {
        let e = parse("x^0.5").unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(ExprError::Domain { .. })));
        assert_eq!(parse("x^2").unwrap().eval(&[-3.0]).unwrap(), 9.0);
    }

    #[test]
    fn division_by_zero() {
        assert!(matches!(
            parse("1/(x-1)").unwrap().eval(&[1.0]),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn unknown_identifier() {
        match parse("2*y") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("x0").is_err());
        assert!(parse("tan(x)").is_err());
    }

    #[test]
    fn missing_variable() {
        assert!(matches!(
            parse("x3").unwrap().eval(&[1.0, 2.0]),
            Err(ExprError::MissingVariable { index: 3, .. })
        ));
    }

    #[test]
    fn printer_round_trip() {
        for src in ["-x^2", "2^3^2", "sqrt(1-x1)*x2/3", "1e-7 - -x", "exp(ln(x))"] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(parse("x )"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { offset: 0, .. })));
    }
}
