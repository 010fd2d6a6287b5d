//! A small arithmetic language for potentials and profiles in scenario files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Names are chart coordinates or the constants `pi` and `e`. Functions are
//! `exp ln sqrt sin cos tan sinh cosh tanh atan atan2 pow`.

use std::fmt;
use std::sync::Arc;

use hkbundle_core::{ChartPoint, Field, GeomError, Jet2, ScalarField};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    /// 1-based column in the source string.
    pub column: usize,
    pub message: String,
}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        column,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Atan2,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            "atan2" => Func::Atan2,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Atan2 | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Parsed expression. Variables hold an index into the coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) => out.push((Tok::Num(v), col)),
                Err(_) => return err(col, format!("bad number {text:?}")),
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Name(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else if c == '−' {
            out.push((Tok::Op('-'), col));
            i += 1;
        } else if c == '×' {
            out.push((Tok::Op('*'), col));
            i += 1;
        } else if c == '÷' {
            out.push((Tok::Op('/'), col));
            i += 1;
        } else {
            return err(col, format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, c)| *c)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.eat(op) {
            Ok(())
        } else {
            err(self.column(), format!("expected {op:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let col = self.column();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return err(col, "unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => err(col, format!("unexpected {c:?}")),
            Tok::Name(name) => {
                if self.eat('(') {
                    let Some(f) = Func::lookup(&name) else {
                        return err(col, format!("unknown function {name:?}"));
                    };
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != f.arity() {
                        return err(col, format!("{name} takes {} argument(s), got {}", f.arity(), args.len()));
                    }
                    return Ok(Expr::Call(f, args));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => err(col, format!("unknown name {name:?}; coordinates are {}", self.vars.join(", "))),
                }
            }
        }
    }
}

/// Parse `src` with the given coordinate names.
pub fn parse(src: &str, vars: &[String]) -> Result<Expr, ExprError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end: src.chars().count() + 1,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return err(p.column(), "trailing input");
    }
    Ok(e)
}

impl Expr {
    fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.constant().map(|v| -v),
            Expr::Add(a, b) => Some(a.constant()? + b.constant()?),
            Expr::Sub(a, b) => Some(a.constant()? - b.constant()?),
            Expr::Mul(a, b) => Some(a.constant()? * b.constant()?),
            Expr::Div(a, b) => Some(a.constant()? / b.constant()?),
            Expr::Pow(a, b) => Some(a.constant()?.powf(b.constant()?)),
            _ => None,
        }
    }

    /// Evaluate as a second-order jet at `p`.
    pub fn eval(&self, p: &ChartPoint) -> Result<Jet2, GeomError> {
        Ok(match self {
            Expr::Num(v) => p.constant(*v),
            Expr::Var(i) => p.lift(*i),
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => a.eval(p)?.try_div(&b.eval(p)?)?,
            Expr::Pow(a, b) => power(&a.eval(p)?, b, p)?,
            Expr::Call(f, args) => {
                let x = args[0].eval(p)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => x.try_ln()?,
                    Func::Sqrt => x.try_sqrt()?,
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.sin().try_div(&x.cos())?,
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Atan => x.atan(),
                    Func::Atan2 => x.atan2(&args[1].eval(p)?)?,
                    Func::Pow => power(&x, &args[1], p)?,
                }
            }
        })
    }

    /// Compile into a scalar field on a chart of dimension `dim`.
    pub fn into_field(self, dim: usize) -> ScalarField {
        let e = Arc::new(self);
        Field::new(dim, move |p: &ChartPoint| e.eval(p))
    }
}

fn power(base: &Jet2, exponent: &Expr, p: &ChartPoint) -> Result<Jet2, GeomError> {
    match exponent.constant() {
        Some(k) if k.fract() == 0.0 && k.abs() <= 64.0 => Ok(base.powi(k as i32)),
        Some(k) => base.try_powf(k),
        None => Ok((exponent.eval(p)? * base.try_ln()?).exp()),
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

/// Parse and compile in one step.
pub fn compile(src: &str, vars: &[String]) -> Result<ScalarField, ExprError> {
    Ok(parse(src, vars)?.into_field(vars.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        ["x", "y"].iter().map(|s| s.to_string()).collect()
    }

    fn at(src: &str, x: f64, y: f64) -> Jet2 {
        compile(src, &vars()).unwrap().eval(&ChartPoint::new(vec![x, y]).unwrap()).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2 * 3", 0.0, 0.0).value(), 7.0);
        assert_eq!(at("2 ^ 3 ^ 2", 0.0, 0.0).value(), 512.0);
        assert_eq!(at("-2 ^ 2", 0.0, 0.0).value(), -4.0);
        assert_eq!(at("8 / 4 / 2", 0.0, 0.0).value(), 1.0);
        assert_eq!(at("x − y × 2 ÷ 4", 3.0, 2.0).value(), 2.0);
        assert!((at("2.5e-1 + pi", 0.0, 0.0).value() - 0.25 - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn derivatives_come_through() {
        let j = at("x^2 * y + sin(y)", 1.5, 0.3);
        assert!((j.grad()[0] - 2.0 * 1.5 * 0.3).abs() < 1e-14);
        assert!((j.grad()[1] - (2.25 + 0.3f64.cos())).abs() < 1e-14);
        assert!((j.hess(0, 1) - 3.0).abs() < 1e-14);
        let j = at("pow(x, y)", 2.0, 3.0);
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.grad()[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn errors_point_at_the_problem() {
        let e = parse("x + * y", &vars()).unwrap_err();
        assert_eq!(e.column, 5);
        let e = parse("x + z", &vars()).unwrap_err();
        assert_eq!(e.column, 5);
        assert!(e.message.contains("unknown name"));
        assert!(parse("sin(x, y)", &vars()).is_err());
        assert!(parse("(x + y", &vars()).is_err());
        assert!(parse("x y", &vars()).is_err());
        assert!(parse("foo(x)", &vars()).is_err());
        assert!(parse("x $ y", &vars()).is_err());
    }

    #[test]
    fn domain_errors_surface_at_evaluation() {
        let f = compile("ln(x)", &vars()).unwrap();
        assert!(f.eval(&ChartPoint::new(vec![-1.0, 0.0]).unwrap()).is_err());
    }
}
