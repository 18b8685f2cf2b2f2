//! Parser and evaluator for the function expression language.
//!
//! ```text
//! expr   := term (('+' | '-' | '−') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('-' | '−') factor | base ('^' ['-'] integer)?
//! base   := number | var | func '(' expr ')' | '(' expr ')'
//! var    := 'x' digit+          (x1 .. xn)
//! func   := exp | log | sin | cos | sqrt
//! number := digit+ ('.' digit*)? (('e' | 'E') ['+' | '-'] digit+)?
//! ```
//!
//! Literals are exact rationals, so `1/3` is the rational one third when the
//! expression is polynomial. Unary minus is accepted at factor level.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::{Dual, FunctionError, Jet, Polynomial, SmoothFunction};
use crate::exact::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Abstract syntax tree; variables are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Rational),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{}", format_rational(c)),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, k) => write!(f, "{a}^{k}"),
            Node::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(r) => format!("number {}", format_rational(r)),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> FunctionError {
    FunctionError::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, FunctionError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let int_part = &src[start..i];
            let mut frac_part = "";
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                let fs = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                frac_part = &src[fs..i];
            }
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(syntax(start, "malformed number"));
            }
            let mut exponent: i64 = 0;
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    if bytes[j] == b'-' {
                        sign = -1;
                    }
                    j += 1;
                }
                let es = j;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if es == j {
                    return Err(syntax(j, "missing exponent digits"));
                }
                exponent = sign
                    * src[es..j]
                        .parse::<i64>()
                        .map_err(|_| syntax(es, "exponent out of range"))?;
                if exponent.abs() > 400 {
                    return Err(syntax(es, "exponent out of range"));
                }
                i = j;
            }
            let digits = format!("{int_part}{frac_part}");
            let mantissa: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
            let scale = exponent - frac_part.len() as i64;
            let ten = BigInt::from(10);
            let value = if scale >= 0 {
                Rational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
            } else {
                Rational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
            };
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        if src[i..].starts_with('−') {
            out.push((Tok::Minus, start));
            i += '−'.len_utf8();
            continue;
        }
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = src[i..].chars().next().expect("in bounds");
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Node, FunctionError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, FunctionError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, FunctionError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let mut negative = false;
        if *self.peek() == Tok::Minus {
            self.bump();
            negative = true;
        }
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(r) if r.is_integer() => {
                let k = r
                    .to_integer()
                    .to_i32()
                    .filter(|k| k.abs() <= 1000)
                    .ok_or_else(|| syntax(at, "exponent too large"))?;
                Ok(Node::Pow(Box::new(base), if negative { -k } else { k }))
            }
            Tok::Num(_) => Err(syntax(at, "exponent must be an integer")),
            other => Err(syntax(
                at,
                format!("expected an integer exponent, found {}", describe(&other)),
            )),
        }
    }

    fn base(&mut self) -> Result<Node, FunctionError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(r) => Ok(Node::Const(r)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(at)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(syntax(
                            self.offset(),
                            format!("expected `(` after `{name}`"),
                        ));
                    }
                    let open = self.bump().1;
                    if *self.peek() == Tok::RParen {
                        return Err(FunctionError::Arity {
                            offset: at,
                            message: format!("`{name}` takes 1 argument, found 0"),
                        });
                    }
                    let arg = self.expr()?;
                    if *self.peek() == Tok::Comma {
                        let mut count = 1;
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            self.expr()?;
                            count += 1;
                        }
                        return Err(FunctionError::Arity {
                            offset: at,
                            message: format!("`{name}` takes 1 argument, found {count}"),
                        });
                    }
                    self.expect_rparen(open)?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let idx: usize = digits.parse().unwrap_or(0);
                        if idx >= 1 && idx <= self.n {
                            return Ok(Node::Var(idx - 1));
                        }
                        return Err(FunctionError::UnknownIdentifier {
                            offset: at,
                            name: format!("{name} (variables are x1..x{})", self.n),
                        });
                    }
                }
                Err(FunctionError::UnknownIdentifier { offset: at, name })
            }
            other => Err(syntax(at, format!("unexpected {}", describe(&other)))),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), FunctionError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => Err(syntax(
                self.offset(),
                format!("unclosed `(` opened at offset {open}"),
            )),
            other => {
                let msg = format!("expected `)`, found {}", describe(other));
                Err(syntax(self.offset(), msg))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Call(Func),
}

fn compile(node: &Node, out: &mut Vec<Op>) {
    match node {
        Node::Const(c) => out.push(Op::Const(to_f64(c))),
        Node::Var(i) => out.push(Op::Var(*i)),
        Node::Neg(a) => {
            compile(a, out);
            out.push(Op::Neg);
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(match node {
                Node::Add(..) => Op::Add,
                Node::Sub(..) => Op::Sub,
                Node::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Node::Pow(a, k) => {
            compile(a, out);
            out.push(Op::Pow(*k));
        }
        Node::Call(f, a) => {
            compile(a, out);
            out.push(Op::Call(*f));
        }
    }
}

fn to_polynomial(node: &Node, n: usize) -> Option<Polynomial> {
    Some(match node {
        Node::Const(c) => Polynomial::constant(n, c.clone()),
        Node::Var(i) => Polynomial::var(n, *i),
        Node::Neg(a) => to_polynomial(a, n)?.neg(),
        Node::Add(a, b) => to_polynomial(a, n)?.add(&to_polynomial(b, n)?),
        Node::Sub(a, b) => to_polynomial(a, n)?.sub(&to_polynomial(b, n)?),
        Node::Mul(a, b) => to_polynomial(a, n)?.mul(&to_polynomial(b, n)?),
        Node::Div(a, b) => {
            let den = to_polynomial(b, n)?;
            if den.degree() != 0 || den.is_zero() {
                return None;
            }
            let c = den.coefficient(&vec![0; n]);
            to_polynomial(a, n)?.scale(&(Rational::one() / c))
        }
        Node::Pow(a, k) if *k >= 0 => to_polynomial(a, n)?.pow(*k as u32),
        Node::Pow(..) | Node::Call(..) => return None,
    })
}

/// A parsed and compiled function of `x1..xn`.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    n: usize,
    root: Node,
    program: Vec<Op>,
    polynomial: Option<Polynomial>,
}

/// Parses `src` as a function of `n` variables.
pub fn parse_expression(src: &str, n: usize) -> Result<Expression, FunctionError> {
    if src.trim().is_empty() {
        return Err(syntax(src.len(), "empty expression"));
    }
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, n };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        let msg = format!("unexpected {}", describe(p.peek()));
        return Err(syntax(p.offset(), msg));
    }
    let mut program = Vec::new();
    compile(&root, &mut program);
    let polynomial = to_polynomial(&root, n);
    Ok(Expression {
        source: src.to_string(),
        n,
        root,
        program,
        polynomial,
    })
}

impl Expression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.root
    }

    fn eval_f64(&self, x: &[f64]) -> Result<f64, FunctionError> {
        let mut stack: Vec<f64> = Vec::with_capacity(8);
        for op in &self.program {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Var(i) => stack.push(x[*i]),
                Op::Call(f) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match f {
                        Func::Exp => a.exp(),
                        Func::Log => {
                            if a <= 0.0 {
                                return Err(FunctionError::Domain(format!("log of {a}")));
                            }
                            a.ln()
                        }
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Sqrt => {
                            if a < 0.0 {
                                return Err(FunctionError::Domain(format!("sqrt of {a}")));
                            }
                            a.sqrt()
                        }
                    });
                }
                Op::Neg => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(-a);
                }
                Op::Pow(k) => {
                    let a = stack.pop().expect("well-formed program");
                    if a == 0.0 && *k < 0 {
                        return Err(FunctionError::Domain("division by zero".into()));
                    }
                    stack.push(a.powi(*k));
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("well-formed program");
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => {
                            if b == 0.0 {
                                return Err(FunctionError::Domain("division by zero".into()));
                            }
                            a / b
                        }
                    });
                }
            }
        }
        let v = stack.pop().expect("well-formed program");
        if !v.is_finite() {
            return Err(FunctionError::Domain(format!("non-finite value at {x:?}")));
        }
        Ok(v)
    }

    fn eval_duals(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        let mut stack: Vec<Dual> = Vec::with_capacity(8);
        for op in &self.program {
            match op {
                Op::Const(c) => stack.push(Dual::constant(*c)),
                Op::Var(i) => stack.push(x[*i]),
                Op::Call(f) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match f {
                        Func::Exp => a.exp(),
                        Func::Log => a.ln()?,
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Sqrt => a.sqrt()?,
                    });
                }
                Op::Neg => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(a.neg());
                }
                Op::Pow(k) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(a.powi(*k)?);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("well-formed program");
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match op {
                        Op::Add => a.add(b),
                        Op::Sub => a.sub(b),
                        Op::Mul => a.mul(b),
                        _ => a.div(b)?,
                    });
                }
            }
        }
        let v = stack.pop().expect("well-formed program");
        if !v.is_finite() {
            return Err(FunctionError::Domain("non-finite derivative".into()));
        }
        Ok(v)
    }

    fn eval_jets(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        let mut stack: Vec<Jet> = Vec::with_capacity(8);
        for op in &self.program {
            match op {
                Op::Const(c) => stack.push(x[0].constant_like(*c)),
                Op::Var(i) => stack.push(x[*i].clone()),
                Op::Call(f) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match f {
                        Func::Exp => a.exp(),
                        Func::Log => a.ln()?,
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Sqrt => a.sqrt()?,
                    });
                }
                Op::Neg => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(a.neg());
                }
                Op::Pow(k) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(a.powi(*k)?);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("well-formed program");
                    let a = stack.pop().expect("well-formed program");
                    stack.push(match op {
                        Op::Add => a.add(&b),
                        Op::Sub => a.sub(&b),
                        Op::Mul => a.mul(&b),
                        _ => a.div(&b)?,
                    });
                }
            }
        }
        let v = stack.pop().expect("well-formed program");
        if !v.is_finite() {
            return Err(FunctionError::Domain("non-finite derivative".into()));
        }
        Ok(v)
    }
}

impl SmoothFunction for Expression {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        self.eval_f64(x)
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        self.eval_jets(x)
    }

    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        self.eval_duals(x)
    }

    fn as_polynomial(&self) -> Option<Polynomial> {
        self.polynomial.clone()
    }

    fn describe(&self) -> String {
        self.source.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    #[test]
    fn parses_example_functions() {
        let e = parse_expression("x1", 2).unwrap();
        assert_eq!(*e.ast(), Node::Var(0));
        let e = parse_expression("1/(1+x1+x2)", 2).unwrap();
        match e.ast() {
            Node::Div(num, den) => {
                assert_eq!(**num, Node::Const(int(1)));
                assert!(matches!(**den, Node::Add(..)));
            }
            other => panic!("unexpected tree {other}"),
        }
        assert!(e.as_polynomial().is_none());
        assert!((e.eval(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(
            parse_expression("x1 +", 2).unwrap_err(),
            FunctionError::Syntax {
                offset: 4,
                message: "unexpected end of input".into()
            }
        );
        assert!(matches!(
            parse_expression("x3 + 1", 2),
            Err(FunctionError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("2 * tan(x1)", 1),
            Err(FunctionError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("1 + sin(x1, x2)", 2),
            Err(FunctionError::Arity { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("(x1 + 1", 1),
            Err(FunctionError::Syntax { offset: 7, .. })
        ));
        assert!(matches!(
            parse_expression("x1^1.5", 1),
            Err(FunctionError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse_expression("x1 $ 2", 1),
            Err(FunctionError::Syntax { offset: 3, .. })
        ));
    }

    #[test]
    fn literals_are_exact() {
        let e = parse_expression("0.25*x1 + 1/3 − 2e-1", 1).unwrap();
        let p = e.as_polynomial().unwrap();
        assert_eq!(p.coefficient(&[1]), rat(1, 4));
        assert_eq!(p.coefficient(&[0]), rat(1, 3) - rat(1, 5));
    }

    #[test]
    fn polynomial_detection() {
        let p = parse_expression("-(x1 - x2)^2 / 2", 2)
            .unwrap()
            .as_polynomial()
            .unwrap();
        assert_eq!(p.coefficient(&[1, 1]), int(1));
        assert_eq!(p.coefficient(&[2, 0]), rat(-1, 2));
        assert!(parse_expression("x1^-1", 1)
            .unwrap()
            .as_polynomial()
            .is_none());
    }

    #[test]
    fn evaluation_domain_errors() {
        let e = parse_expression("log(x1)", 1).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(FunctionError::Domain(_))));
        let e = parse_expression("1/x1", 1).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(FunctionError::Domain(_))));
    }
}
