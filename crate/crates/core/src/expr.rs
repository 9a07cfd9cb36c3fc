//! A small expression language for real functions of `(q, p)`.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | "q" | "p" | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "sqrt" | "abs" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!         | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `-q^2` is `-(q^2)` and `2^-1` is `2^(-1)`. There are no other names;
//! parameters must be substituted before parsing.

use std::fmt;

use thiserror::Error;

use crate::phase_space::{ClassicalFunction, GridFunction, PhaseSpaceGrid};

/// Largest accepted source text in bytes.
pub const MAX_SOURCE_LEN: usize = 64 * 1024;
/// Integer exponents up to this size use repeated multiplication.
const POWI_LIMIT: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    SqrtOfNegative,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::SqrtOfNegative => "square root of a negative number",
            EvalErrorKind::NegativeBaseFractionalPower => "negative base raised to a non-integer power",
            EvalErrorKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("unknown identifier {name:?} at line {line}, column {column}")]
    UnknownIdentifier { name: String, line: usize, column: usize },

    #[error("expression is {len} bytes, limit is {limit}")]
    TooLong { len: usize, limit: usize },

    #[error("{kind} at (q, p) = ({q}, {p}){}", point.map(|i| format!(", grid point {i}")).unwrap_or_default())]
    Eval { kind: EvalErrorKind, q: f64, p: f64, point: Option<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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

    fn apply(self, a: f64, b: f64) -> Result<f64, EvalErrorKind> {
        let v = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b == 0.0 {
                    return Err(EvalErrorKind::DivisionByZero);
                }
                a / b
            }
            BinOp::Pow => {
                let integral = b.fract() == 0.0;
                if a < 0.0 && !integral {
                    return Err(EvalErrorKind::NegativeBaseFractionalPower);
                }
                if integral && b.abs() <= POWI_LIMIT {
                    a.powi(b as i32)
                } else {
                    a.powf(b)
                }
            }
        };
        finite(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, x: f64) -> Result<f64, EvalErrorKind> {
        let v = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalErrorKind::SqrtOfNegative);
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
        };
        finite(v)
    }
}

fn finite(v: f64) -> Result<f64, EvalErrorKind> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalErrorKind::NonFinite)
    }
}

/// Syntax tree of a phase-space expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Q,
    P,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Q | Expr::P => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Tree-walking evaluation at one point.
    pub fn eval(&self, q: f64, p: f64) -> Result<f64, EvalErrorKind> {
        match self {
            Expr::Num(v) => finite(*v),
            Expr::Q => finite(q),
            Expr::P => finite(p),
            Expr::Neg(a) => Ok(-a.eval(q, p)?),
            Expr::Bin(op, a, b) => op.apply(a.eval(q, p)?, b.eval(q, p)?),
            Expr::Call(f, a) => f.apply(a.eval(q, p)?),
        }
    }

    pub fn compile(&self) -> CompiledExpr {
        let mut ops = Vec::new();
        self.emit(&mut ops);
        CompiledExpr { ops }
    }

    fn emit(&self, ops: &mut Vec<Op>) {
        match self {
            Expr::Num(v) => ops.push(Op::Num(*v)),
            Expr::Q => ops.push(Op::Q),
            Expr::P => ops.push(Op::P),
            Expr::Neg(a) => {
                a.emit(ops);
                ops.push(Op::Neg);
            }
            Expr::Bin(op, a, b) => {
                a.emit(ops);
                b.emit(ops);
                ops.push(Op::Bin(*op));
            }
            Expr::Call(f, a) => {
                a.emit(ops);
                ops.push(Op::Call(*f));
            }
        }
    }
}

/// Fully parenthesized; parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Q => f.write_str("q"),
            Expr::P => f.write_str("p"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Num(f64),
    Q,
    P,
    Neg,
    Bin(BinOp),
    Call(Func),
}

/// Postfix form of an [`Expr`] for repeated evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledExpr {
    ops: Vec<Op>,
}

impl CompiledExpr {
    pub fn eval(&self, q: f64, p: f64) -> Result<f64, EvalErrorKind> {
        let mut stack = Vec::with_capacity(16);
        self.eval_with(q, p, &mut stack)
    }

    fn eval_with(&self, q: f64, p: f64, stack: &mut Vec<f64>) -> Result<f64, EvalErrorKind> {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Num(v) => stack.push(finite(v)?),
                Op::Q => stack.push(finite(q)?),
                Op::P => stack.push(finite(p)?),
                Op::Neg => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(-a);
                }
                Op::Bin(b) => {
                    let y = stack.pop().expect("well-formed program");
                    let x = stack.pop().expect("well-formed program");
                    stack.push(b.apply(x, y)?);
                }
                Op::Call(f) => {
                    let a = stack.pop().expect("well-formed program");
                    stack.push(f.apply(a)?);
                }
            }
        }
        Ok(stack.pop().expect("well-formed program"))
    }
}

/// Evaluates `e` at every grid point.
pub fn evaluate_on_grid(e: &Expr, grid: &PhaseSpaceGrid) -> Result<ClassicalFunction, ExprError> {
    let prog = e.compile();
    let mut stack = Vec::with_capacity(16);
    let mut out = Vec::with_capacity(grid.n_points());
    for (i, (q, p)) in grid.points().enumerate() {
        let v = prog
            .eval_with(q, p, &mut stack)
            .map_err(|kind| ExprError::Eval { kind, q, p, point: Some(i) })?;
        out.push(v);
    }
    Ok(GridFunction::from_vec_unchecked(out))
}

/// Parses and evaluates in one step.
pub fn evaluate_source(src: &str, grid: &PhaseSpaceGrid) -> Result<ClassicalFunction, ExprError> {
    evaluate_on_grid(&parse(src)?, grid)
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    if src.len() > MAX_SOURCE_LEN {
        return Err(ExprError::TooLong { len: src.len(), limit: MAX_SOURCE_LEN });
    }
    let mut parser = Parser::new(src);
    let e = parser.expr()?;
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        return Err(parser.error(format!("unexpected {c:?}")));
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, ExprError> {
        parse(s)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn new(src: &str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, line: 1, column: 1 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, message: String) -> ExprError {
        ExprError::Syntax { line: self.line, column: self.column, message }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = match self.peek() {
                Some(f) => format!("{f:?}"),
                None => "end of input".to_string(),
            };
            Err(self.error(format!("expected {c:?}, found {found}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::bin(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected {c:?}"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let (line, column, start) = (self.line, self.column, self.pos);
        let digits = |p: &mut Self| {
            let mut n = 0;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.bump();
                n += 1;
            }
            n
        };
        let mut mantissa = digits(self);
        if self.peek() == Some('.') {
            self.bump();
            mantissa += digits(self);
        }
        if mantissa == 0 {
            return Err(ExprError::Syntax { line, column, message: "malformed number".into() });
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if digits(self) == 0 {
                return Err(self.error("missing exponent digits".into()));
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(ExprError::Syntax { line, column, message: format!("number {text} is out of range") }),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let (line, column, start) = (self.line, self.column, self.pos);
        while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "q" => Ok(Expr::Q),
            "p" => Ok(Expr::P),
            _ => match Func::from_name(&name) {
                Some(f) => {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Call(f, Box::new(arg)))
                }
                None => Err(ExprError::UnknownIdentifier { name, line, column }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{Boundary, HamiltonianPreset};

    fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    #[test]
    fn precedence() {
        let e = parse("(q^2 + p^2)/2").unwrap();
        let want = Expr::bin(
            BinOp::Div,
            Expr::bin(BinOp::Add, Expr::bin(BinOp::Pow, Expr::Q, num(2.0)), Expr::bin(BinOp::Pow, Expr::P, num(2.0))),
            num(2.0),
        );
        assert_eq!(e, want);
        assert_eq!(parse("-q^2").unwrap(), Expr::Neg(Box::new(Expr::bin(BinOp::Pow, Expr::Q, num(2.0)))));
        assert_eq!(
            parse("2^3^2").unwrap(),
            Expr::bin(BinOp::Pow, num(2.0), Expr::bin(BinOp::Pow, num(3.0), num(2.0)))
        );
        assert_eq!(parse("2^-1").unwrap().eval(0.0, 0.0), Ok(0.5));
        assert_eq!(parse("1 - 2 - 3").unwrap().eval(0.0, 0.0), Ok(-4.0));
        assert_eq!(parse("8 / 4 / 2").unwrap().eval(0.0, 0.0), Ok(1.0));
        assert_eq!(parse("1.5e1 + .5").unwrap().eval(0.0, 0.0), Ok(15.5));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("sin(q") {
            Err(ExprError::Syntax { line: 1, column: 6, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("0.5*lambda*q") {
            Err(ExprError::UnknownIdentifier { name, column: 5, .. }) => assert_eq!(name, "lambda"),
            other => panic!("{other:?}"),
        }
        match parse("q +\n  * p") {
            Err(ExprError::Syntax { line: 2, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("q p"), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("1e"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("1e999"), Err(ExprError::Syntax { .. })));
        let long = "1+".repeat(MAX_SOURCE_LEN / 2) + "1";
        assert!(matches!(parse(&long), Err(ExprError::TooLong { .. })));
    }

    #[test]
    fn evaluation_errors() {
        let err = |s: &str| parse(s).unwrap().eval(-1.0, 0.0).unwrap_err();
        assert_eq!(err("1/p"), EvalErrorKind::DivisionByZero);
        assert_eq!(err("sqrt(q)"), EvalErrorKind::SqrtOfNegative);
        assert_eq!(err("q^0.5"), EvalErrorKind::NegativeBaseFractionalPower);
        assert_eq!(err("exp(1000)"), EvalErrorKind::NonFinite);
        assert_eq!(parse("q^3").unwrap().eval(-1.0, 0.0), Ok(-1.0));
    }

    #[test]
    fn grid_evaluation() {
        let grid = PhaseSpaceGrid::new((-1.0, 1.0), (-4.0, 4.0), 4, 8, Boundary::Periodic).unwrap();
        let one = evaluate_source("1", &grid).unwrap();
        assert!(one.values().iter().all(|v| *v == 1.0));
        let qp = parse("q*p").unwrap();
        assert_eq!(qp.eval(0.5, -2.0), Ok(-1.0));
        let k = grid.index(3, 2);
        assert_eq!(grid.point(k), (0.5, -2.0));
        assert_eq!(evaluate_on_grid(&qp, &grid).unwrap().values()[k], -1.0);
        let h = evaluate_source("(q^2+p^2)/2", &grid).unwrap();
        let table = HamiltonianPreset::Harmonic.tabulate(&grid);
        for (a, b) in h.values().iter().zip(table.values()) {
            assert!((a - b).abs() <= 1e-15);
        }
        match evaluate_source("1/q", &grid) {
            Err(ExprError::Eval { kind: EvalErrorKind::DivisionByZero, point: Some(i), q, .. }) => {
                assert_eq!(grid.point(i).0, 0.0);
                assert_eq!(q, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn printing_round_trips() {
        for s in ["(q^2 + p^2)/2", "-sin(q)*exp(-p^2/2)", "abs(q - 0.1)^1.5", "2^-q^2", "sqrt(1 + q*q)/3e-2"] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }
}
