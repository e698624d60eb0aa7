//! Text expressions in the single variable `r`.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'r' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := exp | ln | sqrt | sin | cos | tan | sinh | cosh | tanh | atan
//! ```
//!
//! `^` binds tighter than unary minus, so `-r^2` is `-(r^2)` and `2^-1` is
//! `0.5`. Evaluation follows IEEE semantics: out-of-domain operations yield
//! NaN or infinities instead of errors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, NodeList, Result};
use crate::grid::{GridRef, RadialFunction};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
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
}

impl Function {
    pub const ALL: [Function; 10] = [
        Function::Exp,
        Function::Ln,
        Function::Sqrt,
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Sinh,
        Function::Cosh,
        Function::Tanh,
        Function::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sqrt => "sqrt",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Sinh => "sinh",
            Function::Cosh => "cosh",
            Function::Tanh => "tanh",
            Function::Atan => "atan",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Function::Exp => x.exp(),
            Function::Ln => x.ln(),
            Function::Sqrt => x.sqrt(),
            Function::Sin => x.sin(),
            Function::Cos => x.cos(),
            Function::Tan => x.tan(),
            Function::Sinh => x.sinh(),
            Function::Cosh => x.cosh(),
            Function::Tanh => x.tanh(),
            Function::Atan => x.atan(),
        }
    }
}

/// Expression tree. Every node owns exactly its operands.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    Var,
    Pi,
    Neg(Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Call(Function, Box<Expression>),
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn evaluate<T: Real>(&self, r: T) -> T {
        match self {
            Expression::Number(v) => T::lit(*v),
            Expression::Var => r,
            Expression::Pi => T::PI(),
            Expression::Neg(e) => -e.evaluate(r),
            Expression::Binary(op, a, b) => {
                let (x, y) = (a.evaluate(r), b.evaluate(r));
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                    BinaryOp::Pow => x.powf(y),
                }
            }
            Expression::Call(f, e) => f.apply(e.evaluate(r)),
        }
    }

    /// True when the tree does not mention `r`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Number(_) | Expression::Pi => true,
            Expression::Var => false,
            Expression::Neg(e) | Expression::Call(_, e) => e.is_constant(),
            Expression::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

/// Fully parenthesized; reparses to an equivalent tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Number(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
            Expression::Number(v) => write!(f, "{v:?}"),
            Expression::Var => f.write_str("r"),
            Expression::Pi => f.write_str("pi"),
            Expression::Neg(e) => write!(f, "(-{e})"),
            Expression::Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Expression::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

pub fn parse(text: &str) -> Result<Expression> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

pub fn evaluate<T: Real>(e: &Expression, r: T) -> T {
    e.evaluate(r)
}

/// Samples `e` on every node; fails listing all non-finite nodes.
pub fn sample_expression<T: Real>(e: &Expression, grid: &GridRef<T>) -> Result<RadialFunction<T>> {
    let f = RadialFunction::from_fn(grid, |r| e.evaluate(r));
    let bad = f.non_finite_nodes();
    if bad.is_empty() {
        Ok(f)
    } else {
        Err(Error::SingularSample(NodeList(bad)))
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

    fn error(&self, expected: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.peek() != Some(b')') {
            return Err(self.error("')'"));
        }
        self.pos += 1;
        Ok(())
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expression::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression> {
        const OPERAND: &str = "number, 'r', 'pi', function call or '('";
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "r" => Ok(Expression::Var),
                    "pi" => Ok(Expression::Pi),
                    _ => match Function::from_name(name) {
                        Some(func) => {
                            if self.peek() != Some(b'(') {
                                return Err(self.error("'(' after function name"));
                            }
                            self.pos += 1;
                            let arg = self.expr()?;
                            self.expect_close()?;
                            Ok(Expression::Call(func, Box::new(arg)))
                        }
                        None => {
                            self.pos = start;
                            Err(self.error(OPERAND))
                        }
                    },
                }
            }
            _ => Err(self.error(OPERAND)),
        }
    }

    fn digits(&mut self) -> usize {
        let s = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - s
    }

    fn number(&mut self) -> Result<Expression> {
        let start = self.pos;
        let mut count = self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += self.digits();
        }
        if count == 0 {
            self.pos = start;
            return Err(self.error("digits"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // not an exponent after all
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            expected: "number".into(),
        })?;
        if !value.is_finite() {
            return Err(Error::Syntax {
                offset: start,
                expected: "finite number".into(),
            });
        }
        Ok(Expression::Number(value))
    }
}

/// A real function of `r` that can be evaluated anywhere on the half-line.
///
/// Implemented by expressions, closures, centrifugal terms and (through
/// cubic interpolation) sampled functions.
pub trait RadialProfile<T: Real>: Sync {
    fn value_at(&self, r: T) -> T;

    fn sample(&self, grid: &GridRef<T>) -> RadialFunction<T> {
        RadialFunction::from_fn(grid, |r| self.value_at(r))
    }
}

impl<T: Real> RadialProfile<T> for Expression {
    fn value_at(&self, r: T) -> T {
        self.evaluate(r)
    }
}

impl<T: Real, F: Fn(T) -> T + Sync> RadialProfile<T> for F {
    fn value_at(&self, r: T) -> T {
        self(r)
    }
}

impl<T: Real> RadialProfile<T> for RadialFunction<T> {
    fn value_at(&self, r: T) -> T {
        self.grid().interpolate(self.values(), r)
    }

    fn sample(&self, grid: &GridRef<T>) -> RadialFunction<T> {
        if self.grid().same_as(grid) {
            self.clone()
        } else {
            RadialFunction::from_fn(grid, |r| self.value_at(r))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Scheme};

    fn eval(s: &str, r: f64) -> f64 {
        parse(s).unwrap().evaluate(r)
    }

    #[test]
    fn parses_and_evaluates() {
        assert_eq!(eval("1/(1+0.2*r)", 0.0), 1.0);
        assert_eq!(eval("r^2", 3.0), 9.0);
        assert_eq!(eval("ln(r)", 1.0), 0.0);
        assert!(!eval("1/r", 0.0).is_finite());
        assert!(eval("ln(r)", -1.0).is_nan());
        let s = parse("sinh(0.5)").unwrap();
        assert!(s.is_constant());
        assert!((s.evaluate(17.0f64) - 0.5210953054937474).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-r^2", 3.0), -9.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval("8 / 2 / 2", 0.0), 2.0);
        assert_eq!(eval("--r", 2.0), 2.0);
        assert_eq!(eval(" 2 * ( r + 1 ) ", 1.0), 4.0);
        assert!((eval("pi", 0.0) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(eval("1.5e-3*r", 2.0), 3e-3);
        assert_eq!(eval("atan(1)*4", 0.0), std::f64::consts::PI);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("2*+r") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse("foo(r)") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        match parse("(r+1") {
            Err(Error::Syntax { offset, expected }) => {
                assert_eq!(offset, 4);
                assert_eq!(expected, "')'");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("r r").is_err());
        assert!(parse("sin r").is_err());
        assert!(parse("1e999").is_err());
    }

    #[test]
    fn sampling() {
        let g = make_grid(1e-6, 40.0, 400, Scheme::Geometric).unwrap();
        let z = sample_expression(&parse("0").unwrap(), &g).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        sample_expression(&parse("1/(1+0.2*r)").unwrap(), &g).unwrap();
        let g = make_grid(0.5, 2.0, 31, Scheme::Uniform).unwrap();
        match sample_expression(&parse("1/(r-1)").unwrap(), &g) {
            Err(Error::SingularSample(nodes)) => assert_eq!(nodes.0, vec![10]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profiles() {
        let g = make_grid(0.5, 2.0, 40, Scheme::Uniform).unwrap();
        let closure = |r: f64| r * r;
        let sampled = RadialProfile::sample(&closure, &g);
        assert_eq!(sampled.at(0), 0.25);
        assert!((sampled.value_at(1.23) - 1.23 * 1.23).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expression> {
            let leaf = prop_oneof![
                (-5.0f64..5.0).prop_map(Expression::Number),
                Just(Expression::Var),
                Just(Expression::Pi),
            ];
            leaf.prop_recursive(5, 48, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|e| Expression::Neg(Box::new(e))),
                    (
                        prop_oneof![
                            Just(BinaryOp::Add),
                            Just(BinaryOp::Sub),
                            Just(BinaryOp::Mul),
                            Just(BinaryOp::Div),
                            Just(BinaryOp::Pow),
                        ],
                        inner.clone(),
                        inner.clone()
                    )
                        .prop_map(|(op, a, b)| Expression::Binary(op, Box::new(a), Box::new(b))),
                    (0..Function::ALL.len(), inner).prop_map(|(k, e)| Expression::Call(Function::ALL[k], Box::new(e))),
                ]
            })
        }

        fn same(a: f64, b: f64) -> bool {
            (a.is_nan() && b.is_nan()) || a == b
        }

        proptest! {
            #[test]
            fn print_parse_round_trip(e in arb_expr(), rs in proptest::collection::vec(-10.0f64..10.0, 100)) {
                let printed = e.to_string();
                let back = parse(&printed).unwrap();
                for r in rs {
                    prop_assert!(same(e.evaluate(r), back.evaluate(r)), "{} at {}", printed, r);
                }
            }

            #[test]
            fn product_binds_tighter_than_sum(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0) {
                let v = parse(&format!("{a:?}+{b:?}*{c:?}")).unwrap().evaluate(0.0);
                prop_assert_eq!(v, a + b * c);
                let w = parse(&format!("{a:?}-{b:?}/{c:?}^2")).unwrap().evaluate(0.0);
                prop_assert_eq!(w, a - b / c.powf(2.0));
            }
        }
    }
}
