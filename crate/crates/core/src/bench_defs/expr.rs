//! Objective-function expressions.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' digits                    1-based, x0 is rejected
//! func    := sqrt | sin | cos | ln | log | exp | asinh | arcsinh | abs | trisum
//! ```
//!
//! `-x1^2` parses as `-(x1^2)`. `trisum(x)` is the triangular sum
//! `1 + 2 + ... + x`, evaluated in closed form as `x(x+1)/2`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Sin,
    Cos,
    Ln,
    Exp,
    Asinh,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 1-based variable index.
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    TriangularSum(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    ZeroToNegativePower,
    NegativeBaseFractionalPower,
    /// Overflow to infinity in an otherwise valid operation.
    Overflow,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::DivisionByZero => "div-by-zero",
            ViolationKind::LogNonPositive => "log-nonpositive",
            ViolationKind::SqrtNegative => "sqrt-negative",
            ViolationKind::ZeroToNegativePower => "0^negative",
            ViolationKind::NegativeBaseFractionalPower => "negative^fractional",
            ViolationKind::Overflow => "overflow",
        })
    }
}

/// The point lies outside the domain of the expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("domain violation: {kind}")]
pub struct DomainViolation {
    pub kind: ViolationKind,
}

fn violation(kind: ViolationKind) -> DomainViolation {
    DomainViolation { kind }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("expected {expected} at {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("variable index 0 at {pos}; variables are numbered from x1")]
    ZeroVariable { pos: usize },
    #[error("invalid number `{text}` at {pos}")]
    BadNumber { text: String, pos: usize },
    #[error("trailing input at {pos}")]
    Trailing { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match *self {
            ParseError::UnexpectedChar { pos, .. }
            | ParseError::Expected { pos, .. }
            | ParseError::UnknownFunction { pos, .. }
            | ParseError::ZeroVariable { pos }
            | ParseError::BadNumber { pos, .. }
            | ParseError::Trailing { pos } => pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Var(usize),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v = s.parse::<f64>().map_err(|_| ParseError::BadNumber {
                text: s.to_owned(),
                pos: start,
            })?;
            out.push((Token::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word.strip_prefix('x') {
                Some(digits) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
                    let idx: usize = digits.parse().map_err(|_| ParseError::BadNumber {
                        text: word.to_owned(),
                        pos: start,
                    })?;
                    if idx == 0 {
                        return Err(ParseError::ZeroVariable { pos: start });
                    }
                    Token::Var(idx)
                }
                _ => Token::Ident(word.to_owned()),
            };
            out.push((tok, start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            _ => {
                let ch = text[start..].chars().next().unwrap_or(c);
                return Err(ParseError::UnexpectedChar { ch, pos: start });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |&(_, p)| p)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, tok: Token, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Expected {
                expected,
                pos: self.offset(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => {
                // a negated literal stays a literal
                if let (Some(Token::Num(v)), false) = (self.peek().cloned(), self.next_is_pow()) {
                    self.pos += 1;
                    return Ok(Expr::Const(-v));
                }
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn next_is_pow(&self) -> bool {
        matches!(self.tokens.get(self.pos + 1), Some((Token::Op('^'), _)))
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.offset();
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(ParseError::Expected {
                expected: "operand",
                pos,
            });
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Var(i) => Ok(Expr::Var(i)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(e)
            }
            Token::Ident(name) if name == "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            Token::Ident(name) => {
                let op = match name.as_str() {
                    "sqrt" => Some(UnaryOp::Sqrt),
                    "sin" => Some(UnaryOp::Sin),
                    "cos" => Some(UnaryOp::Cos),
                    "ln" | "log" => Some(UnaryOp::Ln),
                    "exp" => Some(UnaryOp::Exp),
                    "asinh" | "arcsinh" => Some(UnaryOp::Asinh),
                    "abs" => Some(UnaryOp::Abs),
                    "trisum" => None,
                    _ => return Err(ParseError::UnknownFunction { name, pos }),
                };
                self.expect(Token::LParen, "`(`")?;
                let arg = Box::new(self.expr()?);
                self.expect(Token::RParen, "`)`")?;
                Ok(match op {
                    Some(op) => Expr::Unary(op, arg),
                    None => Expr::TriangularSum(arg),
                })
            }
            Token::Op(_) | Token::RParen => Err(ParseError::Expected {
                expected: "operand",
                pos,
            }),
        }
    }
}

/// Parses an expression in the grammar documented at the top of this module.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ParseError::Trailing { pos: p.offset() });
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

fn finite(v: f64) -> Result<f64, DomainViolation> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(violation(ViolationKind::Overflow))
    }
}

impl Expr {
    /// Evaluates at `point`, where `point[i - 1]` is the value of `x<i>`.
    ///
    /// # Panics
    ///
    /// If the expression references a variable beyond `point.len()`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainViolation> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => Ok(point[*i - 1]),
            Expr::Unary(op, a) => {
                let a = a.eval(point)?;
                let v = match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sqrt if a < 0.0 => return Err(violation(ViolationKind::SqrtNegative)),
                    UnaryOp::Sqrt => a.sqrt(),
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Ln if a <= 0.0 => return Err(violation(ViolationKind::LogNonPositive)),
                    UnaryOp::Ln => a.ln(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Asinh => a.asinh(),
                    UnaryOp::Abs => a.abs(),
                };
                finite(v)
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(point)?;
                let b = b.eval(point)?;
                let v = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div if b == 0.0 => return Err(violation(ViolationKind::DivisionByZero)),
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow if a == 0.0 && b < 0.0 => {
                        return Err(violation(ViolationKind::ZeroToNegativePower))
                    }
                    BinaryOp::Pow if a < 0.0 && b.fract() != 0.0 => {
                        return Err(violation(ViolationKind::NegativeBaseFractionalPower))
                    }
                    BinaryOp::Pow => a.powf(b),
                };
                finite(v)
            }
            Expr::TriangularSum(a) => {
                let a = a.eval(point)?;
                finite(a * (a + 1.0) / 2.0)
            }
        }
    }

    /// Largest variable index referenced, 0 for a constant expression.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => *i,
            Expr::Unary(_, a) | Expr::TriangularSum(a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) | Expr::TriangularSum(a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Ln => "ln",
            UnaryOp::Exp => "exp",
            UnaryOp::Asinh => "asinh",
            UnaryOp::Abs => "abs",
        })
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form that parses back to an equal expression.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-({a}))"),
            Expr::Unary(op, a) => write!(f, "{op}({a})"),
            Expr::TriangularSum(a) => write!(f, "trisum({a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => '+',
                    BinaryOp::Sub => '-',
                    BinaryOp::Mul => '*',
                    BinaryOp::Div => '/',
                    BinaryOp::Pow => '^',
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(text: &str, point: &[f64]) -> Result<f64, DomainViolation> {
        parse_expression(text).unwrap().eval(point)
    }

    #[test]
    fn simple_formulas() {
        assert_eq!(eval("x1^3+x1^2+x1", &[1.0]), Ok(3.0));
        assert_eq!(eval("6*sin(x1)*cos(x2)", &[0.0, 1.234]), Ok(0.0));
        assert_eq!(eval("1.57+24.3*x4", &[9.0, 9.0, 9.0, 0.0]), Ok(1.57));
        assert_eq!(eval("8/(2+x1^2+x2^2)", &[0.0, 0.0]), Ok(4.0));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-x1^2", &[3.0]), Ok(-9.0));
        assert_eq!(eval("2^3^2", &[]), Ok(512.0));
        assert_eq!(eval("x1^-2", &[2.0]), Ok(0.25));
        assert_eq!(eval("10-4-3", &[]), Ok(3.0));
        assert_eq!(eval("12/3/2", &[]), Ok(2.0));
        assert_eq!(eval("-2^2", &[]), Ok(-4.0));
        assert_eq!(eval("1e-3*1E2", &[]), Ok(0.1));
        assert_eq!(eval("2*pi", &[]), Ok(2.0 * std::f64::consts::PI));
    }

    #[test]
    fn triangular_sum_matches_loop() {
        let e = parse_expression("trisum(x1)").unwrap();
        assert_eq!(e.eval(&[50.0]), Ok(1275.0));
        for k in 1..=120u32 {
            let brute: u32 = (1..=k).sum();
            assert_eq!(e.eval(&[f64::from(k)]), Ok(f64::from(brute)));
        }
    }

    #[test]
    fn domain_violations() {
        let k5 = parse_expression("3+2.13*ln(x5)").unwrap();
        assert_eq!(
            k5.eval(&[0.0, 0.0, 0.0, 0.0, -1.0]).unwrap_err().kind,
            ViolationKind::LogNonPositive
        );
        assert_eq!(eval("1/x1", &[0.0]).unwrap_err().kind, ViolationKind::DivisionByZero);
        assert_eq!(eval("sqrt(x1)", &[-1.0]).unwrap_err().kind, ViolationKind::SqrtNegative);
        assert_eq!(eval("x1^(-4)", &[0.0]).unwrap_err().kind, ViolationKind::ZeroToNegativePower);
        assert_eq!(
            eval("x1^0.5", &[-1.0]).unwrap_err().kind,
            ViolationKind::NegativeBaseFractionalPower
        );
        assert_eq!(eval("exp(x1)", &[1000.0]).unwrap_err().kind, ViolationKind::Overflow);
        assert_eq!(eval("x1^3", &[-2.0]), Ok(-8.0));
        assert_eq!(eval("x1^x2", &[0.0, 0.0]), Ok(1.0));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_expression("x1 + foo(x2)"),
            Err(ParseError::UnknownFunction { pos: 5, .. })
        ));
        assert!(matches!(parse_expression("x0+1"), Err(ParseError::ZeroVariable { pos: 0 })));
        assert!(matches!(parse_expression("x1 + "), Err(ParseError::Expected { pos: 5, .. })));
        assert!(matches!(parse_expression("(x1"), Err(ParseError::Expected { pos: 3, .. })));
        assert!(matches!(parse_expression("x1 x2"), Err(ParseError::Trailing { pos: 3 })));
        assert!(matches!(
            parse_expression("x1 # 2"),
            Err(ParseError::UnexpectedChar { ch: '#', pos: 3 })
        ));
        assert_eq!(parse_expression("x1 + foo(x2)").unwrap_err().position(), 5);
    }

    #[test]
    fn max_var() {
        assert_eq!(parse_expression("x1*x3+x10").unwrap().max_var(), 10);
        assert_eq!(parse_expression("2+3").unwrap().max_var(), 0);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Expr::Const),
            (1usize..4).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                (
                    prop_oneof![
                        Just(UnaryOp::Neg),
                        Just(UnaryOp::Sin),
                        Just(UnaryOp::Cos),
                        Just(UnaryOp::Exp),
                        Just(UnaryOp::Abs),
                        Just(UnaryOp::Sqrt),
                    ],
                    inner.clone()
                )
                    .prop_map(|(op, a)| Expr::Unary(op, Box::new(a))),
                (
                    prop_oneof![
                        Just(BinaryOp::Add),
                        Just(BinaryOp::Sub),
                        Just(BinaryOp::Mul),
                        Just(BinaryOp::Div),
                        Just(BinaryOp::Pow),
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr(), p in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let back = parse_expression(&e.to_string()).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.eval(&p), e.eval(&p));
        }

        #[test]
        fn eval_never_returns_non_finite(e in arb_expr(), p in proptest::collection::vec(-3.0f64..3.0, 3)) {
            if let Ok(v) = e.eval(&p) {
                prop_assert!(v.is_finite());
            }
        }
    }
}
