//! A small arithmetic language for user-supplied fields.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right associative
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names are `x1..xn`, `t`, `tau1..taud`, `s`, and the constants `pi` and
//! `e`. Functions are `sin cos tan exp log sqrt tanh abs`, one argument
//! each. There are no conditionals.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub message: String,
    /// Byte offset into the source text.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at offset {})", self.message, self.offset)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    State(usize),
    Param(usize),
    Time,
    Scalar,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values bound to the names of an expression.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vars<'a> {
    pub x: &'a [f64],
    pub t: f64,
    pub tau: &'a [f64],
    pub s: f64,
}

impl Expr {
    pub fn eval(&self, v: &Vars) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::State(i) => v.x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Param(i) => v.tau.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Time => v.t,
            Expr::Scalar => v.s,
            Expr::Neg(a) => -a.eval(v),
            Expr::Add(a, b) => a.eval(v) + b.eval(v),
            Expr::Sub(a, b) => a.eval(v) - b.eval(v),
            Expr::Mul(a, b) => a.eval(v) * b.eval(v),
            Expr::Div(a, b) => a.eval(v) / b.eval(v),
            Expr::Pow(a, b) => pow(a.eval(v), b.eval(v)),
            Expr::Call(f, a) => f.apply(a.eval(v)),
        }
    }

    /// Whether any `tau` name occurs.
    pub fn mentions_param(&self) -> bool {
        match self {
            Expr::Param(_) => true,
            Expr::Num(_) | Expr::State(_) | Expr::Time | Expr::Scalar => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.mentions_param(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.mentions_param() || b.mentions_param(),
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Which names an expression may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub states: usize,
    pub params: usize,
    pub time: bool,
    pub scalar: bool,
}

impl Scope {
    /// `x1..xn`, `t` and `tau1..taud`.
    pub fn field(states: usize, params: usize) -> Self {
        Scope {
            states,
            params,
            time: true,
            scalar: false,
        }
    }

    /// Only `s`, for comparison functions.
    pub fn scalar() -> Self {
        Scope {
            states: 0,
            params: 0,
            time: false,
            scalar: true,
        }
    }

    /// Only `t`, for parameter paths and inputs of time.
    pub fn time() -> Self {
        Scope {
            states: 0,
            params: 0,
            time: true,
            scalar: false,
        }
    }

    /// Every indexed name.
    pub fn any() -> Self {
        Scope {
            states: usize::MAX,
            params: usize::MAX,
            time: true,
            scalar: true,
        }
    }
}

pub fn parse_expression(text: &str, scope: Scope) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope,
        len: text.len(),
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(tok) => Err(ParseError {
            message: format!("unexpected {}", tok.kind),
            offset: tok.offset,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Name(String),
    Op(char),
    Open,
    Close,
    Comma,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Name(n) => write!(f, "'{n}'"),
            Kind::Op(c) => write!(f, "'{c}'"),
            Kind::Open => f.write_str("'('"),
            Kind::Close => f.write_str("')'"),
            Kind::Comma => f.write_str("','"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
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
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v = lit.parse::<f64>().map_err(|_| ParseError {
                message: format!("malformed number '{lit}'"),
                offset: start,
            })?;
            out.push(Token {
                kind: Kind::Num(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Name(text[start..i].to_string()),
                offset: start,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => Kind::Op(c),
                '(' => Kind::Open,
                ')' => Kind::Close,
                ',' => Kind::Comma,
                _ => {
                    let ch = text[i..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        message: format!("unexpected character '{ch}'"),
                        offset: i,
                    });
                }
            };
            out.push(Token { kind, offset: i });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Scope,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn at_op(&self, op: char) -> bool {
        matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op)
    }

    fn end_error(&self, what: &str) -> ParseError {
        ParseError {
            message: format!("unexpected end of input, expected {what}"),
            offset: self.len,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.at_op('+') {
                self.pos += 1;
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.at_op('-') {
                self.pos += 1;
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.at_op('*') {
                self.pos += 1;
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.at_op('/') {
                self.pos += 1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.at_op('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.at_op('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.at_op('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or_else(|| self.end_error("a value"))?;
        match tok.kind {
            Kind::Num(v) => Ok(Expr::Num(v)),
            Kind::Open => {
                let e = self.expr()?;
                self.close(tok.offset)?;
                Ok(e)
            }
            Kind::Name(name) => {
                if let Some(f) = Func::from_name(&name) {
                    return self.call(f, &name, tok.offset);
                }
                if matches!(
                    self.peek(),
                    Some(Token {
                        kind: Kind::Open,
                        ..
                    })
                ) {
                    return Err(ParseError {
                        message: format!("unknown function '{name}'"),
                        offset: tok.offset,
                    });
                }
                self.variable(&name, tok.offset)
            }
            other => Err(ParseError {
                message: format!("unexpected {other}"),
                offset: tok.offset,
            }),
        }
    }

    fn close(&mut self, open_at: usize) -> Result<(), ParseError> {
        match self.next() {
            Some(Token {
                kind: Kind::Close, ..
            }) => Ok(()),
            Some(t) => Err(ParseError {
                message: format!("expected ')', found {}", t.kind),
                offset: t.offset,
            }),
            None => Err(ParseError {
                message: format!("unclosed '(' opened at offset {open_at}"),
                offset: self.len,
            }),
        }
    }

    fn call(&mut self, f: Func, name: &str, at: usize) -> Result<Expr, ParseError> {
        match self.next() {
            Some(Token {
                kind: Kind::Open,
                offset,
            }) => {
                if matches!(
                    self.peek(),
                    Some(Token {
                        kind: Kind::Close,
                        ..
                    })
                ) {
                    return Err(ParseError {
                        message: format!("{name} takes 1 argument, got 0"),
                        offset: at,
                    });
                }
                let arg = self.expr()?;
                if matches!(
                    self.peek(),
                    Some(Token {
                        kind: Kind::Comma,
                        ..
                    })
                ) {
                    let mut n = 1;
                    while matches!(
                        self.peek(),
                        Some(Token {
                            kind: Kind::Comma,
                            ..
                        })
                    ) {
                        self.pos += 1;
                        self.expr()?;
                        n += 1;
                    }
                    return Err(ParseError {
                        message: format!("{name} takes 1 argument, got {n}"),
                        offset: at,
                    });
                }
                self.close(offset)?;
                Ok(Expr::Call(f, Box::new(arg)))
            }
            _ => Err(ParseError {
                message: format!("function '{name}' needs an argument in parentheses"),
                offset: at,
            }),
        }
    }

    fn variable(&self, name: &str, at: usize) -> Result<Expr, ParseError> {
        let unknown = || ParseError {
            message: format!("unknown identifier '{name}'"),
            offset: at,
        };
        let indexed = |prefix: &str, limit: usize| -> Option<Result<usize, ParseError>> {
            let digits = name.strip_prefix(prefix)?;
            if digits.is_empty()
                || !digits.bytes().all(|b| b.is_ascii_digit())
                || digits.starts_with('0')
            {
                return None;
            }
            let i: usize = digits.parse().ok()?;
            Some(if i <= limit {
                Ok(i - 1)
            } else {
                Err(ParseError {
                    message: format!(
                        "'{name}' is out of range; only {prefix}1..{prefix}{limit} exist"
                    ),
                    offset: at,
                })
            })
        };
        match name {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            "t" if self.scope.time => return Ok(Expr::Time),
            "s" if self.scope.scalar => return Ok(Expr::Scalar),
            _ => {}
        }
        if let Some(r) = indexed("tau", self.scope.params) {
            return r.map(Expr::Param);
        }
        if let Some(r) = indexed("x", self.scope.states) {
            return r.map(Expr::State);
        }
        Err(unknown())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: &[f64], t: f64, tau: &[f64]) -> f64 {
        parse_expression(text, Scope::any())
            .unwrap()
            .eval(&Vars { x, t, tau, s: 0.0 })
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0, &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], 0.0, &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], 0.0, &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[], 0.0, &[]), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[], 0.0, &[]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[], 0.0, &[]), -4.0);
        assert_eq!(ev("1.5e2 + .5", &[], 0.0, &[]), 150.5);
    }

    #[test]
    fn zero_is_constant() {
        assert_eq!(ev("0", &[3.0], 1.0, &[]), 0.0);
    }

    #[test]
    fn scalar_field() {
        let e = parse_expression("x1/sqrt(1+x1^2)*(1-90*tau1)", Scope::field(1, 1)).unwrap();
        for (x, tau) in [(0.5f64, 0.1), (-3.0, 0.9)] {
            let expect = x / (1.0 + x * x).sqrt() * (1.0 - 90.0 * tau);
            let got = e.eval(&Vars {
                x: &[x],
                t: 0.0,
                tau: &[tau],
                s: 0.0,
            });
            assert!((got - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("1 + foo", Scope::field(1, 0)).unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(e.message.contains("unknown identifier"));
        let e = parse_expression("x3", Scope::field(2, 0)).unwrap_err();
        assert!(e.message.contains("out of range"));
        let e = parse_expression("sin(1, 2)", Scope::any()).unwrap_err();
        assert!(e.message.contains("takes 1 argument, got 2"));
        let e = parse_expression("sin()", Scope::any()).unwrap_err();
        assert!(e.message.contains("got 0"));
        let e = parse_expression("(1 + 2", Scope::any()).unwrap_err();
        assert!(e.message.contains("unclosed"));
        let e = parse_expression("1 $ 2", Scope::any()).unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(parse_expression("t", Scope::scalar()).is_err());
        assert!(parse_expression("", Scope::any()).is_err());
        assert!(parse_expression("2 3", Scope::any()).is_err());
        assert!(parse_expression("x0", Scope::any()).is_err());
        assert!(parse_expression("foo(1)", Scope::any()).is_err());
    }
}
