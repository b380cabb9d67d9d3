//! A small expression language over the variables `x`, `y`, `z`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          right-associative
//! primary := number | "x" | "y" | "z" | "pi" | "e"
//!          | func "(" expr ")" | "(" expr ")"
//! func    := sin | cos | tan | exp | log | sqrt | abs | tanh | cosh | sinh
//! ```
//!
//! Numbers accept a decimal exponent (`1e5`, `2.5E-3`). There is no implicit
//! multiplication. `-2^2` is `-(2^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Cosh,
    Sinh,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Cosh,
        Func::Sinh,
    ];

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
            Func::Cosh => v.cosh(),
            Func::Sinh => v.sinh(),
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum FuncExpr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Neg(Box<FuncExpr>),
    Binary(BinOp, Box<FuncExpr>, Box<FuncExpr>),
    Call(Func, Box<FuncExpr>),
}

impl FuncExpr {
    pub fn parse(src: &str) -> Result<Self> {
        parse(src)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            FuncExpr::Num(v) => *v,
            FuncExpr::Var(Var::X) => x,
            FuncExpr::Var(Var::Y) => y,
            FuncExpr::Var(Var::Z) => z,
            FuncExpr::Const(Constant::Pi) => std::f64::consts::PI,
            FuncExpr::Const(Constant::E) => std::f64::consts::E,
            FuncExpr::Neg(a) => -a.eval(x, y, z),
            FuncExpr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x, y, z), b.eval(x, y, z));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            FuncExpr::Call(f, a) => f.apply(a.eval(x, y, z)),
        }
    }

    /// Like [`eval`](Self::eval) but reports NaN or infinite results.
    pub fn eval_checked(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let value = self.eval(x, y, z);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite { x, y, z, value })
        }
    }
}

/// Prints fully parenthesized binary operations; the output re-parses to the
/// same tree.
impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncExpr::Num(v) => write!(f, "{v:?}"),
            FuncExpr::Var(Var::X) => f.write_str("x"),
            FuncExpr::Var(Var::Y) => f.write_str("y"),
            FuncExpr::Var(Var::Z) => f.write_str("z"),
            FuncExpr::Const(Constant::Pi) => f.write_str("pi"),
            FuncExpr::Const(Constant::E) => f.write_str("e"),
            FuncExpr::Neg(a) => write!(f, "(-{a})"),
            FuncExpr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            FuncExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn peek_byte(&self, at: usize) -> Option<u8> {
        self.src.as_bytes().get(at).copied()
    }

    fn next_token(&mut self) -> Result<(usize, Tok)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek_byte(start) else {
            return Ok((start, Tok::End));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => {
                let mut end = start;
                while matches!(self.peek_byte(end), Some(b'0'..=b'9' | b'.')) {
                    end += 1;
                }
                if matches!(self.peek_byte(end), Some(b'e' | b'E')) {
                    let mut exp = end + 1;
                    if matches!(self.peek_byte(exp), Some(b'+' | b'-')) {
                        exp += 1;
                    }
                    if matches!(self.peek_byte(exp), Some(b'0'..=b'9')) {
                        end = exp;
                        while matches!(self.peek_byte(end), Some(b'0'..=b'9')) {
                            end += 1;
                        }
                    }
                }
                let text = &self.src[start..end];
                self.pos = end;
                match text.parse::<f64>() {
                    Ok(v) => Tok::Num(v),
                    Err(_) => return self.err(start, format!("malformed number '{text}'")),
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = start;
                while matches!(self.peek_byte(end), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
                    end += 1;
                }
                self.pos = end;
                Tok::Ident(self.src[start..end].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return self.err(start, format!("unexpected character '{ch}'"));
            }
        };
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut lexer = Lexer { src, pos: 0 };
        let (at, tok) = lexer.next_token()?;
        Ok(Self { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<()> {
        let (at, tok) = self.lexer.next_token()?;
        self.at = at;
        self.tok = tok;
        Ok(())
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.at,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match &self.tok {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }

    fn expr(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = FuncExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = FuncExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FuncExpr> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(FuncExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<FuncExpr> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(FuncExpr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self, context: &str) -> Result<()> {
        match self.tok {
            Tok::RParen => self.bump(),
            Tok::Comma => self.err(format!("wrong arity: {context} takes exactly one argument")),
            _ => self.err(format!("expected ')' but found {}", self.describe())),
        }
    }

    fn primary(&mut self) -> Result<FuncExpr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(FuncExpr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_rparen("a parenthesized group")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let leaf = match name.as_str() {
                    "x" => Some(FuncExpr::Var(Var::X)),
                    "y" => Some(FuncExpr::Var(Var::Y)),
                    "z" => Some(FuncExpr::Var(Var::Z)),
                    "pi" => Some(FuncExpr::Const(Constant::Pi)),
                    "e" => Some(FuncExpr::Const(Constant::E)),
                    _ => None,
                };
                if let Some(leaf) = leaf {
                    self.bump()?;
                    if self.tok == Tok::LParen {
                        return self.err(format!("'{name}' is not a function"));
                    }
                    return Ok(leaf);
                }
                let Some(func) = Func::ALL.into_iter().find(|f| f.name() == name) else {
                    return self.err(format!("unknown identifier '{name}'"));
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return self.err(format!("expected '(' after function '{name}'"));
                }
                self.bump()?;
                if self.tok == Tok::RParen {
                    return self.err(format!("wrong arity: {name} takes exactly one argument"));
                }
                let arg = self.expr()?;
                self.expect_rparen(&name)?;
                Ok(FuncExpr::Call(func, Box::new(arg)))
            }
            _ => self.err(format!("expected an operand but found {}", self.describe())),
        }
    }
}

/// Parses an expression; errors carry the byte offset of the offending token.
pub fn parse(src: &str) -> Result<FuncExpr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.err(format!("unexpected {} after complete expression", p.describe()));
    }
    Ok(e)
}

pub fn eval_expr(e: &FuncExpr, x: f64, y: f64, z: f64) -> f64 {
    e.eval(x, y, z)
}
