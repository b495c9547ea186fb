//! A small recursive-descent parser and evaluator for complex-valued
//! expressions in one real variable `x`.
//!
//! Grammar:
//! ```text
//! expr   = term {("+"|"-") term}
//! term   = factor {("*"|"/") factor}
//! factor = base ["^" base]            -- exponent must be an integer literal
//! base   = NUMBER | "x" | "pi" | "i" | IDENT "(" expr ")" | "(" expr ")" | "-" base
//! IDENT  = exp | cos | sin | sqrt | abs | re | im | conj
//! ```
//! Evaluation is complex throughout and deterministic in `x`.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Cos,
    Sin,
    Sqrt,
    Abs,
    Re,
    Im,
    Conj,
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    X,
    Pi,
    I,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// A parsed expression, evaluable at any `x`.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    source: String,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression, ExprError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expression {
            root,
            source: text.to_string(),
        })
    }

    pub fn eval(&self, x: f64) -> C64 {
        eval_node(&self.root, x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn eval_node(n: &Node, x: f64) -> C64 {
    match n {
        Node::Num(v) => C64::new(*v, 0.0),
        Node::X => C64::new(x, 0.0),
        Node::Pi => C64::new(PI, 0.0),
        Node::I => C64::new(0.0, 1.0),
        Node::Neg(a) => -eval_node(a, x),
        Node::Add(a, b) => eval_node(a, x) + eval_node(b, x),
        Node::Sub(a, b) => eval_node(a, x) - eval_node(b, x),
        Node::Mul(a, b) => eval_node(a, x) * eval_node(b, x),
        Node::Div(a, b) => eval_node(a, x) / eval_node(b, x),
        Node::Pow(a, k) => eval_node(a, x).powi(*k),
        Node::Call(f, a) => {
            let v = eval_node(a, x);
            match f {
                Func::Exp => v.exp(),
                Func::Cos => v.cos(),
                Func::Sin => v.sin(),
                Func::Sqrt => v.sqrt(),
                Func::Abs => C64::new(v.norm(), 0.0),
                Func::Re => C64::new(v.re, 0.0),
                Func::Im => C64::new(v.im, 0.0),
                Func::Conj => v.conj(),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Node::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Node::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let base = self.base()?;
        self.skip_ws();
        if self.eat(b'^') {
            let at = self.pos;
            let exponent = self.base()?;
            let k = integer_literal(&exponent).ok_or(ExprError {
                pos: at,
                msg: "exponent must be an integer literal".to_string(),
            })?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.base()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("expected a number, name, or '('")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_digit() || c == b'.')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        // exponent suffix like 1e-3
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            pos: start,
            msg: format!("invalid number literal '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "x" => return Ok(Node::X),
            "pi" => return Ok(Node::Pi),
            "i" => return Ok(Node::I),
            _ => {}
        }
        let func = match name {
            "exp" => Func::Exp,
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "re" => Func::Re,
            "im" => Func::Im,
            "conj" => Func::Conj,
            _ => {
                return Err(ExprError {
                    pos: start,
                    msg: format!("unknown name '{name}'"),
                })
            }
        };
        self.skip_ws();
        if !self.eat(b'(') {
            return Err(self.err("expected '(' after function name"));
        }
        let arg = self.expr()?;
        self.skip_ws();
        if !self.eat(b')') {
            return Err(self.err("expected ')'"));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}

fn integer_literal(n: &Node) -> Option<i32> {
    match n {
        Node::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Some(*v as i32),
        Node::Neg(inner) => integer_literal(inner).map(|k| -k),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> C64 {
        Expression::parse(s).unwrap().eval(x)
    }

    #[test]
    fn constant_one() {
        assert_eq!(ev("1", 0.3), C64::new(1.0, 0.0));
    }

    #[test]
    fn example_closed_form_at_one() {
        // (3/2*x - 1/2)*exp(2*pi*i*x) evaluates to 1 at x = 1
        let v = ev("(3/2*x - 1/2)*exp(2*pi*i*x)", 1.0);
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn trig_identity_on_grid() {
        let e = Expression::parse("cos(pi*x)^2 + sin(pi*x)^2").unwrap();
        for g in 0..=64 {
            let x = g as f64 / 64.0;
            assert!((e.eval(x) - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn power_requires_integer_literal() {
        assert!(Expression::parse("x^2").is_ok());
        assert!(Expression::parse("2^-2").is_ok());
        let err = Expression::parse("x^x").unwrap_err();
        assert!(err.msg.contains("integer"));
    }

    #[test]
    fn error_carries_position() {
        let err = Expression::parse("1 + @").unwrap_err();
        assert_eq!(err.pos, 4);
    }

    #[test]
    fn precedence_divides_powers_first() {
        // 1/2^4 must parse as 1/(2^4)
        assert!((ev("1/2^4", 0.0).re - 0.0625).abs() < 1e-15);
    }
}
