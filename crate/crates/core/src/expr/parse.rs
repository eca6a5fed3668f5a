use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i128),
    Float(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                i = lx.number(i)?;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
            } else if b"+-*/^(),".contains(&c) {
                lx.toks.push((Tok::Op(c as char), i));
                i += 1;
            } else {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
            }
        }
        lx.toks.push((Tok::End, src.len()));
        Ok(lx.toks)
    }

    fn number(&mut self, start: usize) -> Result<usize, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let mut is_float = false;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            is_float = true;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                is_float = true;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let tok = if is_float {
            Tok::Float(text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("bad number `{text}`"),
            })?)
        } else {
            Tok::Int(text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("integer `{text}` out of range"),
            })?)
        };
        self.toks.push((tok, start));
        Ok(i)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    accept: &'a dyn Fn(&str) -> bool,
}

pub(super) fn parse(text: &str, accept: &dyn Fn(&str) -> bool) -> Result<Expr, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, pos: 0, accept };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.err("unexpected trailing input")),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { offset: self.offset(), message: msg.to_string() }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.quot()?;
        while self.eat('*') {
            lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.quot()?));
        }
        Ok(lhs)
    }

    fn quot(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat('/') {
            lhs = Expr::Div(Arc::new(lhs), Arc::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let neg = self.eat('-');
        let off = self.offset();
        let k = match self.bump() {
            Tok::Int(v) => i64::try_from(v).map_err(|_| ParseError::Syntax {
                offset: off,
                message: "exponent out of range".into(),
            })?,
            _ => {
                return Err(ParseError::Syntax { offset: off, message: "expected integer exponent".into() })
            }
        };
        if paren {
            self.expect(')')?;
        }
        Ok(Expr::Pow(Arc::new(base), if neg { -k } else { k }))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let off = self.offset();
        match self.bump() {
            Tok::Int(v) => Ok(Expr::Const(Rational::from_integer(v))),
            Tok::Float(v) => Ok(Expr::Float(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError::Syntax { offset: off, message: format!("unknown function `{name}`") });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Func(f, Arc::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if Func::from_name(&name).is_some() {
                    return Err(ParseError::Syntax { offset: off, message: format!("function `{name}` needs an argument") });
                }
                if (self.accept)(&name) {
                    Ok(Expr::Sym(Arc::from(name.as_str())))
                } else {
                    Err(ParseError::UnknownSymbol { name, offset: off })
                }
            }
            Tok::End => Err(ParseError::Syntax { offset: off, message: "unexpected end of input".into() }),
            Tok::Op(c) => Err(ParseError::Syntax { offset: off, message: format!("unexpected `{c}`") }),
        }
    }
}
