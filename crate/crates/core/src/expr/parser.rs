use super::{Func, Node, ParseError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

pub(super) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(usize, Tok)>,
}

const OPERAND: &[&str] = &["number", "'x'", "function call", "'('", "'-'"];
const AFTER_OPERAND: &[&str] = &["'+'", "'-'", "'*'", "'/'", "'^'", "')'", "end of input"];

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
        }
    }

    fn syntax(&self, offset: usize, expected: &[&str], found: &Tok) -> ParseError {
        ParseError::Syntax {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.describe(),
        }
    }

    fn lex(&mut self) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            // optional exponent: e, E followed by optional sign and digits
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut probe = end + 1;
                if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                    probe += 1;
                }
                if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                    while probe < bytes.len() && bytes[probe].is_ascii_digit() {
                        probe += 1;
                    }
                    end = probe;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            return text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| (start, Tok::Num(v)))
                .ok_or_else(|| ParseError::Syntax {
                    offset: start,
                    expected: vec!["decimal literal".into()],
                    found: format!("'{text}'"),
                });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            expected: OPERAND.iter().map(|s| s.to_string()).collect(),
            found: format!("'{ch}'"),
        })
    }

    fn peek(&mut self) -> Result<(usize, Tok), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(self.peeked.clone().expect("peeked token"))
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let t = self.peek()?;
        self.peeked = None;
        Ok(t)
    }

    pub(super) fn parse(&mut self) -> Result<Node, ParseError> {
        let (offset, first) = self.peek()?;
        if first == Tok::End {
            return Err(self.syntax(offset, OPERAND, &first));
        }
        let node = self.expr()?;
        let (offset, tok) = self.next()?;
        if tok != Tok::End {
            return Err(self.syntax(offset, AFTER_OPERAND, &tok));
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek()?.1 {
                Tok::Plus => {
                    self.next()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek()?.1 {
                Tok::Star => {
                    self.next()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.next()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if self.peek()?.1 == Tok::Minus {
            self.next()?;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek()?.1 != Tok::Caret {
            return Ok(base);
        }
        self.next()?;
        let exponent = self.integer()?;
        Ok(Node::Pow(Box::new(base), exponent))
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let expected = &["integer exponent"];
        let negative = if self.peek()?.1 == Tok::Minus {
            self.next()?;
            true
        } else {
            false
        };
        let (offset, tok) = self.next()?;
        let Tok::Num(_) = tok else {
            return Err(self.syntax(offset, expected, &tok));
        };
        let text = &self.src[offset..self.pos];
        let magnitude: i32 = text
            .parse()
            .map_err(|_| self.syntax(offset, expected, &tok))?;
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn base(&mut self) -> Result<Node, ParseError> {
        let (offset, tok) = self.next()?;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Ident(name) if name == "x" => Ok(Node::X),
            Tok::Ident(name) => {
                let (paren_at, paren) = self.peek()?;
                let func = Func::from_name(&name);
                match (func, paren) {
                    (Some(func), Tok::LParen) => {
                        self.next()?;
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                    (None, Tok::LParen) => Err(ParseError::UnknownFunction { name, offset }),
                    (Some(_), other) => Err(self.syntax(paren_at, &["'('"], &other)),
                    (None, _) => Err(self.syntax(offset, OPERAND, &Tok::Ident(name))),
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            other => Err(self.syntax(offset, OPERAND, &other)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let (offset, tok) = self.next()?;
        if tok == Tok::RParen {
            Ok(())
        } else {
            Err(self.syntax(offset, &["'+'", "'-'", "'*'", "'/'", "'^'", "')'"], &tok))
        }
    }
}
