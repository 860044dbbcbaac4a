//! Lexer and recursive-descent parser for the expression language.

use super::{ExprError, Func, Node};

#[derive(Clone, Debug, PartialEq)]
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
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting byte offset; `None` at end of input.
    fn next(&mut self) -> Result<Option<(Tok, usize)>, ExprError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // optional exponent part
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        end = e;
                        while end < self.src.len() && self.src[end].is_ascii_digit() {
                            end += 1;
                        }
                    }
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap();
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    msg: format!("invalid number `{text}`"),
                })?;
                self.pos = end;
                return Ok(Some((Tok::Num(value), start)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[start..end])
                    .unwrap()
                    .to_string();
                self.pos = end;
                return Ok(Some((Tok::Ident(text), start)));
            }
            other => {
                return Err(ExprError::Syntax {
                    offset: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }
}

/// Hard cap on expression nesting; untrusted input must not be able to
/// overflow the stack through parser/eval recursion.
const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    cursor: usize,
    end: usize,
    vars: &'a [String],
    depth: usize,
}

pub(super) fn parse(text: &str, vars: &[String]) -> Result<Node, ExprError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut p = Parser {
        toks,
        cursor: 0,
        end: text.len(),
        vars,
        depth: 0,
    };
    let node = p.expr()?;
    if let Some((tok, offset)) = p.peek() {
        return Err(ExprError::Syntax {
            offset,
            msg: format!("unexpected token `{tok:?}`"),
        });
    }
    Ok(node)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(Tok, usize)> {
        self.toks.get(self.cursor).cloned()
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.bump() {
            Some((Tok::RParen, _)) => Ok(()),
            other => Err(ExprError::Syntax {
                offset: other.map(|(_, o)| o).unwrap_or(self.end),
                msg: "expected `)`".into(),
            }),
        }
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|(_, o)| *o)
            .unwrap_or(self.end)
    }

    /// Depth accounting around the two recursion points (`factor` and
    /// `atom`): untrusted input must not overflow the stack.
    fn descend<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, ExprError>,
    ) -> Result<T, ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::Syntax {
                offset: self.here(),
                msg: format!("expression nested deeper than {MAX_DEPTH}"),
            });
        }
        let result = f(self);
        self.depth -= 1;
        result
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    /// `factor := '-' factor | power`; unary minus binds looser than `^`.
    fn factor(&mut self) -> Result<Node, ExprError> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.bump();
            let inner = self.descend(|p| p.factor())?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, caret_off)) = self.peek() {
            self.bump();
            let exp_node = self.factor()?;
            let Some(e) = const_fold(&exp_node) else {
                return Err(ExprError::NonConstantExponent { offset: caret_off });
            };
            return Ok(Node::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.bump() {
            Some((Tok::Num(x), _)) => Ok(Node::Num(x)),
            Some((Tok::LParen, _)) => {
                let inner = self.descend(|p| p.expr())?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((Tok::Ident(name), offset)) => {
                if let Some((Tok::LParen, _)) = self.peek() {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ExprError::UnknownIdentifier { name, offset });
                    };
                    self.bump(); // consume '('
                    let arg = self.descend(|p| p.expr())?;
                    self.expect_rparen()?;
                    Ok(Node::Func(func, Box::new(arg)))
                } else if let Some(i) = self.vars.iter().position(|v| v == &name) {
                    Ok(Node::Var(i))
                } else {
                    Err(ExprError::UnknownIdentifier { name, offset })
                }
            }
            Some((tok, offset)) => Err(ExprError::Syntax {
                offset,
                msg: format!("expected expression, found `{tok:?}`"),
            }),
            None => Err(ExprError::Syntax {
                offset: self.end,
                msg: "expected expression, found end of input".into(),
            }),
        }
    }
}

/// Fold a closed (variable-free) subtree to a number, if possible.
fn const_fold(node: &Node) -> Option<f64> {
    Some(match node {
        Node::Num(x) => *x,
        Node::Var(_) => return None,
        Node::Neg(a) => -const_fold(a)?,
        Node::Add(a, b) => const_fold(a)? + const_fold(b)?,
        Node::Sub(a, b) => const_fold(a)? - const_fold(b)?,
        Node::Mul(a, b) => const_fold(a)? * const_fold(b)?,
        Node::Div(a, b) => const_fold(a)? / const_fold(b)?,
        Node::Pow(a, e) => const_fold(a)?.powf(*e),
        Node::Func(f, a) => {
            let x = const_fold(a)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Sqrt => x.sqrt(),
            }
        }
    })
    .filter(|x| x.is_finite())
}
