use super::{Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Imag(v) => format!("number {v}i"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    /// Set when the number was written without a fraction or exponent.
    integral: bool,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
                integral: false,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integral = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                integral = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::SyntaxError {
                line: tl,
                column: tc,
                message: format!("malformed number '{text}'"),
            })?;
            let imag = i < chars.len()
                && chars[i] == 'i'
                && !chars
                    .get(i + 1)
                    .is_some_and(|c| c.is_alphanumeric() || *c == '_');
            if imag {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: if imag { Tok::Imag(v) } else { Tok::Num(v) },
                line: tl,
                column: tc,
                integral: integral && !imag,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
                integral: false,
            });
            continue;
        }
        return Err(Error::SyntaxError {
            line: tl,
            column: tc,
            message: format!("unexpected character '{c}'"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        integral: false,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const ATOM_START: &str =
    "number, identifier, '(' or '-'";

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, t: &Token, expected: &str) -> Error {
        Error::SyntaxError {
            line: t.line,
            column: t.column,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(self.error(&t, &tok.describe()))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let negative = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        match t.tok {
            Tok::Num(v) if t.integral && v <= i32::MAX as f64 => {
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => Err(self.error(&t, "integer exponent")),
        }
    }

    fn index(&mut self) -> Result<usize> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) if t.integral && v >= 1.0 => Ok(v as usize - 1),
            _ => Err(self.error(&t, "index >= 1")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::Imag(v) => Ok(Expr::Imag(*v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name.clone(), &t),
            _ => Err(self.error(&t, ATOM_START)),
        }
    }

    fn identifier(&mut self, name: String, at: &Token) -> Result<Expr> {
        match name.as_str() {
            "i" => Ok(Expr::Imag(1.0)),
            "pi" => Ok(Expr::Pi),
            "I" => Ok(Expr::Identity),
            "sqrtdetg" => Ok(Expr::SqrtDetG),
            "absxi_g" => Ok(Expr::AbsXiG),
            "x" | "xi" => {
                self.expect(Tok::LParen)?;
                let k = self.index()?;
                self.expect(Tok::RParen)?;
                Ok(if name == "x" { Expr::X(k) } else { Expr::Xi(k) })
            }
            "gup" => {
                self.expect(Tok::LParen)?;
                let k = self.index()?;
                self.expect(Tok::Comma)?;
                let l = self.index()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Gup(k, l))
            }
            "cos" | "sin" | "exp" => {
                let func = match name.as_str() {
                    "cos" => Func::Cos,
                    "sin" => Func::Sin,
                    _ => Func::Exp,
                };
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                if arg.depends_on_xi() {
                    return Err(Error::SyntaxError {
                        line: at.line,
                        column: at.column,
                        message: format!("{name} accepts only x-dependent arguments"),
                    });
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            "pos" | "neg" => {
                self.expect(Tok::LParen)?;
                let t = self.next();
                if t.tok != Tok::Ident("xi".into()) {
                    return Err(self.error(&t, "xi(k)"));
                }
                self.expect(Tok::LParen)?;
                let index = self.index()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Ray {
                    positive: name == "pos",
                    index,
                })
            }
            "mat" => {
                self.expect(Tok::LBracket)?;
                let mut rows = Vec::new();
                loop {
                    self.expect(Tok::LBracket)?;
                    let mut row = vec![self.expr()?];
                    while self.peek().tok == Tok::Comma {
                        self.next();
                        row.push(self.expr()?);
                    }
                    self.expect(Tok::RBracket)?;
                    rows.push(row);
                    let t = self.next();
                    match t.tok {
                        Tok::Comma => continue,
                        Tok::RBracket => break,
                        _ => return Err(self.error(&t, "',' or ']'")),
                    }
                }
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::SyntaxError {
                        line: at.line,
                        column: at.column,
                        message: format!("mat must be square ({dim} rows)"),
                    });
                }
                Ok(Expr::Matrix(rows))
            }
            _ => Err(Error::UnknownIdentifier {
                name,
                line: at.line,
                column: at.column,
            }),
        }
    }
}

/// Parses an expression; errors carry 1-based line and column.
pub fn parse(src: &str) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let t = p.next();
    if t.tok != Tok::Eof {
        return Err(p.error(&t, "operator or end of input"));
    }
    Ok(e)
}
