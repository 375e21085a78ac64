//! Lexer and recursive-descent parser for `.np` sources.
//!
//! ```text
//! program := stmts EOF
//! stmts   := [ stmt { ";" stmt } [";"] ]      ";" may be omitted after "}"
//! stmt    := "skip"
//!          | "nif" "(" guard "," expr ")" block [ "else" block ]
//!          | "nwhile" "(" guard "," expr ")" block
//!          | IDENT "(" [ expr { "," expr } ] ")"
//!          | IDENT ( ":=" | "=" ) IDENT "(" [ expr { "," expr } ] ")"
//!          | IDENT ( ":=" | "=" ) expr
//! block   := "{" stmts "}"
//! guard   := IDENT ( ">" | ">=" | "<" | "<=" ) expr
//! expr    := term { ( "+" | "-" ) term }
//! term    := unary { ( "*" | "/" ) unary }
//! unary   := "-" NUMBER | "-" unary | primary
//! primary := NUMBER | IDENT | "(" expr ")"
//! ```
//!
//! `//` starts a comment that runs to the end of the line.

use crate::error::{ParseError, Pos};
use crate::neural::CmpOp;

use super::ast::{BinOp, Expr, Guard, Stmt};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Skip,
    Nif,
    Nwhile,
    Else,
    Assign,
    Cmp(CmpOp),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Skip => "`skip`".into(),
            Tok::Nif => "`nif`".into(),
            Tok::Nwhile => "`nwhile`".into(),
            Tok::Else => "`else`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Cmp(op) => format!("`{op}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn err(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        pos,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let peek = chars.get(i + 1).copied();
        let mut width = 1;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '/' if peek == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            ':' if peek == Some('=') => {
                width = 2;
                Tok::Assign
            }
            '=' if peek == Some('=') => {
                return Err(err(pos, "unknown operator `==`"));
            }
            '=' => Tok::Assign,
            '>' | '<' => {
                let strict = if c == '>' { CmpOp::Gt } else { CmpOp::Lt };
                if peek == Some('=') {
                    width = 2;
                    Tok::Cmp(if c == '>' { CmpOp::Ge } else { CmpOp::Le })
                } else {
                    Tok::Cmp(strict)
                }
            }
            c if c.is_ascii_digit() || (c == '.' && peek.is_some_and(|p| p.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[start..j].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| err(pos, format!("malformed number `{text}`")))?;
                width = j - start;
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                width = j - start;
                match word.as_str() {
                    "skip" => Tok::Skip,
                    "nif" => Tok::Nif,
                    "nwhile" => Tok::Nwhile,
                    "else" => Tok::Else,
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(err(pos, format!("unknown operator `{other}`"))),
        };
        out.push((tok, pos));
        i += width;
        col += width;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.at + offset).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(err(
                self.pos(),
                format!("expected {}, found {}", want.describe(), self.peek().describe()),
            ))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => Err(err(
                self.pos(),
                format!("expected identifier, found {}", other.describe()),
            )),
        }
    }

    /// Statements up to (not including) `}` or end of input.
    fn stmts(&mut self) -> Result<Stmt, ParseError> {
        let mut list = Vec::new();
        loop {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            let (stmt, braced) = self.stmt()?;
            list.push(stmt);
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                }
                Tok::RBrace | Tok::Eof => break,
                _ if braced => {}
                other => {
                    return Err(err(
                        self.pos(),
                        format!("expected `;`, found {}", other.describe()),
                    ))
                }
            }
        }
        Ok(Stmt::block(list))
    }

    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.expect(Tok::LBrace)?;
        let body = self.stmts()?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn guard_head(&mut self) -> Result<(Guard, Expr), ParseError> {
        self.expect(Tok::LParen)?;
        let var = self.ident()?;
        let op = match self.peek().clone() {
            Tok::Cmp(op) => {
                self.bump();
                op
            }
            other => {
                return Err(err(
                    self.pos(),
                    format!("expected comparison operator, found {}", other.describe()),
                ))
            }
        };
        let rhs = self.expr()?;
        self.expect(Tok::Comma)?;
        let sigma2 = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok((Guard { var, op, rhs }, sigma2))
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.expr()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    /// Returns the statement and whether it ended with a `}`.
    fn stmt(&mut self) -> Result<(Stmt, bool), ParseError> {
        match self.peek().clone() {
            Tok::Skip => {
                self.bump();
                Ok((Stmt::Skip, false))
            }
            Tok::Nif => {
                self.bump();
                let (guard, sigma2) = self.guard_head()?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Else {
                    self.bump();
                    self.block()?
                } else {
                    Stmt::Skip
                };
                Ok((Stmt::nif(guard, sigma2, then_branch, else_branch), true))
            }
            Tok::Nwhile => {
                self.bump();
                let (guard, sigma2) = self.guard_head()?;
                let body = self.block()?;
                Ok((Stmt::nwhile(guard, sigma2, body), true))
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LParen => {
                        let args = self.call_args()?;
                        Ok((Stmt::HostCall { name, args, result: None }, false))
                    }
                    Tok::Assign => {
                        self.bump();
                        if let (Tok::Ident(callee), Tok::LParen) = (self.peek().clone(), self.peek_at(1)) {
                            self.bump();
                            let args = self.call_args()?;
                            return Ok((
                                Stmt::HostCall {
                                    name: callee,
                                    args,
                                    result: Some(name),
                                },
                                false,
                            ));
                        }
                        Ok((Stmt::Assign(name, self.expr()?), false))
                    }
                    other => Err(err(
                        self.pos(),
                        format!("expected `:=` or `(` after `{name}`, found {}", other.describe()),
                    )),
                }
            }
            other => Err(err(
                self.pos(),
                format!("expected statement, found {}", other.describe()),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Num(n) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-n));
            }
            return Ok(Expr::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    return Err(err(
                        self.pos(),
                        format!("host call `{name}(...)` is only allowed as a statement"),
                    ));
                }
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(err(
                self.pos(),
                format!("expected expression, found {}", other.describe()),
            )),
        }
    }
}

/// Parse a whole program.
pub fn parse(source: &str) -> Result<Stmt, ParseError> {
    let mut p = Parser { toks: lex(source)?, at: 0 };
    let program = p.stmts()?;
    if *p.peek() != Tok::Eof {
        return Err(err(p.pos(), format!("unexpected {}", p.peek().describe())));
    }
    Ok(program)
}

/// Parse a single expression.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(source)?, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(err(p.pos(), format!("unexpected {}", p.peek().describe())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skip_and_empty() {
        assert_eq!(parse("skip").unwrap(), Stmt::Skip);
        assert_eq!(parse("").unwrap(), Stmt::Skip);
        assert_eq!(parse("  // nothing\n").unwrap(), Stmt::Skip);
    }

    #[test]
    fn assign_then_nif() {
        let s = parse("x := 1; nif (x >= 2, 0.16) { y := 1 } else { y := 2 }").unwrap();
        let want = Stmt::seq(
            Stmt::assign("x", Expr::Const(1.0)),
            Stmt::nif(
                Guard::new("x", CmpOp::Ge, Expr::Const(2.0)),
                Expr::Const(0.16),
                Stmt::assign("y", Expr::Const(1.0)),
                Stmt::assign("y", Expr::Const(2.0)),
            ),
        );
        assert_eq!(s, want);
    }

    #[test]
    fn else_is_optional() {
        let s = parse("nif (x < 0, 0) { x := -x }").unwrap();
        let Stmt::Nif { else_branch, .. } = s else { panic!() };
        assert_eq!(*else_branch, Stmt::Skip);
    }

    #[test]
    fn precedence_and_negative_literals() {
        let e = parse_expr("1 + 2 * x - -3").unwrap();
        let want = Expr::binary(
            BinOp::Sub,
            Expr::binary(
                BinOp::Add,
                Expr::Const(1.0),
                Expr::binary(BinOp::Mul, Expr::Const(2.0), Expr::var("x")),
            ),
            Expr::Const(-3.0),
        );
        assert_eq!(e, want);
        assert_eq!(parse_expr("-(2)").unwrap(), Expr::neg(Expr::Const(2.0)));
        assert_eq!(parse_expr("-x").unwrap(), Expr::neg(Expr::var("x")));
        assert_eq!(parse_expr("1.5e-3").unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Const(0.5));
    }

    #[test]
    fn host_calls() {
        assert_eq!(parse("moving()").unwrap(), Stmt::call("moving", vec![], None));
        assert_eq!(
            parse("d = getPose()").unwrap(),
            Stmt::call("getPose", vec![], Some("d"))
        );
        assert_eq!(
            parse("log(x, 2 * y)").unwrap(),
            Stmt::call(
                "log",
                vec![
                    Expr::var("x"),
                    Expr::binary(BinOp::Mul, Expr::Const(2.0), Expr::var("y"))
                ],
                None
            )
        );
    }

    #[test]
    fn semicolon_optional_after_block() {
        let s = parse("nwhile (i < 3, 0) { i := i + 1 }\nj := i;").unwrap();
        assert_eq!(s.statements().len(), 2);
    }

    #[test]
    fn diagnostics_carry_position() {
        let e = parse("x := 1\ny := 2").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 1 });
        let e = parse("x := 3 % 2").unwrap_err();
        assert!(e.message.contains("unknown operator `%`"), "{e}");
        assert_eq!(e.pos, Pos { line: 1, col: 8 });
        let e = parse("nif (x == 1, 0) { skip }").unwrap_err();
        assert!(e.message.contains("=="));
        assert!(parse("nif (1 < x, 0) { skip }").is_err());
        assert!(parse("x := f() + 1").is_err());
        assert!(parse("{ skip }").is_err());
    }

    #[test]
    fn keywords_are_not_identifiers() {
        assert!(parse("skip := 1").is_err());
        assert!(parse("x := else").is_err());
    }
}
