//! Model file syntax: lexer, operator-precedence parser and printer.
//!
//! ```text
//! model      ::= { statement "." }
//! statement  ::= VAR "in" domain
//!              | "label" "(" "[" [ VAR { "," VAR } ] "]" ")"
//!              | expr relop expr
//!              | bool conn bool
//! conn       ::= "#<==>" | "#==>" | "#<=="
//! bool       ::= VAR | "0" | "1" | "(" expr relop expr ")"
//! relop      ::= "#=" | "#\=" | "#<" | "#=<" | "#>" | "#>="
//! expr       ::= expr ("+" | "-") expr | expr ("*" | "/" | "mod" | "rem") expr
//!              | "-" expr | "abs" "(" expr ")" | ("min" | "max") "(" expr "," expr ")"
//!              | "(" expr ")" | VAR | INT
//! domain     ::= piece { "\/" piece }
//! piece      ::= bound [ ".." bound ]
//! bound      ::= INT | "inf" | "sup"
//! ```
//!
//! Variables start with an upper-case letter or `_`. `%` starts a comment
//! that runs to the end of the line.

use std::fmt;

use thiserror::Error;

use crate::domain::Domain;
use crate::expr::{BinOp, BoolTerm, Expr, ReifConstraint, Rel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    In(String, Domain),
    Constraint(Rel, Expr, Expr),
    Reified(ReifConstraint),
    Label(Vec<String>),
}

impl Statement {
    /// Variable names in textual order of occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match self {
            Statement::In(name, _) => out.push(name.as_str()),
            Statement::Constraint(_, a, b) => {
                a.visit_vars(&mut out);
                b.visit_vars(&mut out);
            }
            Statement::Reified(c) => {
                // `A #<== B` is stored as `B #==> A`; textual order is lost
                // there, which only affects printing order.
                let (l, r) = c.sides();
                for side in [l, r] {
                    match side {
                        BoolTerm::Var(name) => out.push(name),
                        BoolTerm::Const(_) => {}
                        BoolTerm::Rel(_, a, b) => {
                            a.visit_vars(&mut out);
                            b.visit_vars(&mut out);
                        }
                    }
                }
            }
            Statement::Label(names) => out.extend(names.iter().map(String::as_str)),
        }
        out
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::In(name, dom) => write!(f, "{name} in {dom}."),
            Statement::Constraint(rel, a, b) => write!(f, "{a} {rel} {b}."),
            Statement::Reified(c) => write!(f, "{c}."),
            Statement::Label(names) => write!(f, "label([{}]).", names.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Var(String),
    Atom(String),
    Op(&'static str),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    DotDot,
    Union,
    End,
}

#[derive(Debug, Clone, Copy, Default)]
struct Pos {
    line: usize,
    column: usize,
    offset: usize,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
    end: usize,
}

// Longest spellings first.
const HASH_OPS: [&str; 9] = ["#<==>", "#==>", "#<==", "#\\=", "#=<", "#>=", "#=", "#<", "#>"];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    let err = |i: usize, line: usize, line_start: usize, message: String| ParseError {
        line,
        column: src[line_start..i].chars().count() + 1,
        message,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'%' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let pos = Pos { line, column: src[line_start..i].chars().count() + 1, offset: i };
        let rest = &src[i..];
        let (tok, len) = if c.is_ascii_digit() {
            let len = rest.bytes().take_while(u8::is_ascii_digit).count();
            let v: i64 = rest[..len]
                .parse()
                .map_err(|_| err(i, line, line_start, "integer literal out of range".into()))?;
            (Tok::Int(v), len)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            let word = rest[..len].to_string();
            if c.is_ascii_uppercase() || c == b'_' {
                (Tok::Var(word), len)
            } else {
                (Tok::Atom(word), len)
            }
        } else if c == b'#' {
            match HASH_OPS.iter().find(|op| rest.starts_with(**op)) {
                Some(op) => (Tok::Op(op), op.len()),
                None => {
                    let spelled: String = rest
                        .chars()
                        .take_while(|ch| !ch.is_whitespace() && !ch.is_alphanumeric())
                        .collect();
                    return Err(err(i, line, line_start, format!("unknown operator `{spelled}`")));
                }
            }
        } else if rest.starts_with("..") {
            (Tok::DotDot, 2)
        } else if rest.starts_with("\\/") {
            (Tok::Union, 2)
        } else {
            let tok = match c {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b',' => Tok::Comma,
                b'.' => Tok::End,
                b'+' => Tok::Op("+"),
                b'-' => Tok::Op("-"),
                b'*' => Tok::Op("*"),
                b'/' => Tok::Op("/"),
                _ => {
                    let ch = rest.chars().next().unwrap_or('?');
                    return Err(err(i, line, line_start, format!("unexpected character `{ch}`")));
                }
            };
            (tok, 1)
        };
        out.push(Token { tok, pos, end: i + len });
        i += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Assoc {
    Left,
    Right,
    None,
}

/// Binding power (higher binds tighter) and associativity of an infix
/// operator token.
fn infix(tok: &Tok) -> Option<(&'static str, u32, Assoc)> {
    let (name, bp, assoc) = match tok {
        Tok::Op(op) => match *op {
            "#<==>" => ("#<==>", 1, Assoc::None),
            "#==>" => ("#==>", 2, Assoc::Right),
            "#<==" => ("#<==", 2, Assoc::Left),
            "#=" | "#\\=" | "#<" | "#=<" | "#>" | "#>=" => (*op, 3, Assoc::None),
            "+" | "-" => (*op, 4, Assoc::Left),
            "*" | "/" => (*op, 5, Assoc::Left),
            _ => return None,
        },
        Tok::Atom(a) if a == "mod" => ("mod", 5, Assoc::Left),
        Tok::Atom(a) if a == "rem" => ("rem", 5, Assoc::Left),
        _ => return None,
    };
    Some((name, bp, assoc))
}

const PREFIX_MINUS_BP: u32 = 6;

/// Generic term produced by the operator-precedence pass.
#[derive(Debug, Clone)]
enum Node {
    Int(i64),
    Var(String),
    Neg(Box<Node>),
    Call(String, Vec<Node>),
    Infix(&'static str, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone)]
struct Spanned {
    node: Node,
    pos: Pos,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.i)
    }

    fn eof_pos(&self) -> Pos {
        let line = self.src.lines().count().max(1);
        let last = self.src.lines().last().unwrap_or("");
        Pos { line, column: last.chars().count() + 1, offset: self.src.len() }
    }

    fn error_at(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { line: pos.line, column: pos.column, message: message.into() }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let pos = self.peek().map(|t| t.pos).unwrap_or_else(|| self.eof_pos());
        self.error_at(pos, message)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self
            .peek()
            .cloned()
            .ok_or_else(|| self.error_here("unexpected end of input (missing `.`?)"))?;
        self.i += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.tok == want => self.next(),
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn statements(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut out = Vec::new();
        while self.peek().is_some() {
            out.push(self.statement()?);
            self.expect(Tok::End, "`.` after statement")?;
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let first = self.peek().cloned().ok_or_else(|| self.error_here("expected statement"))?;
        match &first.tok {
            Tok::Atom(a) if a == "label" => return self.label(),
            Tok::Var(name) => {
                if let Some(Token { tok: Tok::Atom(a), .. }) = self.toks.get(self.i + 1) {
                    if a == "in" {
                        self.i += 2;
                        return Ok(Statement::In(name.clone(), self.domain()?));
                    }
                }
            }
            _ => {}
        }
        let term = self.expr(0)?;
        to_statement(term, self)
    }

    fn label(&mut self) -> Result<Statement, ParseError> {
        self.next()?;
        self.expect(Tok::LParen, "`(` after label")?;
        self.expect(Tok::LBracket, "`[`")?;
        let mut names = Vec::new();
        if !matches!(self.peek().map(|t| &t.tok), Some(Tok::RBracket)) {
            loop {
                match self.next()? {
                    Token { tok: Tok::Var(name), .. } => names.push(name),
                    t => return Err(self.error_at(t.pos, "expected variable in label list")),
                }
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::Comma)) {
                    self.i += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Statement::Label(names))
    }

    fn domain(&mut self) -> Result<Domain, ParseError> {
        let start = self.i;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::End => break,
                Tok::Int(_) | Tok::DotDot | Tok::Union | Tok::Op("-") => self.i += 1,
                Tok::Atom(ref a) if a == "inf" || a == "sup" => self.i += 1,
                _ => return Err(self.error_here("unexpected token in domain")),
            }
        }
        if self.i == start {
            return Err(self.error_here("expected domain after `in`"));
        }
        let (from, to) = (self.toks[start].pos, self.toks[self.i - 1].end);
        self.src[from.offset..to].parse::<Domain>().map_err(|e| {
            let at = &self.src[..from.offset + e.offset];
            let line = at.matches('\n').count() + 1;
            let column = at.rsplit('\n').next().unwrap_or("").chars().count() + 1;
            ParseError { line, column, message: e.message }
        })
    }

    fn expr(&mut self, min_bp: u32) -> Result<Spanned, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let Some(tok) = self.peek() else { break };
            let Some((name, bp, assoc)) = infix(&tok.tok) else { break };
            if bp < min_bp {
                break;
            }
            self.i += 1;
            let rhs_bp = if assoc == Assoc::Right { bp } else { bp + 1 };
            let rhs = self.expr(rhs_bp)?;
            lhs = Spanned { node: Node::Infix(name, Box::new(lhs.node), Box::new(rhs.node)), pos: lhs.pos };
            if assoc == Assoc::None {
                if let Some(next) = self.peek() {
                    if matches!(infix(&next.tok), Some((_, b, _)) if b == bp) {
                        return Err(self.error_at(next.pos, "operator is not associative; add parentheses"));
                    }
                }
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Spanned, ParseError> {
        let t = self.next()?;
        let node = match t.tok {
            Tok::Int(v) => Node::Int(v),
            Tok::Var(name) => Node::Var(name),
            Tok::Op("-") => Node::Neg(Box::new(self.expr(PREFIX_MINUS_BP)?.node)),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                inner.node
            }
            Tok::Atom(name) => {
                self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                let mut args = vec![self.expr(0)?.node];
                while matches!(self.peek().map(|t| &t.tok), Some(Tok::Comma)) {
                    self.i += 1;
                    args.push(self.expr(0)?.node);
                }
                self.expect(Tok::RParen, "`)`")?;
                Node::Call(name, args)
            }
            Tok::Op(op) => return Err(self.error_at(t.pos, format!("unexpected operator `{op}`"))),
            _ => return Err(self.error_at(t.pos, "expected expression")),
        };
        Ok(Spanned { node, pos: t.pos })
    }
}

fn relation(op: &str) -> Option<Rel> {
    Rel::ALL.into_iter().find(|r| r.symbol() == op)
}

fn to_statement(term: Spanned, p: &Parser<'_>) -> Result<Statement, ParseError> {
    let err = |m: &str| p.error_at(term.pos, m);
    match term.node {
        Node::Infix(op @ ("#<==>" | "#==>" | "#<=="), a, b) => {
            let (a, b) = (to_bool(*a).map_err(|m| err(&m))?, to_bool(*b).map_err(|m| err(&m))?);
            Ok(Statement::Reified(match op {
                "#<==>" => ReifConstraint::Iff(a, b),
                "#==>" => ReifConstraint::Impl(a, b),
                _ => ReifConstraint::Impl(b, a),
            }))
        }
        Node::Infix(op, a, b) if relation(op).is_some() => {
            let rel = relation(op).unwrap_or(Rel::Eq);
            Ok(Statement::Constraint(
                rel,
                to_expr(*a).map_err(|m| err(&m))?,
                to_expr(*b).map_err(|m| err(&m))?,
            ))
        }
        _ => Err(err("expected a constraint, a reified constraint, `in` or `label`")),
    }
}

fn to_bool(node: Node) -> Result<BoolTerm, String> {
    match node {
        Node::Var(name) => Ok(BoolTerm::Var(name)),
        Node::Int(0) => Ok(BoolTerm::Const(false)),
        Node::Int(1) => Ok(BoolTerm::Const(true)),
        Node::Infix(op, a, b) if relation(op).is_some() => {
            Ok(BoolTerm::Rel(relation(op).unwrap_or(Rel::Eq), to_expr(*a)?, to_expr(*b)?))
        }
        Node::Infix(op, ..) if op.starts_with("#<=") || op.starts_with("#==") => {
            Err("nested reification connectives are not supported".into())
        }
        _ => Err("expected a Boolean variable, 0, 1 or a relation".into()),
    }
}

fn to_expr(node: Node) -> Result<Expr, String> {
    Ok(match node {
        Node::Int(v) => Expr::Int(v),
        Node::Var(name) => Expr::Var(name),
        Node::Neg(a) => Expr::neg(to_expr(*a)?),
        Node::Call(name, args) => {
            let mut args = args.into_iter().map(to_expr).collect::<Result<Vec<_>, _>>()?;
            match (name.as_str(), args.len()) {
                ("abs", 1) => Expr::abs(args.remove(0)),
                ("min" | "max", 2) => {
                    let b = args.remove(1);
                    let a = args.remove(0);
                    let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                    Expr::bin(op, a, b)
                }
                _ => return Err(format!("unknown function `{name}/{}`", args.len())),
            }
        }
        Node::Infix(op, a, b) => {
            let op = match op {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "mod" => BinOp::Mod,
                "rem" => BinOp::Rem,
                _ => return Err(format!("`{op}` cannot appear inside an arithmetic expression")),
            };
            Expr::bin(op, to_expr(*a)?, to_expr(*b)?)
        }
    })
}

/// Parses a whole model file.
pub fn parse_model(text: &str) -> Result<Vec<Statement>, ParseError> {
    let toks = lex(text)?;
    Parser { src: text, toks, i: 0 }.statements()
}
