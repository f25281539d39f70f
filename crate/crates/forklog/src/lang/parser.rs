//! Hand-rolled lexer and recursive-descent parser for the program grammar:
//!
//! ```text
//! program   := (directive | clause)* ;
//! directive := ":-" "table" name "/" integer "." ;
//! clause    := atom "." | atom ":-" atom ("," atom)* "." ;
//! atom      := name "(" term ("," term)* ")" ;
//! term      := VARIABLE | name | integer ;
//! ```
//!
//! `%` starts a comment running to end of line. Whitespace is insignificant.

use std::fmt;

/// Syntax failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at line {}, column {}: {}",
            self.line, self.col, self.message
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum RawTerm {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone)]
pub(super) struct RawAtom {
    pub name: String,
    pub args: Vec<RawTerm>,
}

#[derive(Debug, Clone)]
pub(super) struct RawClause {
    pub head: RawAtom,
    pub body: Vec<RawAtom>,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub(super) struct RawDirective {
    pub name: String,
    pub arity: usize,
    pub line: u32,
}

#[derive(Debug, Default)]
pub(super) struct RawProgram {
    pub directives: Vec<RawDirective>,
    pub clauses: Vec<RawClause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(String),
    Int(String),
    Implies, // :-
    LParen,
    RParen,
    Comma,
    Dot,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) => write!(f, "`{s}`"),
            Tok::Var(s) => write!(f, "variable `{s}`"),
            Tok::Int(s) => write!(f, "integer `{s}`"),
            Tok::Implies => write!(f, "`:-`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        match c {
            Some('\n') => {
                self.line += 1;
                self.col = 1;
            }
            Some(_) => self.col += 1,
            None => {}
        }
        c
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: msg.into(),
        }
    }

    /// Next token plus its start position.
    fn next_token(&mut self) -> Result<(Tok, u32, u32), ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let c = match self.chars.peek() {
            None => return Ok((Tok::Eof, line, col)),
            Some(&c) => c,
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            '/' => {
                self.bump();
                Tok::Slash
            }
            ':' => {
                self.bump();
                match self.chars.peek() {
                    Some('-') => {
                        self.bump();
                        Tok::Implies
                    }
                    _ => return Err(self.err("expected `-` after `:`")),
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Int(s)
            }
            c if c.is_ascii_lowercase() => {
                Tok::Name(self.ident())
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                Tok::Var(self.ident())
            }
            c => return Err(self.err(format!("unexpected character `{c}`"))),
        };
        Ok((tok, line, col))
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    line: u32,
    col: u32,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let (tok, line, col) = lexer.next_token()?;
        Ok(Parser {
            lexer,
            tok,
            line,
            col,
        })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, line, col) = self.lexer.next_token()?;
        self.tok = tok;
        self.line = line;
        self.col = col;
        Ok(())
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: msg.into(),
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if &self.tok == want {
            self.advance()
        } else {
            Err(self.err(format!("expected {what}, found {}", self.tok)))
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let name = match &self.tok {
            Tok::Name(n) => n.clone(),
            other => return Err(self.err(format!("expected predicate name, found {other}"))),
        };
        self.advance()?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let term = match &self.tok {
                Tok::Var(v) => RawTerm::Var(v.clone()),
                Tok::Name(n) => RawTerm::Const(n.clone()),
                Tok::Int(i) => RawTerm::Const(i.clone()),
                other => return Err(self.err(format!("expected term, found {other}"))),
            };
            self.advance()?;
            args.push(term);
            match &self.tok {
                Tok::Comma => self.advance()?,
                Tok::RParen => {
                    self.advance()?;
                    break;
                }
                other => return Err(self.err(format!("expected `,` or `)`, found {other}"))),
            }
        }
        Ok(RawAtom { name, args })
    }

    fn directive(&mut self) -> Result<RawDirective, ParseError> {
        let line = self.line;
        self.expect(&Tok::Implies, "`:-`")?;
        match &self.tok {
            Tok::Name(n) if n == "table" => self.advance()?,
            other => return Err(self.err(format!("expected `table`, found {other}"))),
        }
        let name = match &self.tok {
            Tok::Name(n) => n.clone(),
            other => return Err(self.err(format!("expected predicate name, found {other}"))),
        };
        self.advance()?;
        self.expect(&Tok::Slash, "`/`")?;
        let arity = match &self.tok {
            Tok::Int(i) => i
                .parse::<usize>()
                .map_err(|_| self.err(format!("arity `{i}` out of range")))?,
            other => return Err(self.err(format!("expected arity integer, found {other}"))),
        };
        self.advance()?;
        self.expect(&Tok::Dot, "`.`")?;
        Ok(RawDirective { name, arity, line })
    }

    fn clause(&mut self) -> Result<RawClause, ParseError> {
        let line = self.line;
        let head = self.atom()?;
        let mut body = Vec::new();
        match &self.tok {
            Tok::Dot => {
                self.advance()?;
            }
            Tok::Implies => {
                self.advance()?;
                loop {
                    body.push(self.atom()?);
                    match &self.tok {
                        Tok::Comma => self.advance()?,
                        Tok::Dot => {
                            self.advance()?;
                            break;
                        }
                        other => {
                            return Err(self.err(format!("expected `,` or `.`, found {other}")))
                        }
                    }
                }
            }
            other => return Err(self.err(format!("expected `.` or `:-`, found {other}"))),
        }
        Ok(RawClause { head, body, line })
    }
}

pub(super) fn parse_program(text: &str) -> Result<RawProgram, ParseError> {
    let mut parser = Parser::new(text)?;
    let mut program = RawProgram::default();
    while parser.tok != Tok::Eof {
        if parser.tok == Tok::Implies {
            program.directives.push(parser.directive()?);
        } else {
            program.clauses.push(parser.clause()?);
        }
    }
    Ok(program)
}

/// Parses a single query atom, with or without a trailing dot.
pub(super) fn parse_query_atom(text: &str) -> Result<RawAtom, ParseError> {
    let mut parser = Parser::new(text)?;
    let atom = parser.atom()?;
    if parser.tok == Tok::Dot {
        parser.advance()?;
    }
    if parser.tok != Tok::Eof {
        return Err(parser.err(format!("unexpected {} after query", parser.tok)));
    }
    Ok(atom)
}
