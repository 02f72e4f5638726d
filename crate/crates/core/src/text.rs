//! Concrete syntax.
//!
//! ```text
//! formula  ::= conj ('|' formula)?
//! conj     ::= unary ('&' conj)?
//! unary    ::= '[' program ']' unary | '<' program '>' unary
//!            | atom | '~' atom | VAR | 'true' | 'false' | '(' formula ')'
//! program  ::= seq ('u' program)?
//! seq      ::= postfix (';' seq)?
//! postfix  ::= primary '*'*
//! primary  ::= prog | '(' program ')' | '(' formula ')' '?'
//!            | atom '?' | '~' atom '?' | VAR '?' | 'true' '?' | 'false' '?'
//! ```
//!
//! Atoms and atomic programs are lowercase identifiers, variables are
//! uppercase. Binary operators associate to the right. `∪ ⊤ ⊥ ¬ ∧ ∨` are
//! accepted as aliases of `u true false ~ & |`; output is always ASCII.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::syntax::{Formula, Program, VarName};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unknown character {0:?}")]
    UnknownToken(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unbalanced {0:?}")]
    Unbalanced(char),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LAngle,
    RAngle,
    And,
    Or,
    Tilde,
    Semi,
    Star,
    Question,
    Union,
    True,
    False,
    Lower(String),
    Upper(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::LAngle => f.write_str("'<'"),
            Tok::RAngle => f.write_str("'>'"),
            Tok::And => f.write_str("'&'"),
            Tok::Or => f.write_str("'|'"),
            Tok::Tilde => f.write_str("'~'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Question => f.write_str("'?'"),
            Tok::Union => f.write_str("'u'"),
            Tok::True => f.write_str("'true'"),
            Tok::False => f.write_str("'false'"),
            Tok::Lower(s) => write!(f, "identifier `{s}`"),
            Tok::Upper(s) => write!(f, "variable `{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, column);
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            match word.as_str() {
                "u" => Tok::Union,
                "true" => Tok::True,
                "false" => Tok::False,
                _ if word.starts_with(|c: char| c.is_ascii_uppercase()) => Tok::Upper(word),
                _ => Tok::Lower(word),
            }
        } else {
            chars.next();
            column += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '<' | '⟨' => Tok::LAngle,
                '>' | '⟩' => Tok::RAngle,
                '&' | '∧' => Tok::And,
                '|' | '∨' => Tok::Or,
                '~' | '¬' => Tok::Tilde,
                ';' => Tok::Semi,
                '*' => Tok::Star,
                '?' => Tok::Question,
                '∪' => Tok::Union,
                '⊤' => Tok::True,
                '⊥' => Tok::False,
                other => {
                    return Err(ParseError {
                        line: start_line,
                        column: start_col,
                        kind: ParseErrorKind::UnknownToken(other),
                    })
                }
            }
        };
        out.push(Spanned { tok, line: start_line, column: start_col });
    }
    out.push(Spanned { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, column: s.column, kind }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Tok::RParen => self.error_here(ParseErrorKind::Unbalanced(')')),
            Tok::RBracket => self.error_here(ParseErrorKind::Unbalanced(']')),
            found => {
                let found = found.to_string();
                self.error_here(ParseErrorKind::Unexpected { expected: expected.into(), found })
            }
        }
    }

    /// Consumes a closing bracket opened at token index `open`.
    fn close(&mut self, tok: Tok, open: usize, open_char: char) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else if *self.peek() == Tok::Eof {
            let s = &self.toks[open];
            Err(ParseError { line: s.line, column: s.column, kind: ParseErrorKind::Unbalanced(open_char) })
        } else {
            let found = self.peek().to_string();
            Err(self.error_here(ParseErrorKind::Unexpected { expected: tok.to_string(), found }))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of input")),
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let left = self.conj()?;
        if *self.peek() == Tok::Or {
            self.bump();
            let right = self.formula()?;
            return Ok(Formula::or(left, right));
        }
        Ok(left)
    }

    fn conj(&mut self) -> PResult<Formula> {
        let left = self.unary()?;
        if *self.peek() == Tok::And {
            self.bump();
            let right = self.conj()?;
            return Ok(Formula::and(left, right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Formula> {
        let start = self.pos;
        match self.peek().clone() {
            Tok::LBracket => {
                self.bump();
                let prog = self.program()?;
                self.close(Tok::RBracket, start, '[')?;
                Ok(Formula::boxed(prog, self.unary()?))
            }
            Tok::LAngle => {
                self.bump();
                let prog = self.program()?;
                self.close(Tok::RAngle, start, '<')?;
                Ok(Formula::diamond(prog, self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.close(Tok::RParen, start, '(')?;
                Ok(inner)
            }
            Tok::Tilde => {
                self.bump();
                match self.peek().clone() {
                    Tok::Lower(p) => {
                        self.bump();
                        Ok(Formula::NegAtom(p))
                    }
                    _ => Err(self.unexpected("an atom after '~'")),
                }
            }
            Tok::Lower(p) => {
                self.bump();
                Ok(Formula::Atom(p))
            }
            Tok::Upper(x) => {
                self.bump();
                Ok(Formula::Var(VarName::new(x).expect("lexer produced an uppercase identifier")))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::Bot)
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let left = self.seq()?;
        if *self.peek() == Tok::Union {
            self.bump();
            let right = self.program()?;
            return Ok(Program::choice(left, right));
        }
        Ok(left)
    }

    fn seq(&mut self) -> PResult<Program> {
        let left = self.postfix()?;
        if *self.peek() == Tok::Semi {
            self.bump();
            let right = self.seq()?;
            return Ok(Program::seq(left, right));
        }
        Ok(left)
    }

    fn postfix(&mut self) -> PResult<Program> {
        let mut prog = self.primary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            prog = Program::star(prog);
        }
        Ok(prog)
    }

    fn primary(&mut self) -> PResult<Program> {
        let start = self.pos;
        match self.peek().clone() {
            Tok::LParen => {
                // `(formula)?` and `(program)` share a prefix; try the test first.
                self.bump();
                let as_test = self.formula().and_then(|cond| {
                    self.close(Tok::RParen, start, '(')?;
                    if *self.peek() == Tok::Question {
                        self.bump();
                        Ok(Program::test(cond))
                    } else {
                        Err(self.unexpected("'?'"))
                    }
                });
                let test_end = self.pos;
                match as_test {
                    Ok(prog) => Ok(prog),
                    Err(test_err) => {
                        self.pos = start + 1;
                        match self.program().and_then(|p| self.close(Tok::RParen, start, '(').map(|_| p)) {
                            Ok(prog) => Ok(prog),
                            Err(prog_err) if self.pos >= test_end => Err(prog_err),
                            Err(_) => {
                                self.pos = test_end;
                                Err(test_err)
                            }
                        }
                    }
                }
            }
            Tok::Lower(name) => {
                self.bump();
                if *self.peek() == Tok::Question {
                    self.bump();
                    Ok(Program::test(Formula::Atom(name)))
                } else {
                    Ok(Program::Atomic(name))
                }
            }
            Tok::Upper(x) => {
                self.bump();
                self.question()?;
                Ok(Program::test(Formula::Var(VarName::new(x).expect("uppercase identifier"))))
            }
            Tok::Tilde => {
                self.bump();
                match self.peek().clone() {
                    Tok::Lower(p) => {
                        self.bump();
                        self.question()?;
                        Ok(Program::test(Formula::NegAtom(p)))
                    }
                    _ => Err(self.unexpected("an atom after '~'")),
                }
            }
            Tok::True => {
                self.bump();
                self.question()?;
                Ok(Program::test(Formula::Top))
            }
            Tok::False => {
                self.bump();
                self.question()?;
                Ok(Program::test(Formula::Bot))
            }
            _ => Err(self.unexpected("a program")),
        }
    }

    fn question(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Question {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("'?'"))
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser { toks: lex(src)?, pos: 0 };
    let formula = parser.formula()?;
    parser.expect_eof()?;
    Ok(formula)
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut parser = Parser { toks: lex(src)?, pos: 0 };
    let program = parser.program()?;
    parser.expect_eof()?;
    Ok(program)
}

// Binding strength of a node when printed: higher binds tighter.
fn formula_level(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 0,
        Formula::And(..) => 1,
        _ => 2,
    }
}

fn program_level(p: &Program) -> u8 {
    match p {
        Program::Choice(..) => 0,
        Program::Seq(..) => 1,
        Program::Star(..) => 2,
        _ => 3,
    }
}

fn write_formula(out: &mut String, f: &Formula, min_level: u8) {
    let paren = formula_level(f) < min_level;
    if paren {
        out.push('(');
    }
    match f {
        Formula::Atom(p) => out.push_str(p),
        Formula::NegAtom(p) => {
            out.push('~');
            out.push_str(p);
        }
        Formula::Var(x) => out.push_str(x.as_str()),
        Formula::Top => out.push_str("true"),
        Formula::Bot => out.push_str("false"),
        Formula::Or(l, r) => {
            write_formula(out, l, 1);
            out.push_str(" | ");
            write_formula(out, r, 0);
        }
        Formula::And(l, r) => {
            write_formula(out, l, 2);
            out.push_str(" & ");
            write_formula(out, r, 1);
        }
        Formula::Box(a, body) => {
            out.push('[');
            write_program(out, a, 0);
            out.push(']');
            write_formula(out, body, 2);
        }
        Formula::Diamond(a, body) => {
            out.push('<');
            write_program(out, a, 0);
            out.push('>');
            write_formula(out, body, 2);
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_program(out: &mut String, p: &Program, min_level: u8) {
    let paren = program_level(p) < min_level;
    if paren {
        out.push('(');
    }
    match p {
        Program::Atomic(a) => out.push_str(a),
        Program::Test(cond) => match cond.as_ref() {
            Formula::Atom(_) | Formula::Var(_) | Formula::Top | Formula::Bot => {
                write_formula(out, cond, 2);
                out.push('?');
            }
            _ => {
                out.push('(');
                write_formula(out, cond, 0);
                out.push_str(")?");
            }
        },
        Program::Seq(a, b) => {
            write_program(out, a, 2);
            out.push_str(" ; ");
            write_program(out, b, 1);
        }
        Program::Choice(a, b) => {
            write_program(out, a, 1);
            out.push_str(" u ");
            write_program(out, b, 0);
        }
        Program::Star(a) => {
            write_program(out, a, 2);
            out.push('*');
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, 0);
    out
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    write_program(&mut out, p, 0);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

impl FromStr for Formula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl FromStr for Program {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_formula(&s).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Program {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_program(&s).map_err(serde::de::Error::custom)
    }
}
