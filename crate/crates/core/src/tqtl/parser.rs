//! Recursive-descent parser for the concrete TQTL syntax.
//!
//! ```text
//! formula    = until ;
//! until      = implies , { "until" , implies } ;
//! implies    = or , [ "->" , implies ] ;
//! or         = and , { "or" , and } ;
//! and        = unary , { "and" , unary } ;
//! unary      = ( "not" | "eventually" | "always" ) , unary
//!            | "freeze" , IDENT , "." , unary
//!            | ( "exists" | "forall" ) , IDENT , "at" , IDENT , "." , unary
//!            | comparison ;
//! comparison = operand , [ CMP , operand ] ;
//! operand    = primary , { ( "-" | "+" ) , primary } ;
//! primary    = "(" , formula , ")" | "true"
//!            | "class" , "(" , ")" , "==" , LABEL
//!            | "inclass" , "(" , IDENT , "," , LABEL , ")" | IDENT , "in" , LABEL
//!            | "S" , "(" , IDENT , "," , IDENT , ")" | "abs" , "(" , operand , ")"
//!            | [ "-" ] , NUMBER | IDENT | "T" ;
//! CMP        = "<" | "<=" | ">" | ">=" | "==" | "!=" ;
//! LABEL      = "REAL" | "FAKE" ;
//! ```
//!
//! Parenthesized groups may hold either a formula or an arithmetic operand;
//! the comparison that consumes an operand decides whether it is a score
//! predicate or a time constraint. Any side containing `S(..)`, `abs`, `-` or
//! a real literal (one with `.` or an exponent) makes a score predicate;
//! otherwise the comparison is a time constraint over variables, non-negative
//! integers, `T`, and `x + n`.

use std::fmt;

use super::ast::{Cmp, Formula, ScoreExpr, TimeTerm};
use super::lexer::{tokenize, LexError, Span, Token, TokenKind};
use crate::label::Label;

/// Nesting limit for prefix operators and parentheses.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    /// Tokens that would have been accepted at `span`, when known.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError {
            span: e.span,
            message: format!("lexical error: unexpected character {:?}", e.found),
            expected: Vec::new(),
        }
    }
}

/// Parses one formula. The whole input must be consumed.
pub fn parse(input: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(input)?;
    let end = end_span(input);
    let mut parser = Parser { tokens, pos: 0, depth: 0, end };
    let node = parser.until()?;
    let formula = parser.expect_formula(node)?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError {
            span: tok.span,
            message: format!("unexpected `{}` after complete formula", tok.lexeme),
            expected: vec!["until".into(), "->".into(), "or".into(), "and".into(), "end of input".into()],
        });
    }
    Ok(formula)
}

fn end_span(input: &str) -> Span {
    let line = input.split('\n').count().max(1);
    let column = input.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Span { line, column }
}

/// Untyped arithmetic operand, resolved once its comparison is known.
#[derive(Debug, Clone)]
enum Term {
    Sim(String, String),
    Real(f64),
    Int(u64),
    Ident(String),
    End,
    Abs(Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Plus(Box<Term>, Box<Term>),
}

impl Term {
    fn forces_score(&self) -> bool {
        match self {
            Term::Sim(..) | Term::Real(_) | Term::Abs(_) | Term::Sub(..) => true,
            Term::Plus(a, b) => a.forces_score() || b.forces_score(),
            Term::Int(_) | Term::Ident(_) | Term::End => false,
        }
    }
}

enum Node {
    Formula(Formula, Span),
    Term(Term, Span),
}

fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, f)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    end: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(lexeme))
    }

    fn span(&self) -> Span {
        self.peek().map_or(self.end, |t| t.span)
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.span(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.lexeme))
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, lexeme: &str) -> bool {
        if self.peek_is(lexeme) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<Span, ParseError> {
        let span = self.span();
        if self.eat(lexeme) {
            Ok(span)
        } else {
            Err(self.error(format!("found {}", self.found()), &[lexeme]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let name = t.lexeme.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error(format!("found {}", self.found()), &["identifier"])),
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        if self.eat("REAL") {
            Ok(Label::Real)
        } else if self.eat("FAKE") {
            Ok(Label::Fake)
        } else {
            Err(self.error(format!("found {}", self.found()), &["REAL", "FAKE"]))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(format!("nesting deeper than {MAX_DEPTH}"), &[]));
        }
        Ok(())
    }

    fn expect_formula(&self, node: Node) -> Result<Formula, ParseError> {
        match node {
            Node::Formula(f, _) => Ok(f),
            Node::Term(_, span) => Err(ParseError {
                span,
                message: "expression is not a formula; a comparison is missing".into(),
                expected: Cmp::ALL.iter().map(|c| c.symbol().to_string()).collect(),
            }),
        }
    }

    fn formula(&mut self, f: impl FnOnce(&mut Self) -> Result<Node, ParseError>) -> Result<Formula, ParseError> {
        let node = f(self)?;
        self.expect_formula(node)
    }

    fn until(&mut self) -> Result<Node, ParseError> {
        let saved = self.depth;
        let mut lhs = self.implies()?;
        while self.peek_is("until") {
            let span = node_span(&lhs);
            self.pos += 1;
            self.enter()?;
            let left = self.expect_formula(lhs)?;
            let right = self.formula(Self::implies)?;
            lhs = Node::Formula(Formula::until(left, right), span);
        }
        self.depth = saved;
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Node, ParseError> {
        let lhs = self.or()?;
        if self.peek_is("->") {
            let span = node_span(&lhs);
            self.pos += 1;
            self.enter()?;
            let left = self.expect_formula(lhs)?;
            let right = grow(|| self.formula(Self::implies))?;
            self.depth -= 1;
            return Ok(Node::Formula(Formula::implies(left, right), span));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Node, ParseError> {
        let saved = self.depth;
        let mut lhs = self.and()?;
        while self.peek_is("or") {
            let span = node_span(&lhs);
            self.pos += 1;
            self.enter()?;
            let left = self.expect_formula(lhs)?;
            let right = self.formula(Self::and)?;
            lhs = Node::Formula(Formula::or(left, right), span);
        }
        self.depth = saved;
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Node, ParseError> {
        let saved = self.depth;
        let mut lhs = self.unary()?;
        while self.peek_is("and") {
            let span = node_span(&lhs);
            self.pos += 1;
            self.enter()?;
            let left = self.expect_formula(lhs)?;
            let right = self.formula(Self::unary)?;
            lhs = Node::Formula(Formula::and(left, right), span);
        }
        self.depth = saved;
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let span = self.span();
        let keyword = match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => t.lexeme.clone(),
            _ => return self.comparison(),
        };
        let build: Box<dyn FnOnce(Formula) -> Formula> = match keyword.as_str() {
            "not" => {
                self.pos += 1;
                Box::new(Formula::not)
            }
            "eventually" => {
                self.pos += 1;
                Box::new(Formula::eventually)
            }
            "always" => {
                self.pos += 1;
                Box::new(Formula::always)
            }
            "freeze" => {
                self.pos += 1;
                let var = self.ident()?;
                self.expect(".")?;
                Box::new(move |body| Formula::freeze(var, body))
            }
            "exists" | "forall" => {
                self.pos += 1;
                let proto = self.ident()?;
                self.expect("at")?;
                let at = self.ident()?;
                self.expect(".")?;
                if keyword == "exists" {
                    Box::new(move |body| Formula::exists(proto, at, body))
                } else {
                    Box::new(move |body| Formula::forall(proto, at, body))
                }
            }
            _ => return self.comparison(),
        };
        self.enter()?;
        let body = grow(|| self.formula(Self::unary))?;
        self.depth -= 1;
        Ok(Node::Formula(build(body), span))
    }

    fn comparison(&mut self) -> Result<Node, ParseError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => Cmp::from_symbol(&t.lexeme),
            _ => None,
        };
        let Some(op) = op else { return Ok(lhs) };
        let op_span = self.span();
        self.pos += 1;
        let (lhs, lspan) = match lhs {
            Node::Term(t, s) => (t, s),
            Node::Formula(_, s) => {
                return Err(ParseError {
                    span: s,
                    message: format!("left operand of `{}` is a formula, not an expression", op.symbol()),
                    expected: Vec::new(),
                })
            }
        };
        let rhs = match self.operand()? {
            Node::Term(t, _) => t,
            Node::Formula(_, s) => {
                return Err(ParseError {
                    span: s,
                    message: format!("right operand of `{}` is a formula, not an expression", op.symbol()),
                    expected: Vec::new(),
                })
            }
        };
        let formula = if lhs.forces_score() || rhs.forces_score() {
            Formula::pred(to_score(lhs, lspan)?, op, to_score(rhs, op_span)?)
        } else {
            Formula::time(to_time(lhs, lspan)?, op, to_time(rhs, op_span)?)
        };
        Ok(Node::Formula(formula, lspan))
    }

    fn operand(&mut self) -> Result<Node, ParseError> {
        let saved = self.depth;
        let mut lhs = self.primary()?;
        loop {
            let plus = self.peek_is("+");
            if !plus && !self.peek_is("-") {
                self.depth = saved;
                return Ok(lhs);
            }
            let op_span = self.span();
            self.pos += 1;
            self.enter()?;
            let left = match lhs {
                Node::Term(t, s) => (t, s),
                Node::Formula(_, s) => {
                    return Err(ParseError {
                        span: s,
                        message: "arithmetic on a formula".into(),
                        expected: Vec::new(),
                    })
                }
            };
            let right = match self.primary()? {
                Node::Term(t, _) => t,
                Node::Formula(..) => {
                    return Err(ParseError {
                        span: op_span,
                        message: "arithmetic on a formula".into(),
                        expected: Vec::new(),
                    })
                }
            };
            let term = if plus {
                Term::Plus(Box::new(left.0), Box::new(right))
            } else {
                Term::Sub(Box::new(left.0), Box::new(right))
            };
            lhs = Node::Term(term, left.1);
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let span = self.span();
        let Some(tok) = self.advance() else {
            return Err(self.error("unexpected end of input", PRIMARY_START));
        };
        let term = |t| Ok(Node::Term(t, span));
        match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Punctuation, "(") => {
                self.enter()?;
                let inner = grow(|| self.until())?;
                self.expect(")")?;
                self.depth -= 1;
                Ok(match inner {
                    Node::Formula(f, _) => Node::Formula(f, span),
                    Node::Term(t, _) => Node::Term(t, span),
                })
            }
            (TokenKind::Keyword, "true") => Ok(Node::Formula(Formula::True, span)),
            (TokenKind::Keyword, "class") => {
                self.expect("(")?;
                self.expect(")")?;
                self.expect("==")?;
                let l = self.label()?;
                Ok(Node::Formula(Formula::video_is(l), span))
            }
            (TokenKind::Keyword, "inclass") => {
                self.expect("(")?;
                let p = self.ident()?;
                self.expect(",")?;
                let l = self.label()?;
                self.expect(")")?;
                Ok(Node::Formula(Formula::proto_in(p, l), span))
            }
            (TokenKind::Keyword, "S") => {
                self.expect("(")?;
                let t = self.ident()?;
                self.expect(",")?;
                let p = self.ident()?;
                self.expect(")")?;
                term(Term::Sim(t, p))
            }
            (TokenKind::Keyword, "abs") => {
                self.expect("(")?;
                self.enter()?;
                let inner = match self.operand()? {
                    Node::Term(t, _) => t,
                    Node::Formula(_, s) => {
                        return Err(ParseError {
                            span: s,
                            message: "abs() takes an expression, not a formula".into(),
                            expected: Vec::new(),
                        })
                    }
                };
                self.depth -= 1;
                self.expect(")")?;
                term(Term::Abs(Box::new(inner)))
            }
            (TokenKind::Keyword, "T") => term(Term::End),
            (TokenKind::Operator, "-") => {
                let num_span = self.span();
                match self.advance() {
                    Some(t) if t.kind == TokenKind::Number => {
                        let v = parse_real(&t.lexeme, num_span)?;
                        term(Term::Real(-v))
                    }
                    _ => Err(ParseError {
                        span: num_span,
                        message: "unary minus applies only to numeric literals".into(),
                        expected: vec!["number".into()],
                    }),
                }
            }
            (TokenKind::Number, lexeme) => {
                if lexeme.contains(['.', 'e', 'E']) {
                    term(Term::Real(parse_real(lexeme, span)?))
                } else {
                    match lexeme.parse::<u64>() {
                        Ok(n) => term(Term::Int(n)),
                        Err(_) => Err(ParseError {
                            span,
                            message: format!("integer literal `{lexeme}` out of range"),
                            expected: Vec::new(),
                        }),
                    }
                }
            }
            (TokenKind::Identifier, _) => {
                let name = tok.lexeme;
                if self.eat("in") {
                    let l = self.label()?;
                    return Ok(Node::Formula(Formula::proto_in(name, l), span));
                }
                term(Term::Ident(name))
            }
            _ => Err(ParseError {
                span,
                message: format!("unexpected `{}`", tok.lexeme),
                expected: PRIMARY_START.iter().map(|s| s.to_string()).collect(),
            }),
        }
    }
}

const PRIMARY_START: &[&str] = &[
    "(", "true", "not", "eventually", "always", "freeze", "exists", "forall", "class", "inclass", "S",
    "abs", "T", "number", "identifier",
];

fn node_span(node: &Node) -> Span {
    match node {
        Node::Formula(_, s) | Node::Term(_, s) => *s,
    }
}

fn parse_real(lexeme: &str, span: Span) -> Result<f64, ParseError> {
    match lexeme.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError { span, message: format!("numeric literal `{lexeme}` out of range"), expected: Vec::new() }),
    }
}

fn to_score(term: Term, span: Span) -> Result<ScoreExpr, ParseError> {
    let fail = |message: String| ParseError { span, message, expected: Vec::new() };
    Ok(match term {
        Term::Sim(t, p) => ScoreExpr::Sim { time: t, proto: p },
        Term::Real(v) => ScoreExpr::Const(v),
        Term::Int(n) => ScoreExpr::Const(n as f64),
        Term::Abs(e) => ScoreExpr::abs(to_score(*e, span)?),
        Term::Sub(a, b) => ScoreExpr::minus(to_score(*a, span)?, to_score(*b, span)?),
        Term::Ident(x) => return Err(fail(format!("time variable `{x}` used in a score comparison"))),
        Term::End => return Err(fail("`T` used in a score comparison".into())),
        Term::Plus(..) => return Err(fail("`+` is only allowed in time constraints (x + n)".into())),
    })
}

fn to_time(term: Term, span: Span) -> Result<TimeTerm, ParseError> {
    match term {
        Term::Ident(x) => Ok(TimeTerm::Var(x)),
        Term::Int(n) => Ok(TimeTerm::Int(n)),
        Term::End => Ok(TimeTerm::End),
        Term::Plus(a, b) => match (*a, *b) {
            (Term::Ident(x), Term::Int(n)) => Ok(TimeTerm::VarPlus(x, n)),
            _ => Err(ParseError {
                span,
                message: "time offsets must have the form `x + n` with n a non-negative integer".into(),
                expected: Vec::new(),
            }),
        },
        _ => Err(ParseError { span, message: "malformed time term".into(), expected: Vec::new() }),
    }
}
