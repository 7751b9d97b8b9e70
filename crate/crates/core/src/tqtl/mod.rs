//! Timed Quality Temporal Logic: syntax, parsing, and evaluation.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod oracle;
pub mod parser;
pub mod print;
pub mod robustness;

pub use ast::{lower, scope_check, ClassAtom, Cmp, Formula, ScopeError, ScoreExpr, TimeTerm, VarKind};
pub use eval::{evaluate, satisfies, Environment, EvalError, Evaluator};
pub use lexer::{tokenize, LexError, Span, Token, TokenKind};
pub use oracle::boolean_oracle;
pub use parser::{parse, ParseError};
pub use print::pretty_print;
pub use robustness::{Robustness, Verdict};
