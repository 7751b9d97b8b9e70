//! Canonical concrete syntax with minimal parentheses.
//!
//! Binding strength, loosest first: `until` (left-assoc), `->` (right-assoc),
//! `or`, `and`, then the prefix operators, then atoms. The output parses back
//! to the identical tree.

use std::fmt::{self, Display, Write};

use super::ast::{ClassAtom, Formula, ScoreExpr, TimeTerm};

const UNTIL: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const PREFIX: u8 = 5;
const ATOM: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Until(..) => UNTIL,
        Formula::Implies(..) => IMPLIES,
        Formula::Or(..) => OR,
        Formula::And(..) => AND,
        Formula::Not(_)
        | Formula::Eventually(_)
        | Formula::Always(_)
        | Formula::Freeze { .. }
        | Formula::Exists { .. }
        | Formula::Forall { .. } => PREFIX,
        Formula::True | Formula::Predicate { .. } | Formula::Class(_) | Formula::Time { .. } => ATOM,
    }
}

/// Writes `f`, parenthesized when it binds looser than `min`.
fn write_at(out: &mut fmt::Formatter<'_>, f: &Formula, min: u8) -> fmt::Result {
    if precedence(f) < min {
        out.write_char('(')?;
        write_formula(out, f)?;
        out.write_char(')')
    } else {
        write_formula(out, f)
    }
}

fn write_formula(out: &mut fmt::Formatter<'_>, f: &Formula) -> fmt::Result {
    match f {
        Formula::True => out.write_str("true"),
        Formula::Predicate { lhs, op, rhs } => write!(out, "{lhs} {} {rhs}", op.symbol()),
        Formula::Time { lhs, op, rhs } => write!(out, "{lhs} {} {rhs}", op.symbol()),
        Formula::Class(ClassAtom::VideoIs(l)) => write!(out, "class() == {l}"),
        Formula::Class(ClassAtom::ProtoIn { proto, class }) => write!(out, "inclass({proto}, {class})"),
        Formula::Not(x) => {
            out.write_str("not ")?;
            write_at(out, x, PREFIX)
        }
        Formula::Eventually(x) => {
            out.write_str("eventually ")?;
            write_at(out, x, PREFIX)
        }
        Formula::Always(x) => {
            out.write_str("always ")?;
            write_at(out, x, PREFIX)
        }
        Formula::Freeze { var, body } => {
            write!(out, "freeze {var} . ")?;
            write_at(out, body, PREFIX)
        }
        Formula::Exists { proto, at, body } => {
            write!(out, "exists {proto} at {at} . ")?;
            write_at(out, body, PREFIX)
        }
        Formula::Forall { proto, at, body } => {
            write!(out, "forall {proto} at {at} . ")?;
            write_at(out, body, PREFIX)
        }
        Formula::Until(a, b) => binary(out, a, "until", b, UNTIL, UNTIL + 1),
        Formula::Implies(a, b) => binary(out, a, "->", b, IMPLIES + 1, IMPLIES),
        Formula::Or(a, b) => binary(out, a, "or", b, OR, OR + 1),
        Formula::And(a, b) => binary(out, a, "and", b, AND, AND + 1),
    }
}

fn binary(
    out: &mut fmt::Formatter<'_>,
    lhs: &Formula,
    op: &str,
    rhs: &Formula,
    lhs_min: u8,
    rhs_min: u8,
) -> fmt::Result {
    write_at(out, lhs, lhs_min)?;
    write!(out, " {op} ")?;
    write_at(out, rhs, rhs_min)
}

impl Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self)
    }
}

impl Display for ScoreExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreExpr::Sim { time, proto } => write!(f, "S({time}, {proto})"),
            // `{:?}` always yields a `.` or an exponent, which is what marks
            // the literal as real-valued for the parser.
            ScoreExpr::Const(v) => write!(f, "{v:?}"),
            ScoreExpr::Abs(e) => write!(f, "abs({e})"),
            ScoreExpr::Sub(a, b) => match **b {
                ScoreExpr::Sub(..) => write!(f, "{a} - ({b})"),
                _ => write!(f, "{a} - {b}"),
            },
        }
    }
}

impl Display for TimeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeTerm::Var(x) => f.write_str(x),
            TimeTerm::Int(n) => write!(f, "{n}"),
            TimeTerm::End => f.write_str("T"),
            TimeTerm::VarPlus(x, n) => write!(f, "{x} + {n}"),
        }
    }
}

/// Canonical text of `formula`.
pub fn pretty_print(formula: &Formula) -> String {
    formula.to_string()
}
