//! Formula trees for Timed Quality Temporal Logic over prototype similarities.

use std::fmt;

use crate::label::Label;

/// Comparison operator shared by score predicates and time constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub const ALL: [Cmp; 6] = [Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge, Cmp::Eq, Cmp::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Cmp> {
        Cmp::ALL.into_iter().find(|c| c.symbol() == s)
    }

    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
        }
    }
}

/// Real-valued expression over similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreExpr {
    /// `S(t, p)`: similarity of prototype `p` at the frame bound to `t`.
    Sim { time: String, proto: String },
    Const(f64),
    Abs(Box<ScoreExpr>),
    Sub(Box<ScoreExpr>, Box<ScoreExpr>),
}

impl ScoreExpr {
    pub fn sim(time: impl Into<String>, proto: impl Into<String>) -> ScoreExpr {
        ScoreExpr::Sim { time: time.into(), proto: proto.into() }
    }

    pub fn abs(e: ScoreExpr) -> ScoreExpr {
        ScoreExpr::Abs(Box::new(e))
    }

    pub fn minus(a: ScoreExpr, b: ScoreExpr) -> ScoreExpr {
        ScoreExpr::Sub(Box::new(a), Box::new(b))
    }
}

/// Integer-valued frame expression used by time constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeTerm {
    Var(String),
    Int(u64),
    /// `T`, the trace length T_V.
    End,
    /// `x + n`
    VarPlus(String, u64),
}

impl TimeTerm {
    pub fn var(name: impl Into<String>) -> TimeTerm {
        TimeTerm::Var(name.into())
    }
}

/// Frame-independent categorical facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassAtom {
    /// `class() == L`
    VideoIs(Label),
    /// `inclass(p, L)`
    ProtoIn { proto: String, class: Label },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Predicate { lhs: ScoreExpr, op: Cmp, rhs: ScoreExpr },
    Class(ClassAtom),
    Time { lhs: TimeTerm, op: Cmp, rhs: TimeTerm },
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Freeze { var: String, body: Box<Formula> },
    Exists { proto: String, at: String, body: Box<Formula> },
    // Sugar; `lower` rewrites these into the nodes above.
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Forall { proto: String, at: String, body: Box<Formula> },
}

impl Formula {
    pub fn pred(lhs: ScoreExpr, op: Cmp, rhs: ScoreExpr) -> Formula {
        Formula::Predicate { lhs, op, rhs }
    }

    pub fn time(lhs: TimeTerm, op: Cmp, rhs: TimeTerm) -> Formula {
        Formula::Time { lhs, op, rhs }
    }

    pub fn video_is(class: Label) -> Formula {
        Formula::Class(ClassAtom::VideoIs(class))
    }

    pub fn proto_in(proto: impl Into<String>, class: Label) -> Formula {
        Formula::Class(ClassAtom::ProtoIn { proto: proto.into(), class })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn freeze(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Freeze { var: var.into(), body: Box::new(body) }
    }

    pub fn exists(proto: impl Into<String>, at: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists { proto: proto.into(), at: at.into(), body: Box::new(body) }
    }

    pub fn forall(proto: impl Into<String>, at: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall { proto: proto.into(), at: at.into(), body: Box::new(body) }
    }

    /// True when the node is part of the core grammar (children not inspected).
    pub fn is_core_node(&self) -> bool {
        !matches!(
            self,
            Formula::And(..)
                | Formula::Implies(..)
                | Formula::Eventually(_)
                | Formula::Always(_)
                | Formula::Forall { .. }
        )
    }

    /// True when no sugar node occurs anywhere in the tree.
    pub fn is_core(&self) -> bool {
        self.is_core_node() && self.children().all(Formula::is_core)
    }

    pub fn children(&self) -> impl Iterator<Item = &Formula> {
        let (a, b): (Option<&Formula>, Option<&Formula>) = match self {
            Formula::True | Formula::Predicate { .. } | Formula::Class(_) | Formula::Time { .. } => {
                (None, None)
            }
            Formula::Not(f) | Formula::Eventually(f) | Formula::Always(f) => (Some(f), None),
            Formula::Freeze { body, .. } | Formula::Exists { body, .. } | Formula::Forall { body, .. } => {
                (Some(body), None)
            }
            Formula::Or(x, y) | Formula::Until(x, y) | Formula::And(x, y) | Formula::Implies(x, y) => {
                (Some(x), Some(y))
            }
        };
        a.into_iter().chain(b)
    }

    /// Number of formula nodes.
    pub fn size(&self) -> usize {
        1 + self.children().map(Formula::size).sum::<usize>()
    }
}

/// Rewrites every sugar node into the core grammar:
/// `a -> b` is `not a or b`, `eventually a` is `true until a`,
/// `always a` is `not eventually not a`, `forall` is `not exists not`,
/// and `a and b` is `not (not a or not b)`.
pub fn lower(formula: &Formula) -> Formula {
    use Formula as F;
    match formula {
        F::True | F::Predicate { .. } | F::Class(_) | F::Time { .. } => formula.clone(),
        F::Not(f) => F::not(lower(f)),
        F::Or(a, b) => F::or(lower(a), lower(b)),
        F::Until(a, b) => F::until(lower(a), lower(b)),
        F::Freeze { var, body } => F::freeze(var.clone(), lower(body)),
        F::Exists { proto, at, body } => F::exists(proto.clone(), at.clone(), lower(body)),
        F::And(a, b) => F::not(F::or(F::not(lower(a)), F::not(lower(b)))),
        F::Implies(a, b) => F::or(F::not(lower(a)), lower(b)),
        F::Eventually(f) => F::until(F::True, lower(f)),
        F::Always(f) => F::not(F::until(F::True, F::not(lower(f)))),
        F::Forall { proto, at, body } => {
            F::not(F::exists(proto.clone(), at.clone(), F::not(lower(body))))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Time,
    Prototype,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Time => "time",
            VarKind::Prototype => "prototype",
        })
    }
}

/// An occurrence of a variable with no enclosing binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeError {
    pub kind: VarKind,
    pub name: String,
    /// Slash-separated route from the root to the offending node.
    pub path: String,
}

impl fmt::Display for ScopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unbound {} variable `{}` at {}", self.kind, self.name, self.path)
    }
}

/// Reports every unbound time or prototype variable occurrence. Binders are
/// lexically scoped and an inner binder shadows an outer one of the same name.
pub fn scope_check(formula: &Formula) -> Vec<ScopeError> {
    let mut checker = ScopeChecker::default();
    checker.visit(formula, &mut vec!["root".to_string()]);
    checker.errors
}

#[derive(Default)]
struct ScopeChecker<'f> {
    times: Vec<&'f str>,
    protos: Vec<&'f str>,
    errors: Vec<ScopeError>,
}

impl<'f> ScopeChecker<'f> {
    fn require(&mut self, kind: VarKind, name: &str, path: &[String], leaf: &str) {
        let bound = match kind {
            VarKind::Time => self.times.contains(&name),
            VarKind::Prototype => self.protos.contains(&name),
        };
        if !bound {
            let mut p = path.join("/");
            p.push('/');
            p.push_str(leaf);
            self.errors.push(ScopeError { kind, name: name.to_string(), path: p });
        }
    }

    fn score(&mut self, e: &ScoreExpr, path: &[String], leaf: &str) {
        match e {
            ScoreExpr::Sim { time, proto } => {
                self.require(VarKind::Time, time, path, leaf);
                self.require(VarKind::Prototype, proto, path, leaf);
            }
            ScoreExpr::Const(_) => {}
            ScoreExpr::Abs(inner) => self.score(inner, path, leaf),
            ScoreExpr::Sub(a, b) => {
                self.score(a, path, leaf);
                self.score(b, path, leaf);
            }
        }
    }

    fn time_term(&mut self, t: &TimeTerm, path: &[String], leaf: &str) {
        match t {
            TimeTerm::Var(x) | TimeTerm::VarPlus(x, _) => self.require(VarKind::Time, x, path, leaf),
            TimeTerm::Int(_) | TimeTerm::End => {}
        }
    }

    fn visit(&mut self, f: &'f Formula, path: &mut Vec<String>) {
        use Formula as F;
        let descend = |this: &mut Self, label: String, child: &'f Formula, path: &mut Vec<String>| {
            path.push(label);
            this.visit(child, path);
            path.pop();
        };
        match f {
            F::True => {}
            F::Predicate { lhs, rhs, .. } => {
                self.score(lhs, path, "predicate.lhs");
                self.score(rhs, path, "predicate.rhs");
            }
            F::Time { lhs, rhs, .. } => {
                self.time_term(lhs, path, "time.lhs");
                self.time_term(rhs, path, "time.rhs");
            }
            F::Class(ClassAtom::VideoIs(_)) => {}
            F::Class(ClassAtom::ProtoIn { proto, .. }) => {
                self.require(VarKind::Prototype, proto, path, "inclass")
            }
            F::Not(x) => descend(self, "not".into(), x, path),
            F::Eventually(x) => descend(self, "eventually".into(), x, path),
            F::Always(x) => descend(self, "always".into(), x, path),
            F::Or(a, b) => {
                descend(self, "or.lhs".into(), a, path);
                descend(self, "or.rhs".into(), b, path);
            }
            F::And(a, b) => {
                descend(self, "and.lhs".into(), a, path);
                descend(self, "and.rhs".into(), b, path);
            }
            F::Implies(a, b) => {
                descend(self, "implies.lhs".into(), a, path);
                descend(self, "implies.rhs".into(), b, path);
            }
            F::Until(a, b) => {
                descend(self, "until.lhs".into(), a, path);
                descend(self, "until.rhs".into(), b, path);
            }
            F::Freeze { var, body } => {
                self.times.push(var);
                descend(self, format!("freeze {var}"), body, path);
                self.times.pop();
            }
            F::Exists { proto, at, body } | F::Forall { proto, at, body } => {
                let quant = if matches!(f, F::Exists { .. }) { "exists" } else { "forall" };
                let label = format!("{quant} {proto} at {at}");
                self.require(VarKind::Time, at, path, &label);
                self.protos.push(proto);
                descend(self, label, body, path);
                self.protos.pop();
            }
        }
    }
}
