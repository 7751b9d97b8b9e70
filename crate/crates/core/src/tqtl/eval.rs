//! Quantitative semantics over a [`Trace`].
//!
//! | formula              | quality value at frame `i`                                     |
//! |----------------------|----------------------------------------------------------------|
//! | `true`               | `+inf`                                                         |
//! | `e1 ~ e2`            | signed margin, see [`predicate_margin`]                        |
//! | class atoms          | `+inf` if the fact holds, else `-inf`                          |
//! | `x ~ y + n`          | `+inf` if the comparison holds, else `-inf`                    |
//! | `not a`              | `-[a]`                                                         |
//! | `a or b`             | `max([a], [b])`                                                |
//! | `a until b`          | `max_{i<=j<T} min([b](j), min_{i<=k<j} [a](k))`                |
//! | `freeze x . a`       | `[a]` with `x` bound to `i`                                    |
//! | `exists p at x . a`  | `max` over every catalog prototype bound to `p`                |
//!
//! Sugar nodes are evaluated through closed forms that are bit-identical to
//! their lowered expansions (for instance `always a` is `min_{j>=i} [a](j)`,
//! which equals `-(true until not a)` exactly under the total order).

use std::fmt;

use super::ast::{ClassAtom, Cmp, Formula, ScoreExpr, TimeTerm, VarKind};
use super::robustness::{Robustness, Verdict};
use crate::trace::{ClassSource, Trace};

/// Variable bindings. Binding returns a new environment; the receiver is
/// never modified.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Environment {
    time: Vec<(String, usize)>,
    proto: Vec<(String, usize)>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_time(&self, name: impl Into<String>, frame: usize) -> Environment {
        let mut next = self.clone();
        next.time.push((name.into(), frame));
        next
    }

    pub fn bind_proto(&self, name: impl Into<String>, id: usize) -> Environment {
        let mut next = self.clone();
        next.proto.push((name.into(), id));
        next
    }

    pub fn time(&self, name: &str) -> Option<usize> {
        self.time.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn proto(&self, name: &str) -> Option<usize> {
        self.proto.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound {kind} variable `{name}` during evaluation")]
    Unbound { kind: VarKind, name: String },
    #[error("frame {frame} outside trace of length {len}")]
    FrameOutOfRange { frame: usize, len: usize },
    #[error("prototype {id} outside catalog of size {m}")]
    PrototypeOutOfRange { id: usize, m: usize },
    #[error("comparison between {lhs} and {rhs} has no defined margin")]
    UndefinedMargin { lhs: f64, rhs: f64 },
}

/// Signed margin of `lhs op rhs`: positive when the comparison holds strictly,
/// zero at ties.
pub fn predicate_margin(lhs: f64, op: Cmp, rhs: f64) -> f64 {
    match op {
        Cmp::Gt | Cmp::Ge => lhs - rhs,
        Cmp::Lt | Cmp::Le => rhs - lhs,
        Cmp::Eq => -(lhs - rhs).abs(),
        Cmp::Ne => (lhs - rhs).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

/// `max_{from<=j<len} min(rhs(j), min_{from<=k<j} lhs(k))`, with the inner
/// minimum kept as a running prefix. `at(side, j)` yields the operand's
/// quality value at frame `j`. Stops early once the result is decided.
pub fn until_fold<E>(
    from: usize,
    len: usize,
    mut at: impl FnMut(Side, usize) -> Result<Robustness, E>,
) -> Result<Robustness, E> {
    let mut best = Robustness::NegInf;
    let mut prefix_min = Robustness::PosInf;
    for j in from..len {
        best = best.max(at(Side::Rhs, j)?.min(prefix_min));
        if best == Robustness::PosInf {
            break;
        }
        prefix_min = prefix_min.min(at(Side::Lhs, j)?);
        if prefix_min == Robustness::NegInf {
            break;
        }
    }
    Ok(best)
}

/// Binding stack borrowed from the formula being evaluated.
struct Scope<'a> {
    time: Vec<(&'a str, usize)>,
    proto: Vec<(&'a str, usize)>,
}

impl<'a> Scope<'a> {
    fn time(&self, name: &str) -> Result<usize, EvalError> {
        self.time
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| EvalError::Unbound { kind: VarKind::Time, name: name.to_string() })
    }

    fn proto(&self, name: &str) -> Result<usize, EvalError> {
        self.proto
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| EvalError::Unbound { kind: VarKind::Prototype, name: name.to_string() })
    }
}

/// Evaluates formulas against one trace. Stateless apart from the borrowed
/// trace, so one evaluator can be shared across threads.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'t> {
    trace: &'t Trace,
    class_source: ClassSource,
}

impl<'t> Evaluator<'t> {
    pub fn new(trace: &'t Trace) -> Self {
        Evaluator { trace, class_source: ClassSource::default() }
    }

    pub fn with_class_source(mut self, source: ClassSource) -> Self {
        self.class_source = source;
        self
    }

    /// Quality value of `formula` at `frame` under `env`.
    pub fn evaluate(&self, formula: &Formula, frame: usize, env: &Environment) -> Result<Robustness, EvalError> {
        if frame >= self.trace.len() {
            return Err(EvalError::FrameOutOfRange { frame, len: self.trace.len() });
        }
        let m = self.trace.num_prototypes();
        if let Some((_, id)) = env.proto.iter().find(|(_, id)| *id >= m) {
            return Err(EvalError::PrototypeOutOfRange { id: *id, m });
        }
        let mut scope = Scope {
            time: env.time.iter().map(|(n, v)| (n.as_str(), *v)).collect(),
            proto: env.proto.iter().map(|(n, v)| (n.as_str(), *v)).collect(),
        };
        self.eval(formula, frame, &mut scope)
    }

    /// Quality value at frame 0 under the empty environment.
    pub fn robustness(&self, formula: &Formula) -> Result<Robustness, EvalError> {
        self.evaluate(formula, 0, &Environment::new())
    }

    pub fn verdict(&self, formula: &Formula) -> Result<Verdict, EvalError> {
        self.robustness(formula).map(Verdict::from_robustness)
    }

    fn eval<'a>(&self, f: &'a Formula, i: usize, sc: &mut Scope<'a>) -> Result<Robustness, EvalError> {
        use Robustness::{NegInf, PosInf};
        let len = self.trace.len();
        Ok(match f {
            Formula::True => PosInf,
            Formula::Predicate { lhs, op, rhs } => {
                let l = self.value(lhs, sc)?;
                let r = self.value(rhs, sc)?;
                let margin = predicate_margin(l, *op, r);
                if margin.is_nan() {
                    return Err(EvalError::UndefinedMargin { lhs: l, rhs: r });
                }
                Robustness::from_f64(margin)
            }
            Formula::Class(ClassAtom::VideoIs(label)) => {
                Robustness::from_bool(self.trace.video_class(self.class_source) == *label)
            }
            Formula::Class(ClassAtom::ProtoIn { proto, class }) => {
                let id = sc.proto(proto)?;
                Robustness::from_bool(self.trace.prototype_class(id) == *class)
            }
            Formula::Time { lhs, op, rhs } => {
                let l = self.frame_value(lhs, sc)?;
                let r = self.frame_value(rhs, sc)?;
                Robustness::from_bool(op.holds(l, r))
            }
            Formula::Not(a) => -self.eval(a, i, sc)?,
            Formula::Or(a, b) => self.eval(a, i, sc)?.max(self.eval(b, i, sc)?),
            Formula::And(a, b) => self.eval(a, i, sc)?.min(self.eval(b, i, sc)?),
            Formula::Implies(a, b) => (-self.eval(a, i, sc)?).max(self.eval(b, i, sc)?),
            Formula::Until(a, b) => until_fold(i, len, |side, j| match side {
                Side::Lhs => self.eval(a, j, sc),
                Side::Rhs => self.eval(b, j, sc),
            })?,
            Formula::Eventually(a) => {
                let mut best = NegInf;
                for j in i..len {
                    best = best.max(self.eval(a, j, sc)?);
                    if best == PosInf {
                        break;
                    }
                }
                best
            }
            Formula::Always(a) => {
                let mut worst = PosInf;
                for j in i..len {
                    worst = worst.min(self.eval(a, j, sc)?);
                    if worst == NegInf {
                        break;
                    }
                }
                worst
            }
            Formula::Freeze { var, body } => {
                sc.time.push((var, i));
                let r = self.eval(body, i, sc);
                sc.time.pop();
                r?
            }
            Formula::Exists { proto, at, body } => {
                sc.time(at)?;
                self.quantify(proto, body, i, sc, NegInf, Robustness::max)?
            }
            Formula::Forall { proto, at, body } => {
                sc.time(at)?;
                self.quantify(proto, body, i, sc, PosInf, Robustness::min)?
            }
        })
    }

    fn quantify<'a>(
        &self,
        var: &'a str,
        body: &'a Formula,
        i: usize,
        sc: &mut Scope<'a>,
        identity: Robustness,
        combine: fn(Robustness, Robustness) -> Robustness,
    ) -> Result<Robustness, EvalError> {
        // Absorbing element of `combine`.
        let stop = -identity;
        let mut acc = identity;
        for k in 0..self.trace.num_prototypes() {
            sc.proto.push((var, k));
            let r = self.eval(body, i, sc);
            sc.proto.pop();
            acc = combine(acc, r?);
            if acc == stop {
                break;
            }
        }
        Ok(acc)
    }

    fn value(&self, e: &ScoreExpr, sc: &Scope<'_>) -> Result<f64, EvalError> {
        Ok(match e {
            ScoreExpr::Sim { time, proto } => {
                let t = sc.time(time)?;
                let p = sc.proto(proto)?;
                if t >= self.trace.len() {
                    return Err(EvalError::FrameOutOfRange { frame: t, len: self.trace.len() });
                }
                self.trace.score(t, p)
            }
            ScoreExpr::Const(c) => *c,
            ScoreExpr::Abs(inner) => self.value(inner, sc)?.abs(),
            ScoreExpr::Sub(a, b) => self.value(a, sc)? - self.value(b, sc)?,
        })
    }

    fn frame_value(&self, t: &TimeTerm, sc: &Scope<'_>) -> Result<i128, EvalError> {
        Ok(match t {
            TimeTerm::Var(x) => sc.time(x)? as i128,
            TimeTerm::Int(n) => *n as i128,
            TimeTerm::End => self.trace.len() as i128,
            TimeTerm::VarPlus(x, n) => sc.time(x)? as i128 + *n as i128,
        })
    }
}

/// [`Evaluator::evaluate`] with class atoms reading the predicted label.
pub fn evaluate(formula: &Formula, trace: &Trace, frame: usize, env: &Environment) -> Result<Robustness, EvalError> {
    Evaluator::new(trace).evaluate(formula, frame, env)
}

/// Verdict of `trace ⊨ formula`: SAT iff the quality value at frame 0 is
/// strictly positive.
pub fn satisfies(formula: &Formula, trace: &Trace) -> Result<Verdict, EvalError> {
    Evaluator::new(trace).verdict(formula)
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .time
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .chain(self.proto.iter().map(|(n, v)| format!("{n}=p{v}")))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
