//! Brute-force boolean semantics, kept independent of the quantitative
//! evaluator so the two can be cross-checked.
//!
//! Sugar is lowered first and only the core grammar is interpreted. Until is
//! enumerated literally (`exists j >= i` such that the right side holds at `j`
//! and the left side holds at every `k` in `[i, j)`). Comparisons are strict
//! to mirror the sign of the quantitative margins: `>=` and `>` both mean
//! `>`, `<=` and `<` both mean `<`, `==` never holds and `!=` means `!=`.
//! Cases whose robustness is exactly zero are outside the contract.

use std::collections::HashMap;

use super::ast::{lower, ClassAtom, Cmp, Formula, ScoreExpr, TimeTerm};
use super::eval::Environment;
use crate::trace::{ClassSource, Trace};

/// Intended for small traces (T_V <= 10, m <= 4); cost grows exponentially
/// with nesting depth.
///
/// # Panics
/// On unbound variables; callers scope-check first.
pub fn boolean_oracle(formula: &Formula, trace: &Trace, frame: usize, env: &Environment) -> bool {
    boolean_oracle_with(formula, trace, frame, env, ClassSource::Predicted)
}

pub fn boolean_oracle_with(
    formula: &Formula,
    trace: &Trace,
    frame: usize,
    env: &Environment,
    class_source: ClassSource,
) -> bool {
    let core = lower(formula);
    let oracle = Oracle { trace, class_source, seed_env: env };
    oracle.holds(&core, frame, &HashMap::new(), &HashMap::new())
}

struct Oracle<'a> {
    trace: &'a Trace,
    class_source: ClassSource,
    seed_env: &'a Environment,
}

type Binds = HashMap<String, usize>;

impl Oracle<'_> {
    fn time_of(&self, name: &str, times: &Binds) -> usize {
        times
            .get(name)
            .copied()
            .or_else(|| self.seed_env.time(name))
            .unwrap_or_else(|| panic!("unbound time variable {name}"))
    }

    fn proto_of(&self, name: &str, protos: &Binds) -> usize {
        protos
            .get(name)
            .copied()
            .or_else(|| self.seed_env.proto(name))
            .unwrap_or_else(|| panic!("unbound prototype variable {name}"))
    }

    fn value(&self, e: &ScoreExpr, times: &Binds, protos: &Binds) -> f64 {
        match e {
            ScoreExpr::Sim { time, proto } => {
                let t = self.time_of(time, times);
                let p = self.proto_of(proto, protos);
                self.trace.frames[t].similarities[p]
            }
            ScoreExpr::Const(c) => *c,
            ScoreExpr::Abs(x) => self.value(x, times, protos).abs(),
            ScoreExpr::Sub(a, b) => self.value(a, times, protos) - self.value(b, times, protos),
        }
    }

    fn frame_term(&self, t: &TimeTerm, times: &Binds) -> u128 {
        match t {
            TimeTerm::Var(x) => self.time_of(x, times) as u128,
            TimeTerm::Int(n) => *n as u128,
            TimeTerm::End => self.trace.frames.len() as u128,
            TimeTerm::VarPlus(x, n) => self.time_of(x, times) as u128 + *n as u128,
        }
    }

    fn holds(&self, f: &Formula, i: usize, times: &Binds, protos: &Binds) -> bool {
        let len = self.trace.frames.len();
        match f {
            Formula::True => true,
            Formula::Predicate { lhs, op, rhs } => {
                let l = self.value(lhs, times, protos);
                let r = self.value(rhs, times, protos);
                match op {
                    Cmp::Gt | Cmp::Ge => l > r,
                    Cmp::Lt | Cmp::Le => l < r,
                    Cmp::Eq => false,
                    Cmp::Ne => l != r,
                }
            }
            Formula::Class(ClassAtom::VideoIs(l)) => {
                let class = match self.class_source {
                    ClassSource::Predicted => self.trace.predicted,
                    ClassSource::GroundTruth => self.trace.ground_truth,
                };
                class == *l
            }
            Formula::Class(ClassAtom::ProtoIn { proto, class }) => {
                self.trace.catalog[self.proto_of(proto, protos)].class == *class
            }
            Formula::Time { lhs, op, rhs } => {
                let l = self.frame_term(lhs, times);
                let r = self.frame_term(rhs, times);
                match op {
                    Cmp::Lt => l < r,
                    Cmp::Le => l <= r,
                    Cmp::Gt => l > r,
                    Cmp::Ge => l >= r,
                    Cmp::Eq => l == r,
                    Cmp::Ne => l != r,
                }
            }
            Formula::Not(a) => !self.holds(a, i, times, protos),
            Formula::Or(a, b) => self.holds(a, i, times, protos) || self.holds(b, i, times, protos),
            Formula::Until(a, b) => (i..len).any(|j| {
                self.holds(b, j, times, protos) && (i..j).all(|k| self.holds(a, k, times, protos))
            }),
            Formula::Freeze { var, body } => {
                let mut inner = times.clone();
                inner.insert(var.clone(), i);
                self.holds(body, i, &inner, protos)
            }
            Formula::Exists { proto, at, body } => {
                self.time_of(at, times);
                (0..self.trace.catalog.len()).any(|k| {
                    let mut inner = protos.clone();
                    inner.insert(proto.clone(), k);
                    self.holds(body, i, times, &inner)
                })
            }
            Formula::And(..)
            | Formula::Implies(..)
            | Formula::Eventually(_)
            | Formula::Always(_)
            | Formula::Forall { .. } => unreachable!("oracle runs on lowered formulas"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;
    use crate::trace::PrototypeMeta;

    fn tr(scores: Vec<Vec<f64>>) -> Trace {
        let m = scores[0].len();
        let catalog = (0..m).map(|id| PrototypeMeta { id, class: Label::ALL[id % 2] }).collect();
        Trace::from_scores("o", scores, catalog, Label::Fake, Label::Fake).unwrap()
    }

    #[test]
    fn true_holds() {
        assert!(boolean_oracle(&Formula::True, &tr(vec![vec![0.5]]), 0, &Environment::new()));
    }

    #[test]
    fn tie_is_false() {
        let f = Formula::freeze(
            "t",
            Formula::exists("p", "t", Formula::pred(ScoreExpr::sim("t", "p"), Cmp::Gt, ScoreExpr::Const(0.9))),
        );
        assert!(!boolean_oracle(&f, &tr(vec![vec![0.9]]), 0, &Environment::new()));
    }

    #[test]
    fn until_enumeration() {
        // p0 > 0.5 until p1 > 0.5
        let atom = |p: usize| {
            Formula::freeze(
                "t",
                Formula::exists(
                    "q",
                    "t",
                    Formula::and(
                        Formula::proto_in("q", Label::ALL[p]),
                        Formula::pred(ScoreExpr::sim("t", "q"), Cmp::Gt, ScoreExpr::Const(0.5)),
                    ),
                ),
            )
        };
        let f = Formula::until(atom(0), atom(1));
        let good = tr(vec![vec![0.9, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]);
        let bad = tr(vec![vec![0.9, 0.1], vec![0.1, 0.1], vec![0.1, 0.9]]);
        assert!(boolean_oracle(&f, &good, 0, &Environment::new()));
        assert!(!boolean_oracle(&f, &bad, 0, &Environment::new()));
        assert!(boolean_oracle(&f, &bad, 2, &Environment::new()));
    }

    #[test]
    fn seed_environment_is_used() {
        let f = Formula::time(TimeTerm::var("x"), Cmp::Le, TimeTerm::VarPlus("y".into(), 1));
        let env = Environment::new().bind_time("x", 2).bind_time("y", 1);
        assert!(boolean_oracle(&f, &tr(vec![vec![0.5]]), 0, &env));
    }
}
