#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use proto_tqtl::tqtl::{Cmp, Formula, ScoreExpr, TimeTerm};
use proto_tqtl::{Label, PrototypeMeta, Trace};

pub const CMPS: [Cmp; 6] = [Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge, Cmp::Eq, Cmp::Ne];

/// Scores on a coarse grid so that equal values (and therefore zero
/// margins) actually occur.
pub fn random_score<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.3) {
        [0.25, 0.5, 0.75, 1.0][rng.gen_range(0..4)]
    } else {
        rng.gen_range(1..=1000) as f64 / 1000.0
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize, max_m: usize) -> Trace {
    let len = rng.gen_range(1..=max_len);
    let m = rng.gen_range(1..=max_m);
    let catalog = (0..m).map(|id| PrototypeMeta { id, class: Label::ALL[rng.gen_range(0..2)] }).collect();
    let scores = (0..len).map(|_| (0..m).map(|_| random_score(rng)).collect()).collect();
    Trace::from_scores("random", scores, catalog, Label::ALL[rng.gen_range(0..2)], Label::ALL[rng.gen_range(0..2)])
        .unwrap()
}

#[derive(Clone, Copy)]
pub struct Shape {
    pub depth: usize,
    /// Emit derived operators (and, ->, eventually, always, forall).
    pub sugar: bool,
    /// Allow arbitrary finite constants instead of scores on the grid.
    pub wild_constants: bool,
}

struct Gen<'a, R> {
    rng: &'a mut R,
    shape: Shape,
    times: Vec<String>,
    protos: Vec<String>,
    fresh: usize,
}

/// A random formula whose variables are all bound, rooted at a freeze so
/// that score predicates are reachable.
pub fn random_formula<R: Rng>(rng: &mut R, shape: Shape) -> Formula {
    let mut g = Gen { rng, shape, times: Vec::new(), protos: Vec::new(), fresh: 0 };
    g.times.push("t0".into());
    let body = g.formula(shape.depth);
    Formula::freeze("t0", body)
}

impl<R: Rng> Gen<'_, R> {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        // reuse an existing name now and then to exercise shadowing
        if self.rng.gen_bool(0.2) {
            let pool = if prefix == "t" { &self.times } else { &self.protos };
            if let Some(n) = pool.choose(self.rng) {
                return n.clone();
            }
        }
        format!("{prefix}{}", self.fresh)
    }

    fn constant(&mut self) -> f64 {
        if self.shape.wild_constants && self.rng.gen_bool(0.3) {
            let v: f64 = self.rng.gen_range(-1e6..1e6);
            [v, -v, 1e-300, 1e300, -0.0, 0.1 + 0.2][self.rng.gen_range(0..6)]
        } else {
            random_score(self.rng) - if self.rng.gen_bool(0.2) { 1.0 } else { 0.0 }
        }
    }

    fn score(&mut self, depth: usize) -> ScoreExpr {
        let can_sim = !self.protos.is_empty();
        match self.rng.gen_range(0..6) {
            0..=2 if can_sim => {
                let t = self.times.choose(self.rng).unwrap().clone();
                let p = self.protos.choose(self.rng).unwrap().clone();
                ScoreExpr::sim(t, p)
            }
            3 if depth > 0 => ScoreExpr::abs(self.score(depth - 1)),
            4 if depth > 0 => ScoreExpr::minus(self.score(depth - 1), self.score(depth - 1)),
            _ => ScoreExpr::Const(self.constant()),
        }
    }

    fn time_term(&mut self) -> TimeTerm {
        let t = self.times.choose(self.rng).unwrap().clone();
        match self.rng.gen_range(0..4) {
            0 => TimeTerm::Var(t),
            1 => TimeTerm::Int(self.rng.gen_range(0..10)),
            2 => TimeTerm::End,
            _ => TimeTerm::VarPlus(t, self.rng.gen_range(0..4)),
        }
    }

    fn atom(&mut self) -> Formula {
        let cmp = *CMPS.choose(self.rng).unwrap();
        match self.rng.gen_range(0..6) {
            0 => Formula::True,
            1 => Formula::video_is(Label::ALL[self.rng.gen_range(0..2)]),
            2 if !self.protos.is_empty() => {
                let p = self.protos.choose(self.rng).unwrap().clone();
                Formula::proto_in(p, Label::ALL[self.rng.gen_range(0..2)])
            }
            3 => Formula::time(self.time_term(), cmp, self.time_term()),
            _ => Formula::pred(self.score(2), cmp, self.score(2)),
        }
    }

    fn formula(&mut self, depth: usize) -> Formula {
        if depth == 0 {
            return self.atom();
        }
        let d = depth - 1;
        let choices = if self.shape.sugar { 12 } else { 7 };
        match self.rng.gen_range(0..choices) {
            0 => self.atom(),
            1 => Formula::not(self.formula(d)),
            2 => Formula::or(self.formula(d), self.formula(d)),
            3 => Formula::until(self.formula(d), self.formula(d)),
            4 => {
                let v = self.name("t");
                self.times.push(v.clone());
                let body = self.formula(d);
                self.times.pop();
                Formula::freeze(v, body)
            }
            5 | 6 => self.quantifier(d, false),
            7 => Formula::and(self.formula(d), self.formula(d)),
            8 => Formula::implies(self.formula(d), self.formula(d)),
            9 => Formula::eventually(self.formula(d)),
            10 => Formula::always(self.formula(d)),
            _ => self.quantifier(d, true),
        }
    }

    fn quantifier(&mut self, d: usize, universal: bool) -> Formula {
        let at = self.times.choose(self.rng).unwrap().clone();
        let p = self.name("p");
        self.protos.push(p.clone());
        let body = self.formula(d);
        self.protos.pop();
        if universal {
            Formula::forall(p, at, body)
        } else {
            Formula::exists(p, at, body)
        }
    }
}
