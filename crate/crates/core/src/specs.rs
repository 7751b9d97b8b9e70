//! The key-frame, non-relevance and relaxed non-relevance specifications,
//! plus per-class satisfaction reporting over a set of traces.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::label::Label;
use crate::trace::{ClassSource, Trace};
use crate::tqtl::{Cmp, EvalError, Evaluator, Formula, Robustness, ScoreExpr, TimeTerm, Verdict};

/// Thresholds and options shared by the built-in specifications.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecParams {
    pub target_class: Label,
    pub similarity_ceiling: f64,
    pub drift_bound: f64,
    pub window: u64,
    pub class_source: ClassSource,
    /// Build φ1 exactly as printed (conjunctions instead of implications).
    pub literal_phi1: bool,
}

impl Default for SpecParams {
    fn default() -> Self {
        SpecParams {
            target_class: Label::Fake,
            similarity_ceiling: 0.4,
            drift_bound: 0.1,
            window: 5,
            class_source: ClassSource::Predicted,
            literal_phi1: false,
        }
    }
}

impl SpecParams {
    pub fn for_class(target_class: Label) -> Self {
        SpecParams { target_class, ..SpecParams::default() }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let c = self.similarity_ceiling;
        if !(c > 0.0 && c <= 1.0) {
            return Err(SpecError::InvalidParams(format!("ceiling must lie in (0, 1], got {c}")));
        }
        let d = self.drift_bound;
        if !(d > 0.0 && d.is_finite()) {
            return Err(SpecError::InvalidParams(format!("drift bound must be positive, got {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown built-in specification `{0}` (expected phi1, phi2 or phi3)")]
    UnknownBuiltin(String),
    #[error("no traces to report on")]
    EmptyTraceSet,
    #[error("trace {index} ({video_id}) has {found} prototypes, expected {expected}")]
    CatalogMismatch { index: usize, video_id: String, expected: usize, found: usize },
    #[error("evaluating trace {video_id}: {source}")]
    Eval { video_id: String, source: EvalError },
}

fn sim(t: &str, p: &str) -> ScoreExpr {
    ScoreExpr::sim(t, p)
}

/// φ1, key frame: some frame `t` and prototype `p_k` of the target class
/// whose score at `t` beats every opposite-class score at every later
/// interior frame.
///
/// ```text
/// eventually (freeze t . exists p_k at t .
///   class() == C -> (inclass(p_k, C) and always (freeze t' .
///     0 < t' and t' < T -> forall p_j at t' . inclass(p_j, C') -> S(t, p_k) > S(t', p_j))))
/// ```
pub fn build_phi1(params: &SpecParams) -> Formula {
    if params.literal_phi1 {
        return build_phi1_literal(params);
    }
    let target = params.target_class;
    let dominate = Formula::forall(
        "p_j",
        "t'",
        Formula::implies(
            Formula::proto_in("p_j", target.opposite()),
            Formula::pred(sim("t", "p_k"), Cmp::Gt, sim("t'", "p_j")),
        ),
    );
    let everywhere = Formula::always(Formula::freeze("t'", Formula::implies(interior("t'"), dominate)));
    Formula::eventually(Formula::freeze(
        "t",
        Formula::exists(
            "p_k",
            "t",
            Formula::implies(
                Formula::video_is(target),
                Formula::and(Formula::proto_in("p_k", target), everywhere),
            ),
        ),
    ))
}

/// φ1 with the printed connectives: `class() == C and inclass(p_k, C)` as the
/// antecedent and `inclass(p_j, C') and S(t, p_k) > S(t', p_j)` under the
/// universal quantifier.
pub fn build_phi1_literal(params: &SpecParams) -> Formula {
    let target = params.target_class;
    let dominate = Formula::forall(
        "p_j",
        "t'",
        Formula::and(
            Formula::proto_in("p_j", target.opposite()),
            Formula::pred(sim("t", "p_k"), Cmp::Gt, sim("t'", "p_j")),
        ),
    );
    let everywhere = Formula::always(Formula::freeze("t'", Formula::implies(interior("t'"), dominate)));
    Formula::eventually(Formula::freeze(
        "t",
        Formula::exists(
            "p_k",
            "t",
            Formula::implies(
                Formula::and(Formula::video_is(target), Formula::proto_in("p_k", target)),
                everywhere,
            ),
        ),
    ))
}

fn interior(t: &str) -> Formula {
    Formula::and(
        Formula::time(TimeTerm::Int(0), Cmp::Lt, TimeTerm::var(t)),
        Formula::time(TimeTerm::var(t), Cmp::Lt, TimeTerm::End),
    )
}

/// φ2, non-relevance: opposite-class scores stay under the ceiling and drift
/// less than the bound over the following `window` frames.
pub fn build_phi2(params: &SpecParams) -> Formula {
    non_relevance(params, true)
}

/// φ3: φ2 without the drift clause.
pub fn build_phi3(params: &SpecParams) -> Formula {
    non_relevance(params, false)
}

fn non_relevance(params: &SpecParams, drift: bool) -> Formula {
    let target = params.target_class;
    let below = Formula::pred(sim("t", "p_i"), Cmp::Lt, ScoreExpr::Const(params.similarity_ceiling));
    let consequent = if drift {
        let within = Formula::and(
            Formula::time(TimeTerm::var("t"), Cmp::Le, TimeTerm::var("t'")),
            Formula::time(TimeTerm::var("t'"), Cmp::Le, TimeTerm::VarPlus("t".into(), params.window)),
        );
        let steady = Formula::pred(
            ScoreExpr::abs(ScoreExpr::minus(sim("t'", "p_i"), sim("t", "p_i"))),
            Cmp::Lt,
            ScoreExpr::Const(params.drift_bound),
        );
        Formula::and(below, Formula::always(Formula::freeze("t'", Formula::implies(within, steady))))
    } else {
        below
    };
    Formula::always(Formula::freeze(
        "t",
        Formula::forall(
            "p_i",
            "t",
            Formula::implies(
                Formula::and(Formula::video_is(target), Formula::proto_in("p_i", target.opposite())),
                consequent,
            ),
        ),
    ))
}

/// Names accepted by `builtin:<name>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Phi1,
    Phi2,
    Phi3,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Phi1, Builtin::Phi2, Builtin::Phi3];

    pub fn build(self, params: &SpecParams) -> Formula {
        match self {
            Builtin::Phi1 => build_phi1(params),
            Builtin::Phi2 => build_phi2(params),
            Builtin::Phi3 => build_phi3(params),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Phi1 => "phi1",
            Builtin::Phi2 => "phi2",
            Builtin::Phi3 => "phi3",
        }
    }
}

impl FromStr for Builtin {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phi1" => Ok(Builtin::Phi1),
            "phi2" => Ok(Builtin::Phi2),
            "phi3" => Ok(Builtin::Phi3),
            other => Err(SpecError::UnknownBuiltin(other.to_string())),
        }
    }
}

/// Verdict for a single trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutcome {
    pub video_id: String,
    pub ground_truth: Label,
    pub predicted: Label,
    pub robustness: Robustness,
    pub verdict: Verdict,
}

/// Counts for one row of the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub total: usize,
    pub sat: usize,
    pub unsat: usize,
    pub inconclusive: usize,
}

impl ReportRow {
    fn add(&mut self, verdict: Verdict) {
        self.total += 1;
        match verdict {
            Verdict::Sat => self.sat += 1,
            Verdict::Unsat => self.unsat += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
    }

    /// `100 * sat / total`, or `None` for an empty row.
    pub fn percentage(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.sat as f64 / self.total as f64)
    }
}

/// Per-trace outcomes and the (+)/(−)/all summary rows, split on ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionReport {
    pub outcomes: Vec<TraceOutcome>,
    pub positive: ReportRow,
    pub negative: ReportRow,
    pub all: ReportRow,
}

impl SatisfactionReport {
    pub fn from_outcomes(outcomes: Vec<TraceOutcome>) -> Self {
        let mut positive = ReportRow::default();
        let mut negative = ReportRow::default();
        let mut all = ReportRow::default();
        for o in &outcomes {
            match o.ground_truth {
                Label::Fake => positive.add(o.verdict),
                Label::Real => negative.add(o.verdict),
            }
            all.add(o.verdict);
        }
        SatisfactionReport { outcomes, positive, negative, all }
    }

    pub fn rows(&self) -> [(&'static str, ReportRow); 3] {
        [("(+)", self.positive), ("(-)", self.negative), ("all", self.all)]
    }

    pub fn violations(&self) -> usize {
        self.all.unsat + self.all.inconclusive
    }
}

pub fn format_percentage(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl fmt::Display for SatisfactionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6}{:>8}{:>7}{:>7}{:>7}{:>7}", "traces", "sat%", "sat", "unsat", "incon", "total")?;
        for (name, row) in self.rows() {
            writeln!(
                f,
                "{:<6}{:>8}{:>7}{:>7}{:>7}{:>7}",
                name,
                format_percentage(row.percentage()),
                row.sat,
                row.unsat,
                row.inconclusive,
                row.total
            )?;
        }
        Ok(())
    }
}

/// Evaluates `spec` at frame 0 of every trace (in parallel, output in input
/// order) and tallies the verdicts.
pub fn report(spec: &Formula, traces: &[Trace], class_source: ClassSource) -> Result<SatisfactionReport, SpecError> {
    let first = traces.first().ok_or(SpecError::EmptyTraceSet)?;
    let m = first.num_prototypes();
    if let Some((index, t)) = traces.iter().enumerate().find(|(_, t)| t.num_prototypes() != m) {
        return Err(SpecError::CatalogMismatch {
            index,
            video_id: t.video_id.clone(),
            expected: m,
            found: t.num_prototypes(),
        });
    }
    let outcomes = traces
        .par_iter()
        .map(|trace| {
            let robustness = Evaluator::new(trace)
                .with_class_source(class_source)
                .robustness(spec)
                .map_err(|source| SpecError::Eval { video_id: trace.video_id.clone(), source })?;
            Ok(TraceOutcome {
                video_id: trace.video_id.clone(),
                ground_truth: trace.ground_truth,
                predicted: trace.predicted,
                robustness,
                verdict: Verdict::from_robustness(robustness),
            })
        })
        .collect::<Result<Vec<_>, SpecError>>()?;
    Ok(SatisfactionReport::from_outcomes(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::PrototypeMeta;
    use crate::tqtl::{boolean_oracle, parse, pretty_print, scope_check, Environment};

    fn catalog(classes: &[Label]) -> Vec<PrototypeMeta> {
        classes.iter().enumerate().map(|(id, &class)| PrototypeMeta { id, class }).collect()
    }

    fn trace(scores: Vec<Vec<f64>>, classes: &[Label], gt: Label, pred: Label) -> Trace {
        Trace::from_scores("v", scores, catalog(classes), gt, pred).unwrap()
    }

    fn check(f: &Formula, t: &Trace) -> Verdict {
        let v = Evaluator::new(t).verdict(f).unwrap();
        if v != Verdict::Inconclusive {
            assert_eq!(boolean_oracle(f, t, 0, &Environment::new()), v == Verdict::Sat);
        }
        v
    }

    #[test]
    fn builders_scope_check_and_round_trip() {
        for class in Label::ALL {
            for literal in [false, true] {
                let params = SpecParams { literal_phi1: literal, ..SpecParams::for_class(class) };
                for b in Builtin::ALL {
                    let f = b.build(&params);
                    assert!(scope_check(&f).is_empty(), "{}", b.name());
                    assert_eq!(parse(&pretty_print(&f)).unwrap(), f);
                }
            }
        }
    }

    #[test]
    fn phi1_key_frame() {
        use Label::*;
        let f = build_phi1(&SpecParams::default());
        let mut scores = vec![vec![0.5, 0.3, 0.9]; 6];
        scores[3][0] = 0.95;
        let sat = trace(scores.clone(), &[Fake, Real, Real], Fake, Fake);
        assert_eq!(check(&f, &sat), Verdict::Sat);
        scores[4][2] = 0.97;
        let unsat = trace(scores, &[Fake, Real, Real], Fake, Fake);
        assert_eq!(check(&f, &unsat), Verdict::Unsat);
        let predicted_real = trace(vec![vec![0.1, 0.9]; 4], &[Fake, Real], Fake, Real);
        assert_eq!(check(&f, &predicted_real), Verdict::Sat);
    }

    #[test]
    fn phi2_and_phi3() {
        use Label::*;
        let p = SpecParams::default();
        let classes = [Fake, Real];
        let constant = trace(vec![vec![0.9, 0.2]; 8], &classes, Fake, Fake);
        assert_eq!(check(&build_phi2(&p), &constant), Verdict::Sat);
        let mut spike = vec![vec![0.9, 0.2]; 8];
        spike[5][1] = 0.45;
        assert_eq!(check(&build_phi2(&p), &trace(spike, &classes, Fake, Fake)), Verdict::Unsat);
        let mut jump = vec![vec![0.9, 0.2]; 8];
        jump[3][1] = 0.35;
        let jump = trace(jump, &classes, Fake, Fake);
        assert_eq!(check(&build_phi2(&p), &jump), Verdict::Unsat);
        assert_eq!(check(&build_phi3(&p), &jump), Verdict::Sat);
    }

    #[test]
    fn phi3_is_phi2_without_drift() {
        let p = SpecParams::default();
        let Formula::Always(outer) = build_phi2(&p) else { panic!() };
        let Formula::Freeze { body, .. } = *outer else { panic!() };
        let Formula::Forall { body, .. } = *body else { panic!() };
        let Formula::Implies(ante, cons) = *body else { panic!() };
        let Formula::And(below, _) = *cons else { panic!() };
        let stripped = Formula::always(Formula::freeze("t", Formula::forall("p_i", "t", Formula::implies(*ante, *below))));
        assert_eq!(stripped, build_phi3(&p));
    }

    #[test]
    fn report_rows() {
        use Label::*;
        let f = build_phi3(&SpecParams::default());
        let good = trace(vec![vec![0.9, 0.2]], &[Fake, Real], Fake, Fake);
        let bad = trace(vec![vec![0.9, 0.5]], &[Fake, Real], Fake, Fake);
        let r = report(&f, &[good.clone(), bad], ClassSource::Predicted).unwrap();
        assert_eq!(r.positive.percentage(), Some(50.0));
        assert_eq!(r.negative.percentage(), None);
        assert_eq!(r.all.percentage(), Some(50.0));
        assert_eq!(r.violations(), 1);
        assert!(r.to_string().contains("n/a"));
        assert!(matches!(report(&f, &[], ClassSource::Predicted), Err(SpecError::EmptyTraceSet)));
        let wide = trace(vec![vec![0.9, 0.2, 0.1]], &[Fake, Real, Real], Real, Real);
        assert!(matches!(
            report(&f, &[good, wide], ClassSource::Predicted),
            Err(SpecError::CatalogMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(SpecParams::default().validate().is_ok());
        assert!(SpecParams { similarity_ceiling: 0.0, ..SpecParams::default() }.validate().is_err());
        assert!(SpecParams { similarity_ceiling: 1.5, ..SpecParams::default() }.validate().is_err());
        assert!(SpecParams { drift_bound: 0.0, ..SpecParams::default() }.validate().is_err());
    }
}
