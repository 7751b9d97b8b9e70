mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_formula, Shape};
use proto_tqtl::proto::{
    gradients, loss_div, patch_similarity, predict, project, prototype_layer, softmax, Dataset, LatentClip,
    Prototype, PrototypeBank, TrainConfig,
};
use proto_tqtl::specs::{build_phi2, build_phi3, SpecParams};
use proto_tqtl::trace_gen::{generate_trace, Aggregation};
use proto_tqtl::tqtl::{parse, pretty_print, scope_check, Evaluator};
use proto_tqtl::{Label, PrototypeMeta, Trace};

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Real), Just(Label::Fake)]
}

fn score() -> impl Strategy<Value = f64> {
    prop_oneof![(f64::MIN_POSITIVE..=1.0), Just(1.0), Just(f64::MIN_POSITIVE), Just(0.1 + 0.2 - 0.2)]
}

fn trace() -> impl Strategy<Value = Trace> {
    (1usize..5, 1usize..12)
        .prop_flat_map(|(m, len)| {
            (
                prop::collection::vec(prop::collection::vec(score(), m), len),
                prop::collection::vec(label(), m),
                label(),
                label(),
                "[a-z0-9_\\-é\"\\\\ ]{0,12}",
            )
        })
        .prop_map(|(scores, classes, gt, pred, id)| {
            let catalog = classes.into_iter().enumerate().map(|(id, class)| PrototypeMeta { id, class }).collect();
            Trace::from_scores(id, scores, catalog, gt, pred).unwrap()
        })
}

fn vector(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, c)
}

fn clip(h: usize, w: usize, c: usize, label: Label) -> impl Strategy<Value = LatentClip> {
    prop::collection::vec(-3.0..3.0f64, h * w * c)
        .prop_map(move |data| LatentClip::new("c", label, h, w, c, data).unwrap())
}

fn bank(c: usize, m_k: usize) -> impl Strategy<Value = PrototypeBank> {
    (prop::collection::vec(vector(c), 2 * m_k), prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2 * m_k), 2))
        .prop_map(move |(vs, fc)| {
            let prototypes = vs
                .into_iter()
                .enumerate()
                .map(|(id, vector)| Prototype { id, class: Label::ALL[id / m_k], vector, grounding: None })
                .collect();
            PrototypeBank::new(c, prototypes, fc).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_files_round_trip_exactly(t in trace()) {
        let text = t.to_canonical_string().unwrap();
        let back = Trace::parse(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_canonical_string().unwrap(), text);
    }

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>(), depth in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, Shape { depth, sugar: true, wild_constants: true });
        prop_assert!(scope_check(&f).is_empty());
        let text = pretty_print(&f);
        prop_assert_eq!(parse(&text).unwrap(), f, "{}", text);
    }

    #[test]
    fn parser_never_panics(input in "\\PC{0,60}") {
        let _ = parse(&input);
    }

    #[test]
    fn phi2_implies_phi3(t in trace(), ceiling in 0.05..1.0f64, drift in 0.01..0.5f64, window in 0u64..6) {
        let params = SpecParams { similarity_ceiling: ceiling, drift_bound: drift, window, ..SpecParams::default() };
        let ev = Evaluator::new(&t);
        let r2 = ev.robustness(&build_phi2(&params)).unwrap();
        let r3 = ev.robustness(&build_phi3(&params)).unwrap();
        prop_assert!(r2 <= r3);
    }

    #[test]
    fn softmax_lies_on_the_simplex(logits in prop::collection::vec(-50.0..50.0f64, 2), shift in -100.0..100.0f64) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&x| x > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = logits.iter().map(|a| a + shift).collect();
        let q = softmax(&shifted);
        prop_assert!((p[0] - q[0]).abs() <= 1e-12);
        if logits[0] != logits[1] {
            prop_assert_eq!(p[0] > p[1], logits[0] > logits[1]);
        }
    }

    #[test]
    fn scores_stay_in_range_and_match_a_loop(b in bank(3, 2), c in clip(2, 2, 3, Label::Fake)) {
        let scores = prototype_layer(&c, &b).unwrap();
        for (j, s) in scores.iter().enumerate() {
            prop_assert!(*s > 0.0 && *s <= 1.0);
            let mut best = 0.0f64;
            for i in 0..4 {
                best = best.max(patch_similarity(c.patch(i), &b.prototypes[j].vector).unwrap());
            }
            prop_assert!((best - s).abs() <= 1e-12);
        }
        let p = predict(&scores, &b).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn diversity_is_scale_invariant(b in bank(3, 3), j in 0usize..6, k in 0.1..10.0f64, s_max in -0.5..0.9f64) {
        prop_assume!(b.prototypes.iter().all(|p| p.vector.iter().any(|&v| v != 0.0)));
        let mut scaled = b.clone();
        scaled.prototypes[j].vector.iter_mut().for_each(|v| *v *= k);
        let (a, c) = (loss_div(&b, s_max).unwrap(), loss_div(&scaled, s_max).unwrap());
        prop_assert!((a - c).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn projection_is_exact_and_idempotent(
        b in bank(2, 2),
        real in prop::collection::vec(clip(2, 1, 2, Label::Real), 1..4),
        fake in prop::collection::vec(clip(2, 1, 2, Label::Fake), 1..4),
    ) {
        let clips: Vec<LatentClip> = real.into_iter().chain(fake).enumerate()
            .map(|(i, c)| LatentClip { id: format!("c{i}"), ..c })
            .collect();
        let ds = Dataset::new(clips).unwrap();
        let p = project(&b, &ds).unwrap();
        for proto in &p.prototypes {
            let g = proto.grounding.as_ref().unwrap();
            let clip = ds.clips.iter().find(|c| c.id == g.clip).unwrap();
            prop_assert_eq!(clip.label, proto.class);
            prop_assert_eq!(clip.patch(g.row * clip.w + g.col), proto.vector.as_slice());
        }
        prop_assert_eq!(project(&p, &ds).unwrap(), p);
    }

    #[test]
    fn generated_traces_are_pure(b in bank(2, 1), clips in prop::collection::vec(clip(2, 2, 2, Label::Real), 1..5)) {
        let t1 = generate_trace("v", &clips, &b, Label::Real, Aggregation::Mean).unwrap();
        let t2 = generate_trace("v", &clips, &b, Label::Real, Aggregation::Mean).unwrap();
        prop_assert_eq!(&t1, &t2);
        t1.validate().unwrap();
        for (frame, c) in t1.frames.iter().zip(&clips) {
            prop_assert_eq!(&frame.similarities, &prototype_layer(c, &b).unwrap());
        }
    }
}

#[test]
fn single_prototype_gradient_has_closed_form() {
    // With every other term switched off the cluster term of one sample with
    // one patch is ||z - p||^2, whose gradient is 2(p - z).
    let clip = LatentClip::new("c", Label::Real, 1, 1, 2, vec![1.0, -2.0]).unwrap();
    let protos = vec![
        Prototype { id: 0, class: Label::Real, vector: vec![0.5, 0.5], grounding: None },
        Prototype { id: 1, class: Label::Fake, vector: vec![9.0, 9.0], grounding: None },
    ];
    let bank = PrototypeBank::new(2, protos, vec![vec![0.0; 2]; 2]).unwrap();
    let cfg = TrainConfig { lambda_c: 1.0, lambda_s: 0.0, lambda_d: 0.0, ..TrainConfig::default() };
    let (_, g) = gradients(&[clip], &bank, &cfg).unwrap();
    assert_eq!(g.prototypes[0], vec![2.0 * (0.5 - 1.0), 2.0 * (0.5 + 2.0)]);
    assert_eq!(g.prototypes[1], vec![0.0, 0.0]);
}
