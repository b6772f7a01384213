use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use winvex_core::expr::random::random_expr;
use winvex_core::expr::{parse, parse_two_point, pretty_print, BinOp, Block, Expr, FunctionDef};
use winvex_core::invexity::{chord, classify, ClassId, Family, Instance, Mode};
use winvex_core::sampling::{sample_pairs, CheckConfig, Domain, Interval};
use winvex_core::theorems::scale;

fn small_config(seed: u64) -> CheckConfig {
    CheckConfig {
        pair_samples: 120,
        delta_points: 11,
        seed,
        ..CheckConfig::default()
    }
}

fn line() -> Domain {
    Domain::full_space(vec![Interval::new(-5.0, 5.0)]).unwrap()
}

fn arith() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(|v| Expr::Num(v as f64 / 4.0)),
        (1usize..=2).prop_map(|i| Expr::Var(Block::Z, i)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Pow)
                ],
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn maps(h: &str, eta: &str, w: &str) -> Instance {
    Instance::new(
        Some(parse(h, 1).unwrap()),
        parse_two_point(eta, 1).unwrap(),
        parse(w, 1).unwrap(),
        line(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back(e in arith()) {
        let f = FunctionDef::from_exprs("f", 2, false, vec![e]).unwrap();
        let text = pretty_print(&f);
        prop_assert_eq!(parse(&text, 2).unwrap().outputs, f.outputs, "{}", text);
    }

    #[test]
    fn seeded_generator_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = FunctionDef::from_exprs("eta", 2, true, vec![random_expr(&mut rng, 5, 2, true)]).unwrap();
        prop_assert_eq!(parse_two_point(&pretty_print(&f), 2).unwrap().outputs, f.outputs);
    }

    #[test]
    fn multiplication_binds_tighter(a in -50i32..50, b in -50i32..50, c in -50i32..50) {
        let text = format!("({a}) + ({b}) * ({c}) - ({a}) ^ 2");
        let v = parse(&text, 1).unwrap().eval_scalar(&[0.0]).unwrap();
        let (a, b, c) = (a as f64, b as f64, c as f64);
        prop_assert_eq!(v, a + b * c - a * a);
    }

    #[test]
    fn chord_stays_between_endpoints(a in -1e6f64..1e6, b in -1e6f64..1e6, d in 0f64..=1.0) {
        let c = chord(a, b, d);
        prop_assert!(c >= a.min(b) && c <= a.max(b));
        prop_assert_eq!(chord(a, b, 0.0), b);
        prop_assert_eq!(chord(a, b, 1.0), a);
    }

    #[test]
    fn generated_point_formula(z1 in -5f64..5.0, z2 in -5f64..5.0, d in 0f64..=1.0) {
        let inst = maps("z1", "z1 - y1 - 6", "z1 - 7");
        let base = z2 - 7.0;
        let expected = base + d * (z1 - base - 6.0);
        prop_assert_eq!(inst.generated_point(Mode::W, &[z1], &[z2], d), vec![expected]);
        let classical = z2 + d * (z1 - z2 - 6.0);
        prop_assert_eq!(inst.generated_point(Mode::Classical, &[z1], &[z2], d), vec![classical]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lattice_edges_hold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = FunctionDef::from_exprs("h", 1, false, vec![random_expr(&mut rng, 3, 1, false)]).unwrap();
        let eta = FunctionDef::from_exprs("eta", 1, true, vec![random_expr(&mut rng, 2, 1, true)]).unwrap();
        let w = FunctionDef::from_exprs("w", 1, false, vec![random_expr(&mut rng, 2, 1, false)]).unwrap();
        let inst = Instance::new(Some(h), eta, w, line()).unwrap();
        let r = classify(&inst, &small_config(seed)).unwrap();
        prop_assert!(!r.internal_error);
        prop_assert!(r.lattice.iter().all(|e| e.holds));
        for mode in [Mode::W, Mode::Classical] {
            let get = |f| r.class(ClassId::new(f, mode)).unwrap().is_consistent();
            prop_assert!(!get(Family::Preinvex) || get(Family::Prequasi));
            prop_assert!(!get(Family::StrictPreinvex) || get(Family::StrictPrequasi));
        }
    }

    #[test]
    fn power_of_two_scaling_keeps_verdicts(a in -4i32..4, b in -4i32..4, seed in 0u64..1000) {
        let h = parse(&format!("({a}) * z1^2 + ({b}) * z1"), 1).unwrap();
        let inst = maps("z1", "z1 - y1 - 6", "z1 - 7").with_h(h.clone()).unwrap();
        let cfg = small_config(seed);
        for class in ClassId::function_classes() {
            let base = inst.check(class, &cfg).unwrap().is_refuted();
            for k in [0.5, 2.0, 4.0] {
                let scaled = inst.with_h(scale(&h, k).unwrap()).unwrap();
                prop_assert_eq!(scaled.check(class, &cfg).unwrap().is_refuted(), base, "{} k={}", class, k);
            }
        }
    }
}

#[test]
fn offset_in_objective_never_changes_verdicts() {
    let cfg = small_config(3);
    let verdicts = |k: i32| {
        let inst = maps(&format!("z1 + ({k})"), "z1 - y1 - 6", "z1 - 7");
        let r = classify(&inst, &cfg).unwrap();
        r.verdicts().map(|v| (v.key, v.is_refuted())).collect::<Vec<_>>()
    };
    let reference = verdicts(0);
    for k in [-5, 7] {
        assert_eq!(verdicts(k), reference, "k = {k}");
    }
}

#[test]
fn sampling_is_seed_determined() {
    let d = line();
    let a = sample_pairs(&d, &small_config(1));
    assert_eq!(a, sample_pairs(&d, &small_config(1)));
    assert_ne!(a, sample_pairs(&d, &small_config(2)));
    let inst = maps("z1^3", "z1 - y1", "z1");
    let v1 = classify(&inst, &small_config(5)).unwrap();
    let v2 = classify(&inst, &small_config(5)).unwrap();
    assert_eq!(v1, v2);
}
