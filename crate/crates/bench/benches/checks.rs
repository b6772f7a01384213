use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use winvex_core::catalog::find_fixture;
use winvex_core::expr::random::random_expr;
use winvex_core::expr::{parse, pretty_print, FunctionDef};
use winvex_core::invexity::{classify, ClassId, Family};
use winvex_core::optimize::{brute_force_min, multistart_solve, OptConfig};
use winvex_core::sampling::CheckConfig;

fn expressions(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let texts: Vec<String> = (0..200)
        .map(|_| {
            let e = random_expr(&mut rng, 5, 2, false);
            pretty_print(&FunctionDef::from_exprs("f", 2, false, vec![e]).unwrap())
        })
        .collect();
    c.bench_function("parse 200 random expressions", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(parse(black_box(t), 2).unwrap());
            }
        })
    });
    let h = parse("piecewise(z1 < 11, 11, -11) + z2^5 - exp(z1 / 10)", 2).unwrap();
    c.bench_function("eval one expression", |b| {
        b.iter(|| h.eval_scalar(black_box(&[3.0, -1.5])).unwrap())
    });
}

fn checks(c: &mut Criterion) {
    let f = find_fixture("preinvex-minus7").unwrap();
    let inst = f.to_run_config().instance().unwrap();
    let cfg = CheckConfig {
        pair_samples: 250,
        ..f.check_config()
    };
    c.bench_function("w-preinvex check, 250 pairs", |b| {
        b.iter(|| inst.check(ClassId::w(Family::Preinvex), black_box(&cfg)).unwrap())
    });
    c.bench_function("classify, 250 pairs", |b| {
        b.iter(|| classify(&inst, black_box(&cfg)).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let f = find_fixture("preinvex-minus7").unwrap();
    let problem = f.to_run_config().opt_problem().unwrap().unwrap();
    c.bench_function("grid oracle, 4001 points", |b| {
        b.iter(|| brute_force_min(black_box(&problem), 4001).unwrap())
    });
    let opt = OptConfig::default();
    c.bench_function("multistart descent, 16 starts", |b| {
        b.iter(|| multistart_solve(black_box(&problem), &opt, 16).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = expressions, checks, optimizer
}
criterion_main!(benches);
