use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use laguerre::{thm_equiv_rel, Axiom, Budget, CheckId, Circle, DeltaGroup, GroupSpace, Plane, Suite};

fn construction(c: &mut Criterion) {
    let mut g = c.benchmark_group("build");
    for q in [5, 7, 11] {
        g.bench_with_input(BenchmarkId::new("plane", q), &q, |b, &q| {
            b.iter(|| Plane::new(black_box(q)).unwrap())
        });
        let plane = Plane::new(q).unwrap();
        g.bench_with_input(BenchmarkId::new("group_space", q), &plane, |b, plane| {
            b.iter(|| {
                let group = DeltaGroup::canonical(plane).unwrap();
                GroupSpace::build(plane, &group).unwrap()
            })
        });
    }
    g.finish();
}

fn axioms(c: &mut Criterion) {
    let mut g = c.benchmark_group("axioms");
    g.sample_size(10);
    let plane = Plane::new(7).unwrap();
    g.bench_function("laguerre_q7", |b| b.iter(|| plane.verify_axioms()));
    let group = DeltaGroup::canonical(&plane).unwrap();
    let space = GroupSpace::build(&plane, &group).unwrap();
    for axiom in [Axiom::P2, Axiom::Pgm] {
        g.bench_function(format!("{axiom}_q7"), |b| {
            b.iter(|| space.check_axiom(axiom, Budget::Exhaustive))
        });
    }
    let sample = Budget::Sample {
        cases: 100_000,
        seed: 0,
    };
    for axiom in [Axiom::T, Axiom::Des, Axiom::Pap] {
        g.bench_function(format!("{axiom}_q7_sample"), |b| {
            b.iter(|| space.check_axiom(axiom, sample))
        });
    }
    g.finish();
}

fn statements(c: &mut Criterion) {
    let mut g = c.benchmark_group("statements");
    g.sample_size(10);
    let plane = Plane::new(11).unwrap();
    g.bench_function("equivalence_q11", |b| {
        b.iter(|| thm_equiv_rel(&plane, Circle::new(0, 0, 0)).unwrap())
    });
    let suite = Suite::new(7).unwrap();
    for id in [
        CheckId::Factorization,
        CheckId::TranslationParallel,
        CheckId::TangencyConditions,
    ] {
        g.bench_function(format!("{id}_q7"), |b| b.iter(|| suite.check(id, Budget::Exhaustive)));
    }
    g.bench_function("catalog_q5", |b| {
        b.iter(|| laguerre::run_all(5, Budget::Exhaustive).unwrap())
    });
    g.finish();
}

criterion_group!(benches, construction, axioms, statements);
criterion_main!(benches);
