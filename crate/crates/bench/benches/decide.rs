use adt_polite_bench::{cdr_chain, distinct_lists, pairs_sharing_first, with_distinct_elems};
use adt_polite_core::{
    brute_force_sat, cardinality_backend, combine_check, decide, load_fixture, purify, run_text,
    wtn_combined, CombineOptions, DecideOptions, Formula, OracleConfig, RunOptions,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_decide(c: &mut Criterion) {
    let mut g = c.benchmark_group("decide");
    for n in [2, 4, 8] {
        let inst = with_distinct_elems(cdr_chain(n));
        g.bench_with_input(BenchmarkId::new("cdr_chain", n), &inst, |b, inst| {
            b.iter(|| {
                let mut ctx = inst.ctx.clone();
                decide(&mut ctx, &inst.sig, &inst.cube, &DecideOptions::default()).unwrap()
            })
        });
    }
    for n in [2, 4, 6] {
        let inst = with_distinct_elems(distinct_lists(n));
        g.bench_with_input(BenchmarkId::new("distinct_lists", n), &inst, |b, inst| {
            b.iter(|| {
                let mut ctx = inst.ctx.clone();
                decide(&mut ctx, &inst.sig, &inst.cube, &DecideOptions::default()).unwrap()
            })
        });
    }
    g.finish();
}

fn bench_witness(c: &mut Criterion) {
    let mut g = c.benchmark_group("witness");
    for n in [4, 16, 64] {
        let inst = cdr_chain(n);
        g.bench_with_input(BenchmarkId::new("cdr_chain", n), &inst, |b, inst| {
            b.iter(|| {
                let mut ctx = inst.ctx.clone();
                wtn_combined(&mut ctx, &inst.sig, black_box(&inst.cube))
            })
        });
    }
    g.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    for n in [2, 3, 4] {
        let inst = distinct_lists(n);
        let f = Formula::cube(&inst.cube);
        let cfg = OracleConfig::uniform(&inst.sig, 2, 4);
        g.bench_with_input(BenchmarkId::new("distinct_lists", n), &f, |b, f| {
            b.iter(|| brute_force_sat(&inst.sig, &inst.ctx, f, &cfg).unwrap())
        });
    }
    g.finish();
}

fn bench_combine(c: &mut Criterion) {
    let mut g = c.benchmark_group("combine");
    for n in [2, 3, 4] {
        let inst = pairs_sharing_first(n);
        let elem = inst.sig.lookup_sort("elem").unwrap();
        let f = Formula::cube(&inst.cube);
        g.bench_with_input(BenchmarkId::new("pairs_sharing_first", n), &f, |b, f| {
            b.iter(|| {
                let mut ctx = inst.ctx.clone();
                let p = purify(&mut ctx, &inst.sig, f).unwrap();
                let backend = cardinality_backend([(elem, n)].into());
                combine_check(
                    &mut ctx,
                    &inst.sig,
                    &p,
                    &backend,
                    &CombineOptions::default(),
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn bench_scripts(c: &mut Criterion) {
    let mut g = c.benchmark_group("script");
    for name in ["list", "pair", "example1"] {
        for s in load_fixture(name).unwrap().scripts {
            g.bench_function(s.name, |b| {
                b.iter(|| run_text(black_box(s.input), &RunOptions::default()).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_decide,
    bench_witness,
    bench_oracle,
    bench_combine,
    bench_scripts
);
criterion_main!(benches);
