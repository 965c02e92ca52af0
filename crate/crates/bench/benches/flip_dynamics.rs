use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use untangle_core::{
    build_line_set, gen_configuration, gen_points, phi_l, phi_x, reduce_mm_to_rb, run,
    GenKind, GenSpec, LineSetKind, Strategy, Version,
};

fn spec(kind: GenKind, n: usize, seed: u64) -> GenSpec {
    GenSpec {
        kind,
        n_points: n,
        seed,
        box_size: 1000,
    }
}

fn bench_crossings(c: &mut Criterion) {
    let mut group = c.benchmark_group("crossings");
    for n in [16usize, 32, 64] {
        let ps = gen_points(&spec(GenKind::RandomGeneral, n, 11)).unwrap().into_shared();
        let conf = gen_configuration(&ps, Version::MM, 12).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &conf, |b, conf| {
            b.iter(|| conf.crossings().len())
        });
    }
    group.finish();
}

fn bench_applicable_flips(c: &mut Criterion) {
    let mut group = c.benchmark_group("applicable_flips");
    for n in [16usize, 32] {
        let ps = gen_points(&spec(GenKind::RandomGeneral, n, 21)).unwrap().into_shared();
        let conf = gen_configuration(&ps, Version::TSP, 22).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &conf, |b, conf| {
            b.iter(|| conf.applicable_flips().len())
        });
    }
    group.finish();
}

fn bench_phi_l_full(c: &mut Criterion) {
    let mut group = c.benchmark_group("phi_l_full");
    for n in [12usize, 20] {
        let ps = gen_points(&spec(GenKind::RandomGeneral, n, 31)).unwrap().into_shared();
        let conf = gen_configuration(&ps, Version::MM, 32).unwrap();
        let lines = build_line_set(&ps, LineSetKind::Full).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &conf, |b, conf| {
            b.iter(|| phi_l(conf, &lines).phi_l_total)
        });
    }
    group.finish();
}

fn bench_run_to_completion(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_first_lex");
    group.sample_size(10);
    for n in [12usize, 16] {
        let ps = gen_points(&spec(GenKind::RandomGeneral, n, 41)).unwrap().into_shared();
        let conf = gen_configuration(&ps, Version::TSP, 42).unwrap();
        let lines = build_line_set(&ps, LineSetKind::Full).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &conf, |b, conf| {
            b.iter(|| {
                let rec = run(conf, &Strategy::FirstLex, &lines, None).unwrap();
                (rec.steps().len(), phi_x(&rec.final_configuration().unwrap()))
            })
        });
    }
    group.finish();
}

fn bench_reduce(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce_mm_to_rb");
    group.sample_size(10);
    for n in [8usize, 12] {
        let ps = gen_points(&spec(GenKind::RandomGeneral, n, 51)).unwrap().into_shared();
        let conf = gen_configuration(&ps, Version::MM, 52).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &conf, |b, conf| {
            b.iter(|| reduce_mm_to_rb(conf).unwrap().target.edge_count())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_crossings,
    bench_applicable_flips,
    bench_phi_l_full,
    bench_run_to_completion,
    bench_reduce
);
criterion_main!(benches);
