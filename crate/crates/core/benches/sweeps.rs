use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lck::corpus::prove_corpus;
use lck::generate::FormulaGen;
use lck::par::Execution;
use lck::{check_validity, decide_formula, ObservationStructure, ProverOptions};

fn c2() -> ObservationStructure {
    ObservationStructure::from_json(
        r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob1","ob2"]},"results":["0","1"],"compose":"max"}"#,
    )
    .unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweeps(c: &mut Criterion) {
    let st = c2();
    let mut gen = FormulaGen::new(&st, &["p"], 11);
    let formulas: Vec<_> = (0..64).map(|_| gen.formula(3)).collect();
    let opts = ProverOptions::default();

    let mut group = c.benchmark_group("prover_batch");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| mode.map(&formulas, |f| decide_formula(black_box(f), &st, &opts).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("oracle_batch");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| mode.map(&formulas, |f| check_validity(black_box(f), &st, &f.atoms()).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("corpus");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| prove_corpus(&st, &opts, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
