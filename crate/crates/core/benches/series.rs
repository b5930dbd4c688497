use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use perfscope::frontend::Analyzed;
use perfscope::sweep::{run_exact_series, Strategy};

const MATVEC: &str = include_str!("../tests/fixtures/nest2.pc");
const MATMUL: &str = include_str!("../tests/fixtures/nest3.pc");

fn exact_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_series");
    group.sample_size(20);
    let cases = [
        ("matvec", Analyzed::from_source(MATVEC).unwrap(), vec![("m", 64)]),
        ("matmul", Analyzed::from_source(MATMUL).unwrap(), vec![("m", 24), ("p", 24)]),
    ];
    for (name, program, fixed) in &cases {
        let sizes: Vec<i64> = (1..=32).map(|k| k * 4).collect();
        for strategy in [Strategy::Sequential, Strategy::Parallel] {
            group.bench_with_input(BenchmarkId::new(*name, format!("{strategy:?}")), &sizes, |b, sizes| {
                b.iter(|| run_exact_series(program, "n", sizes, fixed, strategy).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, exact_series);
criterion_main!(benches);
