//! Sequential vs rayon-backed harmonic kernel computation.

use std::hint::black_box;

use chain_geometry::graded_lie::{build_algebra, Family};
use chain_geometry::hodge::{harmonic_kernel, CochainComplex};
use chain_geometry::par::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn harmonic(c: &mut Criterion) {
    let mut group = c.benchmark_group("harmonic_kernel");
    group.sample_size(10);
    for family in [Family::Lagrangean { n: 2 }, Family::Path { m: 3 }, Family::Path { m: 4 }] {
        let complex = CochainComplex::new(build_algebra(family).expect("valid family"));
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, family.to_string()), &exec, |b, exec| {
                b.iter(|| black_box(harmonic_kernel(&complex, *exec).dim()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, harmonic);
criterion_main!(benches);
