use conewave_bench::{grid, random_field};
use conewave_core::grid::Rep;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn spacetime_round_trip(c: &mut Criterion) {
    let mut group = c.benchmark_group("spacetime_round_trip");
    for (dim, nx, nt) in [(2, 64, 64), (3, 32, 32), (6, 8, 16)] {
        let g = grid(dim, nx, nt);
        let u = random_field(&g, 1).into_rep(Rep::Physical);
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{dim}_{nx}x{nt}")), &u, |b, u| {
            b.iter(|| u.to_rep(Rep::SpacetimeFourier).into_rep(Rep::Physical))
        });
    }
    group.finish();
}

criterion_group!(benches, spacetime_round_trip);
criterion_main!(benches);
