use conewave_bench::{grid, random_field};
use conewave_core::spaces::{NormContext, SchematicParams};
use criterion::{criterion_group, criterion_main, Criterion};

fn norm_table(c: &mut Criterion) {
    let g = grid(2, 32, 32);
    let ctx = NormContext::new(&g, SchematicParams::default()).unwrap();
    let u = random_field(&g, 2);
    c.bench_function("table_n2_32x32", |b| b.iter(|| ctx.table(&u, false).unwrap()));
    c.bench_function("table_with_z_n2_32x32", |b| b.iter(|| ctx.table(&u, true).unwrap()));
    c.bench_function("gs_norm_n2_32x32", |b| b.iter(|| ctx.gs_norm(&u, 0.0).unwrap()));
}

criterion_group!(benches, norm_table);
criterion_main!(benches);
