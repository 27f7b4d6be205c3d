use conewave_core::verify::{bilinear_support_check, CheckMode, Lemma, SupportCheckConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn sampled_support(c: &mut Criterion) {
    let mut group = c.benchmark_group("support_sampled");
    group.sample_size(10);
    for lemma in [Lemma::Wide, Lemma::BTerm] {
        let cfg = SupportCheckConfig::new(lemma, 3, 64.0, 8.0, 1.0, 0.125, CheckMode::Sampled { pairs: 20_000, seed: 7 });
        group.bench_function(format!("{lemma:?}_n3"), |b| b.iter(|| bilinear_support_check(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampled_support);
criterion_main!(benches);
