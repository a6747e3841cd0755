use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drawdash::{apply_script, invert_script, parse_script, serialize_script, Scene};
use drawdash_bench::churn_script;

fn edits(c: &mut Criterion) {
    let mut group = c.benchmark_group("edits");
    for n in [10, 100, 1000] {
        let script = churn_script(n, 0);
        let text = serialize_script(&script);
        let empty = Scene::new();
        let after = apply_script(&empty, &script).unwrap();
        group.bench_with_input(BenchmarkId::new("parse", n), &text, |b, t| b.iter(|| parse_script(t, 0).unwrap()));
        group.bench_with_input(BenchmarkId::new("serialize", n), &script, |b, s| b.iter(|| serialize_script(s)));
        group.bench_with_input(BenchmarkId::new("apply", n), &script, |b, s| b.iter(|| apply_script(&empty, s).unwrap()));
        group.bench_with_input(BenchmarkId::new("invert_apply", n), &script, |b, s| {
            b.iter(|| {
                let inv = invert_script(s, &empty).unwrap();
                apply_script(&after, &inv).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, edits);
criterion_main!(benches);
