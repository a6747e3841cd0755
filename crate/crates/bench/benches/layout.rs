use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drawdash::layout::{layout_tree, resolve_label_overlaps};
use drawdash::{Element, LayoutConfig, Point, Scene};
use drawdash_bench::heap_tree;

fn tree(c: &mut Criterion) {
    let cfg = LayoutConfig::default();
    let mut group = c.benchmark_group("layout_tree");
    for n in [7, 15, 63, 255] {
        let scene = heap_tree(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &scene, |b, s| {
            b.iter(|| layout_tree(s, "v0", &cfg).unwrap())
        });
    }
    group.finish();
}

fn overlaps(c: &mut Criterion) {
    // A pile of labels dropped on the same spot.
    let elements = (0..40)
        .map(|k| Element::text(format!("t{k}"), format!("label number {k}"), Point::new((k % 4) as f64, (k % 3) as f64)))
        .collect();
    let scene = Scene { version: 0, elements };
    c.bench_function("resolve_label_overlaps/40", |b| b.iter(|| resolve_label_overlaps(&scene, 200)));
}

criterion_group!(benches, tree, overlaps);
criterion_main!(benches);
