use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tricorn_core::geometry::sample_julia;
use tricorn_core::par;
use tricorn_core::render::{render_parameter, Window};
use tricorn_core::Complex64 as C;

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn render(c: &mut Criterion) {
    let window = Window::new(C::new(-0.3, 0.0), 4.0, 4.0, 256, 256).unwrap();
    let mut group = c.benchmark_group("render_parameter_256");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| (0..256 * 256).map(|k| sequential_count(window.pixel(k % 256, k / 256))).collect::<Vec<u32>>())
    });
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::new("tiled", threads), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || render_parameter(&window, 200).unwrap()))
        });
    }
    group.finish();
}

/// Plain loop over pixels, no tiling or thread pool.
fn sequential_count(c: C) -> u32 {
    let e = tricorn_core::family::escape_unchecked(c, C::new(0.0, 0.0), 200, 2.0 + c.norm());
    if e.escaped {
        e.iterations + 1
    } else {
        0
    }
}

fn julia(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_julia_200k");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || sample_julia(C::new(-0.12, 0.75), 200_000, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, render, julia);
criterion_main!(benches);
