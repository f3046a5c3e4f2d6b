use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vecpot::fields::registry_get;
use vecpot::{CurlInverseOp, GridSpec, Mollifier, Point, QuadratureConfig, StarDomain};

fn operator() -> CurlInverseOp {
    CurlInverseOp::new(StarDomain::ball(2.0).unwrap(), Mollifier::default(), QuadratureConfig::default()).unwrap()
}

fn kernels(c: &mut Criterion) {
    let op = operator();
    let k = op.kernels();
    let (x, y) = (Point::new(0.3, -0.2, 0.1), Point::new(1.2, 0.5, -0.4));
    c.bench_function("curl_kernel", |b| b.iter(|| k.curl_kernel(black_box(&x), black_box(&y)).unwrap()));
    c.bench_function("curl_kernel_gradient", |b| {
        b.iter(|| k.curl_kernel_gradient(black_box(&x), black_box(&y)).unwrap())
    });
    c.bench_function("kernel_evaluate", |b| b.iter(|| k.evaluate(black_box(&x), black_box(&y)).unwrap()));
}

fn operators(c: &mut Criterion) {
    let op = operator();
    let g = registry_get("trig").unwrap();
    let x = Point::new(0.4, 0.3, -0.5);
    let mut group = c.benchmark_group("operator");
    group.sample_size(10);
    group.bench_function("curl_inverse", |b| b.iter(|| op.curl_inverse(&g, black_box(&x)).unwrap()));
    group.bench_function("grad_curl_inverse", |b| b.iter(|| op.grad_curl_inverse(&g, black_box(&x)).unwrap()));
    let spec = GridSpec { origin: Point::repeat(-2.2), spacing: [1.1; 3], counts: [5; 3] };
    group.bench_function("eval_grid_5", |b| b.iter(|| op.eval_grid(&g, &spec, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, kernels, operators);
criterion_main!(benches);
