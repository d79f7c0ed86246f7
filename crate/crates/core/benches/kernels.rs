//! Kernel throughput on a single-thread rayon pool against the default pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynsal_core::flow::{estimate_flow, HornSchunck};
use dynsal_core::map::Map;
use dynsal_core::nets::{build_network, Model, NetworkSpec, Variant, WidthScale};
use dynsal_core::ops::{conv2d, ConvParams};
use dynsal_core::Tensor;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let label = format!("default-{}", default.current_num_threads());
    vec![("1-thread".into(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()), (label, default)]
}

fn random(dims: &[usize], seed: u64) -> Tensor<f32> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(dims, |_| r.random_range(-1.0..1.0))
}

fn kernels(c: &mut Criterion) {
    let x = random(&[1, 32, 60, 80], 1);
    let p = ConvParams::new(random(&[64, 32, 5, 5], 2), random(&[64], 3), 2, 1).unwrap();
    let spec = NetworkSpec::new(Variant::STSConvNet).with_width_scale(WidthScale::new(1, 8).unwrap()).with_input_size(80, 60);
    let net: Model<f32> = build_network(&spec, 4).unwrap();
    let frame = random(&[3, 60, 80], 5).map(|v| 0.5 + 0.5 * v);
    let a = Map::from_fn(80, 60, |x, y| ((x as f64 * 0.3).sin() + (y as f64 * 0.2).cos()) * 0.25 + 0.5);
    let b = Map::from_fn(80, 60, |x, y| (((x as f64 - 1.0) * 0.3).sin() + (y as f64 * 0.2).cos()) * 0.25 + 0.5);
    let hs = HornSchunck::default();

    let mut g = c.benchmark_group("kernels");
    g.sample_size(10);
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("conv5x5_32to64_80x60", &label), |bch| bch.iter(|| pool.install(|| conv2d(&x, &p).unwrap())));
        g.bench_function(BenchmarkId::new("forward_stsconv_80x60", &label), |bch| {
            bch.iter(|| pool.install(|| net.forward(&frame, Some(&frame)).unwrap()))
        });
        g.bench_function(BenchmarkId::new("horn_schunck_80x60", &label), |bch| bch.iter(|| pool.install(|| estimate_flow(&a, &b, &hs).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
