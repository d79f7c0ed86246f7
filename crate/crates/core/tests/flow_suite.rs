mod common;

use common::rng;
use dynsal_core::data::{downscaled_inputs, FrameSource, Provenance};
use dynsal_core::flow::*;
use dynsal_core::map::Map;
use dynsal_core::resample::resize_map;
use dynsal_core::Tensor;
use proptest::prelude::*;
use rand::Rng;

/// Smooth random texture: a sum of seeded sinusoids, evaluated with a
/// horizontal offset so that `texture(.., dx = 1)` is the scene moved 1 px right.
fn texture(w: usize, h: usize, seed: u64, dx: f64) -> Map {
    let mut r = rng(seed);
    let waves: Vec<[f64; 4]> = (0..12)
        .map(|_| {
            [
                r.random_range(0.05..0.35),
                r.random_range(0.05..0.35),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(0.02..0.06),
            ]
        })
        .collect();
    Map::from_fn(w, h, |x, y| {
        let x = x as f64 - dx;
        0.5 + waves.iter().map(|[kx, ky, ph, a]| a * (kx * x + ky * y as f64 + ph).sin()).sum::<f64>()
    })
}

fn interior_mae(f: &FlowField, u0: f64, v0: f64, margin: usize) -> (f64, f64) {
    let (w, h) = (f.width(), f.height());
    let (mut eu, mut ev, mut n) = (0.0, 0.0, 0.0);
    for y in margin..h - margin {
        for x in margin..w - margin {
            eu += (f.u()[y * w + x] as f64 - u0).abs();
            ev += (f.v()[y * w + x] as f64 - v0).abs();
            n += 1.0;
        }
    }
    (eu / n, ev / n)
}

#[test]
fn one_pixel_translation() {
    for seed in [11, 13, 14] {
        let (a, b) = (texture(64, 48, seed, 0.0), texture(64, 48, seed, 1.0));
        let est = estimate_flow(&a, &b, &HornSchunck::default()).unwrap();
        let (mu, mv) = interior_mae(&est.field, 1.0, 0.0, 8);
        assert!(mu <= 0.2 && mv <= 0.2, "seed {seed}: MAE u {mu}, v {mv}");
    }
}

#[test]
fn three_levels_recover_translation() {
    let (a, b) = (texture(64, 48, 12, 0.0), texture(64, 48, 12, 1.0));
    let hs = HornSchunck { levels: 3, ..HornSchunck::default() };
    let (mu, mv) = interior_mae(&estimate_flow(&a, &b, &hs).unwrap().field, 1.0, 0.0, 8);
    assert!(mu <= 0.2 && mv <= 0.2, "MAE u {mu}, v {mv}");
}

#[test]
fn update_norm_settles() {
    let (a, b) = (texture(48, 40, 5, 0.0), texture(48, 40, 5, 1.0));
    let est = estimate_flow(&a, &b, &HornSchunck::default()).unwrap();
    for w in est.update_norms[10..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} then {}", w[0], w[1]);
    }
}

#[test]
fn smoother_never_rougher() {
    let (a, b) = (texture(48, 40, 6, 0.0), texture(48, 40, 6, 1.5));
    let mut last = f64::INFINITY;
    for s in [0.0025, 0.005, 0.01, 0.02, 0.04] {
        let hs = HornSchunck { smoothness: s, ..HornSchunck::default() };
        let tv = estimate_flow(&a, &b, &hs).unwrap().field.total_variation();
        assert!(tv <= last, "smoothness {s}: {tv} > {last}");
        last = tv;
    }
}

#[test]
fn deterministic() {
    let (a, b) = (texture(32, 24, 2, 0.0), texture(32, 24, 2, 0.5));
    let x = estimate_flow(&a, &b, &HornSchunck::default()).unwrap().field;
    let y = estimate_flow(&a, &b, &HornSchunck::default()).unwrap().field;
    assert_eq!(x, y);
}

#[test]
fn half_scale_sample_halves_flow() {
    let mut r = rng(8);
    let u: Vec<f32> = (0..16 * 12).map(|_| r.random_range(-6.0..6.0)).collect();
    let v: Vec<f32> = (0..16 * 12).map(|_| r.random_range(-6.0..6.0)).collect();
    let field = FlowField::new(16, 12, u, v).unwrap();
    let src = FrameSource::new("v", 0, Tensor::filled(&[3, 12, 16], 0.5), field.clone(), vec![]).unwrap();
    let (_, half) = downscaled_inputs(&src, Provenance::Half).unwrap();
    assert_eq!((half.width(), half.height()), (8, 6));
    for (comp, got) in [(field.u(), half.u()), (field.v(), half.v())] {
        let m = Map::from_vec(16, 12, comp.iter().map(|&x| x as f64).collect()).unwrap();
        let small = resize_map(&m, 8, 6).unwrap();
        for (g, s) in got.iter().zip(small.data()) {
            assert_eq!(*g, (s * 0.5) as f32);
        }
    }
}

#[test]
fn constant_field_halves_exactly() {
    let f = rescale_flow(&FlowField::constant(10, 8, 4.0, -3.0), 0.5).unwrap();
    assert!(f.u().iter().all(|&u| u == 2.0) && f.v().iter().all(|&v| v == -1.5));
}

fn field_strategy() -> impl Strategy<Value = FlowField> {
    (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
        let comp = prop::collection::vec(-1e6f32..1e6, w * h);
        (comp.clone(), comp).prop_map(move |(u, v)| FlowField::new(w, h, u, v).unwrap())
    })
}

proptest! {
    #[test]
    fn flo_roundtrip_bit_exact(f in field_strategy()) {
        let bytes = encode_flo(&f);
        prop_assert_eq!(bytes.len(), 12 + 8 * f.width() * f.height());
        let back = decode_flo(&bytes, std::path::Path::new("mem.flo")).unwrap();
        prop_assert_eq!(bytes, encode_flo(&back));
        prop_assert!(back.u().iter().zip(f.u()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(back.v().iter().zip(f.v()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn flow_image_in_unit_range(f in field_strategy(), b in 0.5f64..50.0) {
        let img = flow_to_image(&f, b).unwrap().tensor;
        prop_assert!(img.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let n = f.width() * f.height();
        for i in 0..n {
            let moving = f.u()[i] != 0.0 || f.v()[i] != 0.0;
            prop_assert_eq!(img.data()[2 * n + i] > 0.0, moving);
        }
    }
}
