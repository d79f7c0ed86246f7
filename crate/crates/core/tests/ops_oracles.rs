mod common;

use common::*;
use dynsal_core::gradcheck::{grad_check, DEFAULT_EPS};
use dynsal_core::ops::*;
use dynsal_core::optim::{sgd_step, OptimizerState, SgdConfig};
use dynsal_core::Tensor;
use proptest::prelude::*;

#[test]
fn conv_matches_nested_loops() {
    let mut r = rng(11);
    let x = uniform(&[2, 3, 5, 5], &mut r);
    let p = params(4, 3, 3, 2, 1, &mut r);
    assert!(conv2d(&x, &p).unwrap().max_abs_diff(&conv_oracle(&x, &p)) <= 1e-12);
}

#[test]
fn conv_matches_nested_loops_up_to_4x8x9x9() {
    let mut r = rng(12);
    for &(n, c, h, w, co, f, p, s) in &[(4, 8, 9, 9, 5, 3, 1, 1), (1, 8, 9, 7, 3, 5, 2, 2), (3, 2, 9, 9, 4, 7, 3, 1)] {
        let x = uniform(&[n, c, h, w], &mut r);
        let prm = params(co, c, f, p, s, &mut r);
        assert!(conv2d(&x, &prm).unwrap().max_abs_diff(&conv_oracle(&x, &prm)) <= 1e-12);
    }
}

#[test]
fn deconv_is_transposed_conv_matrix() {
    let mut r = rng(13);
    // conv (2, 12, 8) -> (3, 3, 2) with f=8, s=4, p=2
    let conv = params(3, 2, 8, 2, 4, &mut r);
    let conv = ConvParams { bias: Tensor::zeros(&[3]), ..conv };
    let big = [1, 2, 12, 8];
    let (m, rows, cols) = conv_matrix(&big, &conv);
    let y = uniform(&[1, 3, 3, 2], &mut r);
    assert_eq!(rows, y.len());
    // deconv weights are the conv bank with its channel axes swapped
    let d = conv.filters.dims();
    let swapped = Tensor::from_fn(&[d[1], d[0], d[2], d[3]], |idx| {
        let kk = d[2] * d[3];
        let (k, rest) = (idx % kk, idx / kk);
        let (o, i) = (rest % d[0], rest / d[0]);
        conv.filters.data()[(o * d[1] + i) * kk + k]
    });
    let de = ConvParams::new(swapped, Tensor::zeros(&[2]), 2, 4).unwrap();
    let out = deconv2d(&y, &de).unwrap();
    assert_eq!(out.dims(), &big);
    let expect: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| m[i * cols + j] * y.data()[i]).sum()).collect();
    let expect = Tensor::from_vec(&big, expect).unwrap();
    assert!(out.max_abs_diff(&expect) <= 1e-12);
}

#[test]
fn deconv_unit_identity() {
    let mut r = rng(14);
    let x = uniform(&[1, 1, 1, 1], &mut r);
    let p = ConvParams::new(Tensor::filled(&[1, 1, 1, 1], 1.0), Tensor::zeros(&[1]), 0, 1).unwrap();
    assert_eq!(deconv2d(&x, &p).unwrap(), x);
}

#[test]
fn pool_matches_window_oracle() {
    let mut r = rng(15);
    for dims in [[1, 1, 6, 6], [2, 3, 7, 6], [1, 2, 9, 5]] {
        let x = uniform(&dims, &mut r);
        let (y, _) = maxpool(&x, PoolConfig::default()).unwrap();
        assert_eq!(y, pool_oracle(&x));
    }
}

#[test]
fn lrn_matches_formula() {
    let mut r = rng(16);
    let x = uniform(&[2, 7, 3, 4], &mut r).map(|v| v * 30.0);
    let (y, _) = lrn(&x, LrnConfig::default()).unwrap();
    assert!(y.max_abs_diff(&lrn_oracle(&x, 5, 1e-4, 0.75, 2.0)) <= 1e-14);
}

#[test]
fn lrn_single_channel_scalar() {
    let x = Tensor::filled(&[1, 1, 1, 1], 1.0);
    let (y, _) = lrn(&x, LrnConfig::default()).unwrap();
    let expect = 1.0 / (2.0f64 + 1e-4 / 5.0).powf(0.75);
    assert!((y.data()[0] - expect).abs() < 1e-15);
}

#[test]
fn relu_cases() {
    let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
    assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    let g = relu_backward(&x, &Tensor::filled(&[3], 1.0)).unwrap();
    assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
}

#[test]
fn max_tie_goes_to_first() {
    let mut r = rng(17);
    let a = uniform(&[1, 2, 3, 3], &mut r);
    let (y, sel) = elementwise_max(&a, &a).unwrap();
    assert_eq!(y, a);
    let g = uniform(&[1, 2, 3, 3], &mut r);
    let (ga, gb) = elementwise_max_backward(&sel, &g).unwrap();
    assert_eq!(ga, g);
    assert!(gb.data().iter().all(|&v| v == 0.0));
}

#[test]
fn concat_order_and_split() {
    let a = Tensor::filled(&[1, 1, 2, 2], 1.0);
    let b = Tensor::filled(&[1, 1, 2, 2], 2.0);
    let c = channel_concat(&a, &b).unwrap();
    assert_eq!(c.data(), &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    assert_eq!(channel_split(&c, 1).unwrap(), (a, b));
}

#[test]
fn concat_spatial_mismatch() {
    assert!(channel_concat(&Tensor::<f64>::zeros(&[1, 1, 2, 2]), &Tensor::zeros(&[1, 1, 2, 3])).is_err());
}

#[test]
fn sgd_weight_decay_0005() {
    let mut w = Tensor::<f64>::filled(&[1], 1.0);
    let g = Tensor::zeros(&[1]);
    let cfg = SgdConfig { base_lr: 1.0, momentum: 0.0, weight_decay: 0.0005, lr_step: 0, gamma: 0.1 };
    let mut st = OptimizerState::new([&w], cfg).unwrap();
    sgd_step(&mut [&mut w], &[g], &mut st).unwrap();
    assert!((w.data()[0] - 0.9995).abs() < 1e-15);
}

/// `⟨op(x), r⟩` against its analytic gradient `backward(r)` over `x`.
fn check_linearized(
    x: &Tensor<f64>,
    fwd: impl Fn(&Tensor<f64>) -> Tensor<f64>,
    bwd: impl Fn(&Tensor<f64>, &Tensor<f64>) -> Tensor<f64>,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let probe = uniform(fwd(x).dims(), &mut r);
    let analytic = bwd(x, &probe);
    let dims = x.dims().to_vec();
    let mut flat = x.data().to_vec();
    let loss = |v: &[f64]| fwd(&Tensor::from_vec(&dims, v.to_vec()).unwrap()).dot(&probe).unwrap();
    grad_check(loss, &mut flat, analytic.data(), None, DEFAULT_EPS).unwrap().max_rel_error
}

#[test]
fn conv_gradients() {
    let mut r = rng(20);
    let x = uniform(&[2, 3, 6, 5], &mut r);
    let p = params(4, 3, 3, 1, 2, &mut r);
    let e = check_linearized(&x, |x| conv2d(x, &p).unwrap(), |x, g| conv2d_backward(x, &p, g).unwrap().input, 1);
    assert!(e < 1e-4, "{e}");
    // filters
    let dims = p.filters.dims().to_vec();
    let probe = uniform(conv2d(&x, &p).unwrap().dims(), &mut r);
    let grads = conv2d_backward(&x, &p, &probe).unwrap();
    let mut w = p.filters.data().to_vec();
    let loss = |v: &[f64]| {
        let q = ConvParams { filters: Tensor::from_vec(&dims, v.to_vec()).unwrap(), ..p.clone() };
        conv2d(&x, &q).unwrap().dot(&probe).unwrap()
    };
    let e = grad_check(loss, &mut w, grads.filters.data(), None, DEFAULT_EPS).unwrap().max_rel_error;
    assert!(e < 1e-4, "{e}");
    let mut b = p.bias.data().to_vec();
    let loss = |v: &[f64]| {
        let q = ConvParams { bias: Tensor::from_vec(&[4], v.to_vec()).unwrap(), ..p.clone() };
        conv2d(&x, &q).unwrap().dot(&probe).unwrap()
    };
    let e = grad_check(loss, &mut b, grads.bias.data(), None, DEFAULT_EPS).unwrap().max_rel_error;
    assert!(e < 1e-4, "{e}");
}

#[test]
fn unit_conv_gradient_is_exact() {
    let mut r = rng(21);
    let x = uniform(&[1, 2, 4, 4], &mut r);
    let p = params(3, 2, 1, 0, 1, &mut r);
    let e = check_linearized(&x, |x| conv2d(x, &p).unwrap(), |x, g| conv2d_backward(x, &p, g).unwrap().input, 2);
    assert!(e < 1e-9, "{e}");
}

#[test]
fn deconv_gradients() {
    let mut r = rng(22);
    let x = uniform(&[1, 2, 3, 4], &mut r);
    let p = params(3, 2, 8, 2, 4, &mut r);
    let e =
        check_linearized(&x, |x| deconv2d(x, &p).unwrap(), |x, g| deconv2d_backward(x, &p, g).unwrap().input, 3);
    assert!(e < 1e-4, "{e}");
    let probe = uniform(deconv2d(&x, &p).unwrap().dims(), &mut r);
    let grads = deconv2d_backward(&x, &p, &probe).unwrap();
    let dims = p.filters.dims().to_vec();
    let mut w = p.filters.data().to_vec();
    let loss = |v: &[f64]| {
        let q = ConvParams { filters: Tensor::from_vec(&dims, v.to_vec()).unwrap(), ..p.clone() };
        deconv2d(&x, &q).unwrap().dot(&probe).unwrap()
    };
    let e = grad_check(loss, &mut w, grads.filters.data(), None, DEFAULT_EPS).unwrap().max_rel_error;
    assert!(e < 1e-4, "{e}");
}

#[test]
fn pool_lrn_relu_max_gradients() {
    let mut r = rng(23);
    let x = uniform(&[1, 2, 7, 6], &mut r);
    let e = check_linearized(
        &x,
        |x| maxpool(x, PoolConfig::default()).unwrap().0,
        |x, g| {
            let (_, idx) = maxpool(x, PoolConfig::default()).unwrap();
            maxpool_backward(x.dims(), &idx, g).unwrap()
        },
        4,
    );
    assert!(e < 1e-4, "pool {e}");

    let x = uniform(&[2, 7, 3, 3], &mut r).map(|v| v * 40.0);
    let cfg = LrnConfig::default();
    let e = check_linearized(
        &x,
        |x| lrn(x, cfg).unwrap().0,
        |x, g| {
            let (_, s) = lrn(x, cfg).unwrap();
            lrn_backward(x, &s, g, cfg).unwrap()
        },
        5,
    );
    assert!(e < 1e-4, "lrn {e}");

    let x = uniform(&[1, 2, 4, 4], &mut r).map(|v| if v.abs() < 1e-2 { 0.5 } else { v });
    let e = check_linearized(&x, relu, |x, g| relu_backward(x, g).unwrap(), 6);
    assert!(e < 1e-4, "relu {e}");

    let b = uniform(&[1, 2, 4, 4], &mut r);
    let e = check_linearized(
        &x,
        |x| elementwise_max(x, &b).unwrap().0,
        |x, g| {
            let (_, sel) = elementwise_max(x, &b).unwrap();
            elementwise_max_backward(&sel, g).unwrap().0
        },
        7,
    );
    assert!(e < 1e-4, "max {e}");
}

#[test]
fn ops_are_deterministic() {
    let mut r = rng(24);
    let x = uniform(&[2, 4, 9, 9], &mut r);
    let p = params(5, 4, 5, 2, 1, &mut r);
    assert_eq!(conv2d(&x, &p).unwrap(), conv2d(&x, &p).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conv_deconv_adjoint(seed in any::<u64>(), h in 3usize..10, w in 3usize..10, f in 1usize..5, p in 0usize..3, s in 1usize..3) {
        prop_assume!(h + 2 * p >= f && w + 2 * p >= f);
        let mut r = rng(seed);
        let x = uniform(&[1, 2, h, w], &mut r);
        let mut cp = params(3, 2, f, p, s, &mut r);
        cp.bias = Tensor::zeros(&[3]);
        let y = conv2d(&x, &cp).unwrap();
        let probe = uniform(y.dims(), &mut r);
        let back = conv2d_backward(&x, &cp, &probe).unwrap().input;
        let lhs = y.dot(&probe).unwrap();
        let rhs = x.dot(&back).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn max_commutes_without_ties(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = uniform(&[1, 2, 3, 3], &mut r);
        let b = uniform(&[1, 2, 3, 3], &mut r);
        prop_assert_eq!(elementwise_max(&a, &b).unwrap().0, elementwise_max(&b, &a).unwrap().0);
    }

    #[test]
    fn relu_keeps_nonnegative(v in proptest::collection::vec(0.0f64..10.0, 1..32)) {
        let t = Tensor::from_vec(&[v.len()], v).unwrap();
        prop_assert_eq!(relu(&t), t);
    }

    #[test]
    fn pool_restores_with_deconv(hq in 4usize..81, wq in 4usize..81) {
        let (h, w) = (4 * hq, 4 * wq);
        let h2 = pool_output_dim(pool_output_dim(h, 3, 2).unwrap(), 3, 2).unwrap();
        let w2 = pool_output_dim(pool_output_dim(w, 3, 2).unwrap(), 3, 2).unwrap();
        prop_assert_eq!(deconv_output_dim(h2, 8, 2, 4).unwrap(), h);
        prop_assert_eq!(deconv_output_dim(w2, 8, 2, 4).unwrap(), w);
    }
}
