mod common;

use common::rng;
use dynsal_core::data::synthetic::{render_scene, write_toy_dataset, SceneConfig};
use dynsal_core::data::{load_dataset, Fixation};
use dynsal_core::predict::write_prediction;
use dynsal_core::map::Map;
use dynsal_core::metrics::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// `P(s_fix > s_non) + ½ P(s_fix = s_non)` by comparing every pair.
fn pairwise_auc(m: &Map, fx: &[Fixation]) -> f64 {
    let w = m.width();
    let pos: Vec<usize> = fx.iter().map(|f| f.y as usize * w + f.x as usize).collect();
    let (mut score, mut pairs) = (0.0, 0.0);
    for &p in &pos {
        for n in 0..m.len() {
            if pos.contains(&n) {
                continue;
            }
            let (a, b) = (m.data()[p], m.data()[n]);
            score += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            pairs += 1.0;
        }
    }
    score / pairs
}

fn random_case(seed: u64) -> (Map, Vec<Fixation>) {
    let mut r = rng(seed);
    // coarse levels so ties occur
    let m = Map::from_vec(6, 6, (0..36).map(|_| r.random_range(0..8) as f64 / 7.0).collect()).unwrap();
    let k = r.random_range(1..6);
    let fx = (0..k).map(|s| Fixation::new(r.random_range(0..6) as f64, r.random_range(0..6) as f64, s)).collect();
    (m, fx)
}

#[test]
fn auc_matches_pairwise_oracle() {
    for seed in 0..100 {
        let (m, fx) = random_case(seed);
        let got = auc(&m, &fx).unwrap();
        assert!((got - pairwise_auc(&m, &fx)).abs() <= 1e-12, "seed {seed}");
    }
}

fn oracle_moments(a: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    (mean, (a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

fn random_map(r: &mut impl Rng, w: usize, h: usize) -> Map {
    Map::from_vec(w, h, (0..w * h).map(|_| r.random::<f64>()).collect()).unwrap()
}

#[test]
fn continuous_measures_match_formulas() {
    let mut r = rng(42);
    for _ in 0..50 {
        let (p, q) = (random_map(&mut r, 9, 7), random_map(&mut r, 9, 7));
        let (pa, qa) = (p.data(), q.data());
        let ((mp, sp), (mq, sq)) = (oracle_moments(pa), oracle_moments(qa));
        let cov: f64 = pa.iter().zip(qa).map(|(a, b)| (a - mp) * (b - mq)).sum::<f64>() / pa.len() as f64;
        assert!((cc(&p, &q).unwrap() - cov / (sp * sq)).abs() <= 1e-12);

        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let expect = dot(pa, qa) / (dot(pa, pa) * dot(qa, qa)).sqrt();
        assert!((ncc(&p, &q).unwrap() - expect).abs() <= 1e-12);

        let (tp, tq) = (pa.iter().sum::<f64>(), qa.iter().sum::<f64>());
        let mut x2 = 0.0;
        for (a, b) in pa.iter().zip(qa) {
            let (a, b) = (a / tp, b / tq);
            if a + b > 0.0 {
                x2 += (a - b) * (a - b) / (a + b);
            }
        }
        assert!((chi2(&p, &q).unwrap() - x2 / 2.0).abs() <= 1e-12);

        let fx: Vec<Fixation> = (0..4).map(|s| Fixation::new(r.random_range(0..9) as f64, r.random_range(0..7) as f64, s)).collect();
        let z: f64 = fx.iter().map(|f| (p.get(f.x as usize, f.y as usize) - mp) / sp).sum::<f64>() / 4.0;
        assert!((nss(&p, &fx).unwrap() - z).abs() <= 1e-12);
    }
}

#[test]
fn chi2_hand_example() {
    let p = Map::from_vec(2, 1, vec![0.5, 0.5]).unwrap();
    let q = Map::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
    assert!((chi2(&p, &q).unwrap() - 1.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn nss_repeated_value() {
    let m = Map::from_fn(4, 4, |x, y| if y == 0 && x < 2 { 3.0 } else { 1.0 });
    let one = nss(&m, &[Fixation::new(0.0, 0.0, 0)]).unwrap();
    let two = nss(&m, &[Fixation::new(0.0, 0.0, 0), Fixation::new(1.0, 0.0, 1)]).unwrap();
    assert!((one - two).abs() < 1e-15);
}

/// Every frame's fixations come from one central Gaussian and the saliency
/// map is that Gaussian, so the map wins on location but carries no
/// information beyond the shared prior.
#[test]
fn center_bias_is_compensated() {
    let (w, h) = (64, 48);
    let prior = Map::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 31.5, y as f64 - 23.5);
        (-(dx * dx + dy * dy) / (2.0 * 6.0f64.powi(2))).exp()
    });
    let mut r = rng(2024);
    let nx = Normal::new(31.5f64, 6.0).unwrap();
    let ny = Normal::new(23.5f64, 6.0).unwrap();
    let frames: Vec<Vec<Fixation>> = (0..40)
        .map(|_| {
            (0..15)
                .map(|s| Fixation::new(nx.sample(&mut r).clamp(0.0, 63.9), ny.sample(&mut r).clamp(0.0, 47.9), s))
                .collect()
        })
        .collect();
    let (mut a, mut s) = (0.0, 0.0);
    for (i, fx) in frames.iter().enumerate() {
        let pool: Vec<Fixation> =
            frames.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, f)| f.clone()).collect();
        a += auc(&prior, fx).unwrap();
        s += sauc(&prior, fx, &pool, i as u64).unwrap();
    }
    let (a, s) = (a / 40.0, s / 40.0);
    assert!(a > 0.8, "auc {a}");
    assert!((0.45..=0.55).contains(&s), "sauc {s}");
}

#[test]
fn evaluate_counts_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SceneConfig { frames: 4, ..SceneConfig::default() };
    write_toy_dataset(&dir.path().join("data"), 2, &cfg, 3).unwrap();
    std::fs::write(dir.path().join("data/video_001/fixations.csv"), "frame,x,y,subject\n1,10,10,0\n").unwrap();
    let ds = load_dataset(&dir.path().join("data")).unwrap();
    let preds = dir.path().join("pred");
    let scene = render_scene(&cfg, 3).unwrap();
    for v in &ds.videos {
        for f in &v.frames {
            let m = Map::from_fn(40, 30, |x, y| scene.frames[f.index].appearance.plane(0, 0)[y * 2 * 80 + x * 2]);
            write_prediction(&m, &prediction_path(&preds, &v.name, f.index)).unwrap();
        }
    }
    let rep = evaluate(&preds, &ds, &EvalConfig { seed: 1, kde_sigma: None }).unwrap();
    assert_eq!(rep.frames.len(), 5);
    assert_eq!(rep.skipped, 3);
    assert_eq!(rep.frames_csv().lines().count(), 6);
    assert_eq!(rep.summary_csv().lines().count(), 4);
    let again = evaluate(&preds, &ds, &EvalConfig { seed: 1, kde_sigma: None }).unwrap();
    assert_eq!(rep.frames_csv(), again.frames_csv());
    let single: Vec<EvalResult> = rep.frames.iter().filter(|f| f.video == "video_001").map(|f| f.result).collect();
    assert_eq!(rep.per_video[1].1, single[0]);
}

#[test]
fn evaluate_missing_prediction() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_dataset(dir.path(), 1, &SceneConfig { frames: 2, ..SceneConfig::default() }, 3).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let err = evaluate(&dir.path().join("nothing"), &ds, &EvalConfig { seed: 0, kde_sigma: None }).unwrap_err();
    assert!(err.to_string().contains("000000.raw"), "{err}");
}

fn map_and_fix() -> impl Strategy<Value = (Map, Vec<Fixation>)> {
    (prop::collection::vec(0.0f64..10.0, 30), prop::collection::vec((0usize..6, 0usize..5), 1..6)).prop_map(|(d, f)| {
        let fx = f.iter().enumerate().map(|(s, &(x, y))| Fixation::new(x as f64, y as f64, s as u32)).collect();
        (Map::from_vec(6, 5, d).unwrap(), fx)
    })
}

proptest! {
    #[test]
    fn rank_measures_ignore_monotone_maps((m, fx) in map_and_fix(), seed in 0u64..1000) {
        let cubed = m.map(|v| v * v * v);
        prop_assert_eq!(auc(&m, &fx).unwrap(), auc(&cubed, &fx).unwrap());
        let pool = vec![Fixation::new(0.0, 0.0, 0), Fixation::new(5.0, 4.0, 1), Fixation::new(2.0, 3.0, 2)];
        prop_assert_eq!(sauc(&m, &fx, &pool, seed).unwrap(), sauc(&cubed, &fx, &pool, seed).unwrap());
    }

    #[test]
    fn nss_affine_invariant((m, fx) in map_and_fix(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let (x, y) = (nss(&m, &fx).unwrap(), nss(&m.map(|v| a * v + b), &fx).unwrap());
        prop_assert!((x - y).abs() < 1e-9);
    }

    #[test]
    fn cc_symmetric_and_affine(
        (p, _) in map_and_fix(), (q, _) in map_and_fix(), a in 0.1f64..10.0, b in -5.0f64..5.0,
    ) {
        let c = cc(&p, &q).unwrap();
        prop_assert!((c - cc(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!((c - cc(&p.map(|v| a * v + b), &q).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
    }

    #[test]
    fn chi2_bounded_symmetric((p, _) in map_and_fix(), (q, _) in map_and_fix()) {
        let d = chi2(&p, &q).unwrap();
        prop_assert!((d - chi2(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(chi2(&p, &p.map(|v| 3.0 * v)).unwrap() < 1e-12);
    }
}
