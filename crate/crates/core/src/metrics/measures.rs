//! The six saliency measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Fixation;
use crate::error::{Error, Result};
use crate::map::Map;

/// Negative-sampling rounds averaged by [`sauc`].
pub const SAUC_ROUNDS: usize = 100;

fn fixated_pixels(map: &Map, fixations: &[Fixation]) -> Vec<usize> {
    fixations
        .iter()
        .map(|f| {
            let (x, y) = f.pixel(map.width(), map.height());
            y * map.width() + x
        })
        .collect()
}

/// `P(pos > neg) + ½ P(pos = neg)` over all positive/negative pairs.
/// `negatives` must be sorted.
fn rank_auc(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut score = 0.0;
    for &p in positives {
        let below = negatives.partition_point(|&n| n < p);
        let not_above = negatives.partition_point(|&n| n <= p);
        score += below as f64 + 0.5 * (not_above - below) as f64;
    }
    score / (positives.len() as f64 * negatives.len() as f64)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn check_finite(map: &Map, what: &str) -> Result<()> {
    if map.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} contains non-finite values")))
    }
}

/// Area under the ROC curve with every fixated pixel as a positive and every
/// non-fixated pixel as a negative, over all thresholds.
pub fn auc(saliency: &Map, fixations: &[Fixation]) -> Result<f64> {
    check_finite(saliency, "saliency map")?;
    if fixations.is_empty() {
        return Err(Error::Undefined("AUC needs at least one fixation".into()));
    }
    let idx = fixated_pixels(saliency, fixations);
    let mut fixated = vec![false; saliency.len()];
    idx.iter().for_each(|&i| fixated[i] = true);
    let negatives: Vec<f64> =
        saliency.data().iter().zip(&fixated).filter(|(_, &f)| !f).map(|(&v, _)| v).collect();
    if negatives.is_empty() {
        return Err(Error::Undefined("AUC needs at least one non-fixated pixel".into()));
    }
    let positives: Vec<f64> = idx.iter().map(|&i| saliency.data()[i]).collect();
    Ok(rank_auc(&positives, &sorted(negatives)))
}

/// Shuffled AUC: negatives are drawn with replacement from fixations of
/// other frames, as many as there are positives, and the AUC is averaged
/// over [`SAUC_ROUNDS`] draws.
pub fn sauc(saliency: &Map, fixations: &[Fixation], negative_pool: &[Fixation], seed: u64) -> Result<f64> {
    check_finite(saliency, "saliency map")?;
    if fixations.is_empty() {
        return Err(Error::Undefined("sAUC needs at least one fixation".into()));
    }
    if negative_pool.is_empty() {
        return Err(Error::Undefined("sAUC needs a nonempty negative pool".into()));
    }
    let positives: Vec<f64> = fixated_pixels(saliency, fixations).iter().map(|&i| saliency.data()[i]).collect();
    let pool: Vec<f64> = fixated_pixels(saliency, negative_pool).iter().map(|&i| saliency.data()[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..SAUC_ROUNDS {
        let negatives: Vec<f64> = (0..positives.len()).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        total += rank_auc(&positives, &sorted(negatives));
    }
    Ok(total / SAUC_ROUNDS as f64)
}

fn mean_std(m: &Map) -> (f64, f64) {
    let n = m.len() as f64;
    let mean = m.sum() / n;
    let var = m.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn same_dims(a: &Map, b: &Map) -> Result<()> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "maps are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

/// Pearson correlation over pixels.
pub fn cc(saliency: &Map, density: &Map) -> Result<f64> {
    same_dims(saliency, density)?;
    check_finite(saliency, "saliency map")?;
    let (ma, sa) = mean_std(saliency);
    let (mb, sb) = mean_std(density);
    if sa == 0.0 || sb == 0.0 {
        return Err(Error::Undefined("CC of a constant map".into()));
    }
    let cov = saliency.data().iter().zip(density.data()).map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>()
        / saliency.len() as f64;
    Ok(cov / (sa * sb))
}

/// Mean z-scored saliency at the fixated pixels (population std); 0 for a
/// constant map.
pub fn nss(saliency: &Map, fixations: &[Fixation]) -> Result<f64> {
    check_finite(saliency, "saliency map")?;
    if fixations.is_empty() {
        return Err(Error::Undefined("NSS needs at least one fixation".into()));
    }
    let (mean, std) = mean_std(saliency);
    if std == 0.0 {
        return Ok(0.0);
    }
    let idx = fixated_pixels(saliency, fixations);
    Ok(idx.iter().map(|&i| (saliency.data()[i] - mean) / std).sum::<f64>() / idx.len() as f64)
}

/// Uncentered normalized cross-correlation `ΣPG / √(ΣP² ΣG²)`.
pub fn ncc(saliency: &Map, density: &Map) -> Result<f64> {
    same_dims(saliency, density)?;
    check_finite(saliency, "saliency map")?;
    let dot = |a: &Map, b: &Map| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>();
    let (pp, gg) = (dot(saliency, saliency), dot(density, density));
    if pp == 0.0 || gg == 0.0 {
        return Err(Error::Undefined("NCC of an all-zero map".into()));
    }
    Ok(dot(saliency, density) / (pp * gg).sqrt())
}

/// `½ Σ (p − q)² / (p + q)` on both maps normalized to unit sum; zero-mass
/// pixels contribute nothing.
pub fn chi2(saliency: &Map, density: &Map) -> Result<f64> {
    same_dims(saliency, density)?;
    check_finite(saliency, "saliency map")?;
    if saliency.data().iter().chain(density.data()).any(|&v| v < 0.0) {
        return Err(Error::Undefined("chi-squared distance of a map with negative values".into()));
    }
    let (sp, sq) = (saliency.sum(), density.sum());
    if sp == 0.0 || sq == 0.0 {
        return Err(Error::Undefined("chi-squared distance of a map summing to 0".into()));
    }
    let mut total = 0.0;
    for (&a, &b) in saliency.data().iter().zip(density.data()) {
        let (p, q) = (a / sp, b / sq);
        if p + q > 0.0 {
            total += (p - q).powi(2) / (p + q);
        }
    }
    Ok(0.5 * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(points: &[(usize, usize)]) -> Vec<Fixation> {
        points.iter().map(|&(x, y)| Fixation::new(x as f64, y as f64, 0)).collect()
    }

    #[test]
    fn auc_perfect_and_constant() {
        let m = Map::from_fn(4, 4, |x, y| if (x, y) == (1, 2) { 5.0 } else { 0.1 * x as f64 });
        assert_eq!(auc(&m, &fx(&[(1, 2)])).unwrap(), 1.0);
        assert_eq!(auc(&Map::filled(4, 4, 3.0), &fx(&[(0, 0), (3, 3)])).unwrap(), 0.5);
        assert!(auc(&m, &[]).is_err());
    }

    #[test]
    fn sauc_constant_and_disjoint() {
        assert_eq!(sauc(&Map::filled(5, 5, 1.0), &fx(&[(1, 1)]), &fx(&[(4, 4)]), 0).unwrap(), 0.5);
        let m = Map::from_fn(5, 5, |x, _| x as f64);
        assert_eq!(sauc(&m, &fx(&[(4, 0), (3, 1)]), &fx(&[(0, 0), (1, 3)]), 0).unwrap(), 1.0);
        assert!(sauc(&m, &fx(&[(4, 0)]), &[], 0).is_err());
    }

    #[test]
    fn cc_self_and_negation() {
        let d = Map::from_fn(6, 5, |x, y| ((x * 7 + y * 3) % 5) as f64 / 10.0);
        assert!((cc(&d, &d).unwrap() - 1.0).abs() < 1e-12);
        assert!((cc(&d.map(|v| 1.0 - v), &d).unwrap() + 1.0).abs() < 1e-12);
        assert!(cc(&Map::filled(6, 5, 1.0), &d).is_err());
    }

    #[test]
    fn nss_example() {
        let m = Map::from_fn(4, 4, |x, y| if (x, y) == (2, 1) { 4.0 } else { 0.0 });
        let std = (15.0f64 * 0.25f64.powi(2) + 3.75f64.powi(2)).sqrt() / 4.0;
        assert!((nss(&m, &fx(&[(2, 1)])).unwrap() - 3.75 / std).abs() < 1e-12);
        assert_eq!(nss(&Map::filled(4, 4, 2.0), &fx(&[(0, 0)])).unwrap(), 0.0);
    }

    #[test]
    fn ncc_cases() {
        let a = Map::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        let b = Map::from_vec(2, 1, vec![0.0, 2.0]).unwrap();
        assert_eq!(ncc(&a, &b).unwrap(), 0.0);
        assert!((ncc(&b, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi2_cases() {
        let p = Map::from_vec(2, 1, vec![0.5, 0.5]).unwrap();
        let q = Map::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        assert!((chi2(&p, &q).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(chi2(&p, &p).unwrap(), 0.0);
        let r = Map::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        assert_eq!(chi2(&q, &r).unwrap(), 1.0);
    }
}
