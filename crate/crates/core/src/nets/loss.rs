use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// `L = (1/2N) Σ (pred − target)²` over all `N` elements, with gradient
/// `(pred − target) / N`.
pub fn euclidean_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    if pred.len() != target.len() || pred.nchw().ok() != target.nchw().ok() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dims(),
            target.dims()
        )));
    }
    let n = pred.len() as f64;
    let mut sq = 0.0f64;
    let mut grad = pred.clone();
    let inv = T::of(1.0 / n);
    for (g, &t) in grad.data_mut().iter_mut().zip(target.data()) {
        let r = *g - t;
        sq += r.f64() * r.f64();
        *g = r * inv;
    }
    Ok((sq / (2.0 * n), grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let a = Tensor::<f64>::from_fn(&[1, 1, 3, 3], |i| i as f64);
        assert_eq!(euclidean_loss(&a, &a).unwrap().0, 0.0);
    }

    #[test]
    fn unit_offset() {
        let t = Tensor::<f64>::zeros(&[1, 1, 10, 10]);
        let p = Tensor::<f64>::filled(&[1, 1, 10, 10], 1.0);
        let (l, g) = euclidean_loss(&p, &t).unwrap();
        assert_eq!(l, 0.5);
        assert!(g.data().iter().all(|&v| v == 0.01));
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor::<f64>::zeros(&[1, 1, 2, 2]);
        let b = Tensor::<f64>::zeros(&[1, 1, 2, 3]);
        assert!(euclidean_loss(&a, &b).is_err());
    }
}
