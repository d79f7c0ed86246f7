//! Central finite-difference gradient checking in double precision.

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate where the maximum was attained.
    pub worst_index: usize,
    pub checked: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / DENOM_FLOOR.max(analytic.abs() + numeric.abs())
}

/// Compares `analytic` against central differences of `loss` at `x`, over
/// `indices` (all coordinates when `None`). `x` is restored before return.
pub fn grad_check<F>(
    mut loss: F,
    x: &mut [f64],
    analytic: &[f64],
    indices: Option<&[usize]>,
    eps: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if x.len() != analytic.len() {
        return Err(Error::Shape(format!(
            "{} coordinates but {} analytic gradients",
            x.len(),
            analytic.len()
        )));
    }
    let all: Vec<usize>;
    let indices = match indices {
        Some(ix) => ix,
        None => {
            all = (0..x.len()).collect();
            &all
        }
    };
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, checked: 0 };
    for &i in indices {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = loss(x);
        x[i] = orig - eps;
        let minus = loss(x);
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFinite(format!(
                "coordinate {i}: loss(+eps) = {plus}, loss(-eps) = {minus}, analytic = {}",
                analytic[i]
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
        report.checked += 1;
    }
    Ok(report)
}
