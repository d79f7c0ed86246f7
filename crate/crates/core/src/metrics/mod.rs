//! Saliency evaluation measures and dataset-level reports.

mod eval;
mod measures;

pub use eval::{aggregate, evaluate, evaluate_frame, prediction_path, EvalConfig, EvalReport, EvalResult, FrameEval};
pub use measures::{auc, cc, chi2, ncc, nss, sauc, SAUC_ROUNDS};
