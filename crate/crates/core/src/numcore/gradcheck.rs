use crate::{ensure_contract, Error, Result};

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate where `max_rel_error` occurred.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Central-difference gradient of `f` at `params`, compared coordinate-wise
/// with `analytic`. The relative error of a coordinate is
/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn grad_check(
    params: &[f64],
    analytic: &[f64],
    eps: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<GradCheckReport> {
    ensure_contract!(eps > 0.0, "grad_check: eps must be positive, got {eps}");
    ensure_contract!(
        params.len() == analytic.len(),
        "grad_check: {} params but {} gradient entries",
        params.len(),
        analytic.len()
    );
    let mut w = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..w.len() {
        let orig = w[i];
        w[i] = orig + eps;
        let plus = f(&w);
        w[i] = orig - eps;
        let minus = f(&w);
        w[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Invalid(format!(
                "grad_check: objective is not finite at coordinate {i}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        if i == 0 || rel > report.max_rel_error {
            report = GradCheckReport {
                max_rel_error: rel,
                worst_index: i,
                analytic: a,
                numeric,
            };
        }
    }
    Ok(report)
}
