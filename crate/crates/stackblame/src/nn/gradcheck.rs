//! Finite-difference gradient verification.

/// Compares analytic gradients against central differences
/// `(f(p + eps) - f(p - eps)) / (2 eps)` and returns the maximum relative
/// error `|a - n| / max(1e-8, |a|, |n|)` over all coordinates.
pub fn grad_check<F>(mut f: F, theta: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(
        theta.len(),
        analytic.len(),
        "parameter and gradient vectors differ in length"
    );
    let mut work = theta.to_vec();
    let mut worst = 0.0f64;
    for k in 0..theta.len() {
        let original = work[k];
        work[k] = original + eps;
        let plus = f(&work);
        work[k] = original - eps;
        let minus = f(&work);
        work[k] = original;

        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[k];
        let rel = (a - numeric).abs() / (1e-8f64).max(a.abs()).max(numeric.abs());
        worst = worst.max(rel);
    }
    worst
}
