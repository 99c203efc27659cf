//! Finite-difference verification of analytic gradients.
//!
//! A gradient claim is checked by comparing the analytic derivative against
//! the central difference [f(x+h) − f(x−h)] / 2h of a scalar probe function.
//! With f64 and h = 1e-5 the truncation and rounding errors are both far
//! below the acceptance threshold, so a mismatch localizes a backprop bug
//! rather than numerical noise.

/// Central-difference step. At f64 precision the optimum is near
/// cbrt(eps) ≈ 6e-6; 1e-5 keeps truncation O(h²) ≈ 1e-10 while the
/// cancellation error stays near 1e-11 for O(1) values.
pub const FD_STEP: f64 = 1e-5;

/// Acceptance threshold on [`relative_error`] between analytic and
/// finite-difference values.
pub const FD_TOLERANCE: f64 = 1e-4;

/// Scale-free discrepancy: |a − b| / max(|a| + |b|, 1e-8).
///
/// The floor keeps the ratio meaningful when both values are near zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Central difference of `f` along coordinate `i` of `x`.
///
/// `f` must be a pure function of `x`; the slot is restored afterwards.
pub fn central_diff(x: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let saved = x[i];
    x[i] = saved + FD_STEP;
    let up = f(x);
    x[i] = saved - FD_STEP;
    let down = f(x);
    x[i] = saved;
    (up - down) / (2.0 * FD_STEP)
}

/// Worst relative error between an analytic gradient and central differences
/// of `f` over every coordinate of `x`.
pub fn max_gradient_error(
    x: &mut [f64],
    analytic: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    assert_eq!(x.len(), analytic.len(), "gradient length mismatch");
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let fd = central_diff(x, i, &mut f);
        worst = worst.max(relative_error(a, fd));
    }
    worst
}
