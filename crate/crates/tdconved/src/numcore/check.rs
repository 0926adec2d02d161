//! Central-finite-difference gradient oracle. Test code and the gradcheck
//! command compare analytic backward passes against this.

use super::Tensor;

/// Gradient of a scalar-valued `f` at `x` by central differences,
/// `(f(x + ε·eᵢ) − f(x − ε·eᵢ)) / 2ε` per coordinate.
///
/// `f` must be pure and deterministic; evaluation order is coordinate order.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, eps: f64) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    let mut probe = x.clone();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let hi = f(&probe);
        probe.data_mut()[i] = orig - eps;
        let lo = f(&probe);
        probe.data_mut()[i] = orig;
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    Tensor::from_vec(x.shape().to_vec(), grad).expect("same shape as input")
}

/// Worst per-coordinate relative error between an analytic gradient and a
/// finite-difference estimate. The denominator is floored at 1e-3 so
/// coordinates whose true gradient is (near) zero are compared absolutely
/// at a 1e3 tighter scale instead of dividing noise by noise.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3))
        .fold(0.0, f64::max)
}
