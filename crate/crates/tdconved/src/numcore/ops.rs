//! Differentiable primitive operations and their backward companions.
//!
//! Forward signatures take tensors and validate shapes; the slice-level
//! helpers at the bottom are the unchecked hot paths the composite layers
//! build on.

use crate::error::{Error, Result};

use super::Tensor;

/// `y = W x + b` for `W: [out, in]`, `x: [in]`, `b: [out]`.
pub fn linear_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    if w.shape().len() != 2 || w.cols() != x.len() {
        return Err(Error::Shape {
            op: "linear_forward",
            lhs: w.shape().to_vec(),
            rhs: x.shape().to_vec(),
        });
    }
    if b.len() != w.rows() {
        return Err(Error::Shape {
            op: "linear_forward",
            lhs: w.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let mut y = b.data().to_vec();
    matvec_acc(&mut y, w.data(), x.data());
    Tensor::from_vec(vec![w.rows()], y)
}

/// Backward companion of [`linear_forward`]: given the upstream gradient
/// `gy`, returns `(gx, gw, gb)`.
pub fn linear_backward(x: &Tensor, w: &Tensor, gy: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (out_dim, in_dim) = (w.rows(), w.cols());
    debug_assert_eq!(gy.len(), out_dim);
    let mut gx = vec![0.0; in_dim];
    matvec_acc_transposed(&mut gx, w.data(), gy);
    let mut gw = vec![0.0; out_dim * in_dim];
    outer_acc(&mut gw, gy, x.data());
    (gx, gw, gy.to_vec())
}

/// Gated linear unit: splits `o = [A, B]` along the feature axis and
/// returns `A ⊗ σ(B)`. The feature extent must be even.
pub fn glu(o: &Tensor) -> Result<Tensor> {
    if o.len() % 2 != 0 {
        return Err(Error::Shape {
            op: "glu",
            lhs: o.shape().to_vec(),
            rhs: vec![o.len() / 2 * 2],
        });
    }
    let d = o.len() / 2;
    let mut y = vec![0.0; d];
    glu_into(&mut y, o.data());
    Tensor::from_vec(vec![d], y)
}

/// Backward companion of [`glu`]: gradient w.r.t. the full `[A, B]` input.
pub fn glu_backward(o: &Tensor, gy: &[f64]) -> Vec<f64> {
    let d = o.len() / 2;
    debug_assert_eq!(gy.len(), d);
    let mut go = vec![0.0; 2 * d];
    glu_backward_into(&mut go, o.data(), gy);
    go
}

/// Numerically stabilized softmax; the output is positive and sums to 1.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let mut y = v.to_vec();
    softmax_in_place(&mut y);
    y
}

/// Backward companion of [`softmax`] in terms of its output `y`:
/// `gv = y ⊗ (gy − <gy, y>)`.
pub fn softmax_backward(y: &[f64], gy: &[f64]) -> Vec<f64> {
    let dot: f64 = y.iter().zip(gy).map(|(a, b)| a * b).sum();
    y.iter().zip(gy).map(|(a, g)| a * (g - dot)).collect()
}

/// Log-softmax, stabilized by max subtraction.
pub fn log_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let logsum = v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    v.iter().map(|x| x - max - logsum).collect()
}

/// `−log softmax(logits)[target]`.
pub fn cross_entropy(logits: &Tensor, target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::Index {
            op: "cross_entropy",
            index: target,
            len: logits.len(),
        });
    }
    Ok(-log_softmax(logits.data())[target])
}

/// Backward companion of [`cross_entropy`]: `softmax(logits) − onehot(target)`.
pub fn cross_entropy_backward(logits: &Tensor, target: usize) -> Vec<f64> {
    let mut g = softmax(logits.data());
    g[target] -= 1.0;
    g
}

// ---- slice-level helpers ------------------------------------------------

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// `y[..d] = o[..d] ⊗ σ(o[d..])`.
pub(crate) fn glu_into(y: &mut [f64], o: &[f64]) {
    let d = y.len();
    for i in 0..d {
        y[i] = o[i] * sigmoid(o[d + i]);
    }
}

/// Accumulates the GLU input gradient into `go` given the input `o` and the
/// upstream gradient `gy`.
pub(crate) fn glu_backward_into(go: &mut [f64], o: &[f64], gy: &[f64]) {
    let d = gy.len();
    for i in 0..d {
        let s = sigmoid(o[d + i]);
        go[i] += gy[i] * s;
        go[d + i] += gy[i] * o[i] * s * (1.0 - s);
    }
}

/// `y += W x` for row-major `W: [y.len(), x.len()]`.
pub(crate) fn matvec_acc(y: &mut [f64], w: &[f64], x: &[f64]) {
    let n = x.len();
    for (yi, row) in y.iter_mut().zip(w.chunks_exact(n)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yi += acc;
    }
}

/// `y = W x + b`.
pub(crate) fn matvec_into(y: &mut [f64], w: &[f64], x: &[f64], b: &[f64]) {
    y.copy_from_slice(b);
    matvec_acc(y, w, x);
}

/// `gx += Wᵀ gy`.
pub(crate) fn matvec_acc_transposed(gx: &mut [f64], w: &[f64], gy: &[f64]) {
    let n = gx.len();
    for (gi, row) in gy.iter().zip(w.chunks_exact(n)) {
        if *gi == 0.0 {
            continue;
        }
        for (x, a) in gx.iter_mut().zip(row) {
            *x += gi * a;
        }
    }
}

/// `gW += gy xᵀ` (row-major accumulation of the outer product).
pub(crate) fn outer_acc(gw: &mut [f64], gy: &[f64], x: &[f64]) {
    let n = x.len();
    for (gi, row) in gy.iter().zip(gw.chunks_exact_mut(n)) {
        if *gi == 0.0 {
            continue;
        }
        for (w, b) in row.iter_mut().zip(x) {
            *w += gi * b;
        }
    }
}

pub(crate) fn add_assign(y: &mut [f64], x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (a, b) in y.iter_mut().zip(x) {
        *a += b;
    }
}

pub(crate) fn scale(y: &mut [f64], c: f64) {
    for v in y.iter_mut() {
        *v *= c;
    }
}
