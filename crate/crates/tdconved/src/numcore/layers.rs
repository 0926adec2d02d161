//! Small learnable building blocks. Backward methods accumulate into the
//! parameter tensors' gradient slots and add the input gradient into the
//! caller-provided buffer, so repeated uses of a parameter sum correctly.

use super::{matvec_acc_transposed, matvec_into, outer_acc, Rng, Tensor};

/// Affine map `y = W x + b`, weight `[out, in]`, bias `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Affine {
    /// Weight entries uniform in `±sqrt(1/fan_in)`, bias zero.
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut Rng) -> Self {
        let bound = (1.0 / in_dim as f64).sqrt();
        let mut weight = Tensor::zeros(vec![out_dim, in_dim]);
        weight.fill_uniform(rng, -bound, bound);
        Self {
            weight,
            bias: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![out_dim, in_dim]),
            bias: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward_into(&self, y: &mut [f64], x: &[f64]) {
        matvec_into(y, self.weight.data(), x, self.bias.data());
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.out_dim()];
        self.forward_into(&mut y, x);
        y
    }

    /// Accumulates parameter gradients and adds `Wᵀ gy` into `gx`.
    pub fn backward_acc(&mut self, x: &[f64], gy: &[f64], gx: &mut [f64]) {
        outer_acc(self.weight.grad_mut(), gy, x);
        self.bias.acc_grad(gy);
        matvec_acc_transposed(gx, self.weight.data(), gy);
    }
}

/// Linear map without a bias, `y = W x`. Used where the formulation shares
/// a single bias across several projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
}

impl Linear {
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut Rng) -> Self {
        let bound = (1.0 / in_dim as f64).sqrt();
        let mut weight = Tensor::zeros(vec![out_dim, in_dim]);
        weight.fill_uniform(rng, -bound, bound);
        Self { weight }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward_into(&self, y: &mut [f64], x: &[f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        super::ops::matvec_acc(y, self.weight.data(), x);
    }

    pub fn forward_acc(&self, y: &mut [f64], x: &[f64]) {
        super::ops::matvec_acc(y, self.weight.data(), x);
    }

    pub fn backward_acc(&mut self, x: &[f64], gy: &[f64], gx: &mut [f64]) {
        outer_acc(self.weight.grad_mut(), gy, x);
        matvec_acc_transposed(gx, self.weight.data(), gy);
    }
}

/// Lookup table of learned row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Tensor,
}

impl Embedding {
    pub fn init(rows: usize, dim: usize, rng: &mut Rng) -> Self {
        let bound = (1.0 / dim as f64).sqrt();
        let mut table = Tensor::zeros(vec![rows, dim]);
        table.fill_uniform(rng, -bound, bound);
        Self { table }
    }

    pub fn rows(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.table.row(i)
    }

    pub fn backward_acc(&mut self, i: usize, gy: &[f64]) {
        let cols = self.table.cols();
        let grad = self.table.grad_mut();
        for (g, v) in grad[i * cols..(i + 1) * cols].iter_mut().zip(gy) {
            *g += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_reproducible_bit_for_bit() {
        let a = Affine::init(8, 16, &mut Rng::new(99));
        let b = Affine::init(8, 16, &mut Rng::new(99));
        assert_eq!(a.weight.data(), b.weight.data());
        let bound = (1.0_f64 / 16.0).sqrt();
        assert!(a.weight.data().iter().all(|v| v.abs() <= bound));
        assert!(a.bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_backward_accumulates_across_calls() {
        let mut rng = Rng::new(5);
        let mut aff = Affine::init(2, 3, &mut rng);
        let x = [0.5, -1.0, 2.0];
        let gy = [1.0, -2.0];
        let mut gx = vec![0.0; 3];
        aff.backward_acc(&x, &gy, &mut gx);
        aff.backward_acc(&x, &gy, &mut gx);
        let gw = aff.weight.grad().unwrap();
        // Twice the single-call outer product.
        assert!((gw[0] - 2.0 * 1.0 * 0.5).abs() < 1e-15);
        assert!((gw[3] - 2.0 * -2.0 * 0.5).abs() < 1e-15);
        assert_eq!(aff.bias.grad().unwrap(), &[2.0, -4.0]);
    }
}
