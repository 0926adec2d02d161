//! Minimal numeric core: dense double-precision tensors, differentiable
//! primitive operations with explicit backward companions, a bias-corrected
//! Adam step, a deterministic splittable RNG, and a central-finite-difference
//! gradient oracle.
//!
//! There is no taped autograd: each forward has a hand-written backward and
//! the model layer composes them. That keeps every gradient verifiable
//! operation by operation.

mod adam;
mod check;
mod layers;
mod ops;
mod parallel;
mod rng;
mod tensor;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use check::{finite_diff_grad, max_rel_err};
pub use layers::{Affine, Embedding, Linear};
pub use ops::{
    cross_entropy, cross_entropy_backward, glu, glu_backward, linear_backward, linear_forward,
    log_softmax, softmax, softmax_backward,
};
pub(crate) use ops::{
    add_assign, glu_backward_into, glu_into, matvec_acc, matvec_acc_transposed, matvec_into,
    outer_acc, scale, sigmoid, softmax_in_place,
};
pub use parallel::parallel_fill;
pub use rng::Rng;
pub use tensor::Tensor;
