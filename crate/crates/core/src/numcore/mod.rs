//! Dense matrices and the numeric primitives the network is built from.

mod exec;
mod gradcheck;
mod ops;
mod real;
mod rng;
mod tensor;

pub use exec::Exec;
pub use gradcheck::{grad_check, GradCheckReport};
pub use ops::{
    cross_entropy, dropout, hard_sigmoid, hard_sigmoid_ew, hard_sigmoid_grad, matmul,
    softmax_in_place, softmax_rows, tanh_ew, DropoutStyle, Mode, LOG_EPS,
};
pub use real::Real;
pub use rng::{derive_seed, Rng};
pub use tensor::{axpy, dot, mat_vec_acc, outer_acc, vec_mat_acc, Tensor2};
