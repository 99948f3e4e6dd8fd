//! Dense linear algebra, activations, hand-differentiated blocks,
//! optimizers and a finite-difference gradient checker.

mod activation;
mod gradcheck;
mod layers;
mod matrix;
mod optim;
mod rng;

pub(crate) use activation::softmax_unchecked;
pub use activation::{log_softmax, sigmoid, sigmoid_vec, softmax, softmax_backward, tanh, tanh_vec, Activation};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use layers::{Linear, Mlp, Param, Parameterized};
pub use matrix::{dot, Matrix};
pub use optim::{Optimizer, OptimizerKind};
pub use rng::Rng;
