//! Tensor kernels, reverse-mode differentiation and the deterministic PRNG.

mod gradcheck;
mod graph;
pub mod rng;
mod tensor;

pub use gradcheck::{analytic_gradients, grad_check, grad_check_many, ScalarProgram};
pub use graph::{sigmoid, ActivationKind, Gradients, Graph, SynapseInputs, Var};
pub use tensor::Tensor;
