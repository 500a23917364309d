//! Neural-network classifiers: multilayer perceptron and radial-basis-function network.

pub mod mlp;
pub mod rbf;

pub use mlp::{
    fit_classifier, mlp_train, train, Activation, Batch, Gradient, MlpNetwork, Optimizer,
    StopReason, TrainConfig, TrainOutcome, LM_MAX_WEIGHTS,
};
pub use rbf::{rbf_fit, rbf_fit_dataset, Centers, RbfNetwork};
