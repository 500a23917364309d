//! Questionnaire-driven classification and leave-question-out ablation.
//!
//! The pipeline: a [`survey::Questionnaire`] defines questions and options,
//! responses are encoded into a [`survey::Dataset`], a classifier from [`ann`]
//! or [`svm`] is trained and scored with [`eval`], and [`ablation`] removes
//! questions from the trained model's input one and two at a time to find
//! critical questions and dependencies between them.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ablation;
pub mod ann;
mod classifier;
pub mod cohort;
pub mod error;
pub mod eval;
mod parallel;
pub mod rng;
pub mod survey;
pub mod svm;

pub use classifier::{argmax, Classifier};
pub use error::{Error, Result};
