//! Support vector machines: soft-margin binary classification, ε-insensitive
//! regression, and one-vs-one multiclass composition, all solved in the dual by SMO.

mod binary;
mod kernel;
mod ovo;
mod solver;
mod svr;

pub use binary::{kkt_report, train_binary_svm, BinarySvmModel, SvmParams};
pub use kernel::{kernel_eval, Kernel};
pub use ovo::{predict_ovo, tally_votes, train_ovo, OvoModel, PairLearner};
pub use solver::SolverStats;
pub use svr::{train_svr, SvrModel};
