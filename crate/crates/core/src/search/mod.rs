//! Witness search and positivity certificates for jet-form residuals on
//! spheres and frames.

mod certify;
mod minimize;
mod problem;

pub use certify::{certify_positive, Certificate};
pub use minimize::{cluster_connected, cluster_witnesses, descend, minimize, random_point, SearchOutcome, StartResult};
pub use problem::{Manifold, Mode, SearchConfig, SearchProblem};
