//! Multi-view novel class discovery.
//!
//! Given several feature views of one sample set, where the classes split into
//! labeled *known* classes and unlabeled *novel* classes, the solver jointly
//! factorizes every view as `X_v ≈ W_v A_v Y` with orthonormal bases `W_v`,
//! per-view centroid matrices `A_v`, one shared one-hot label matrix `Y` and
//! simplex view weights `α`. Known-class supervision pulls labeled columns of
//! `Y` toward their ground truth and a disjointness term pushes unlabeled
//! samples away from the known classes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line tool and timing live in the `mvncd` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod dataset;
mod error;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};

pub use dataset::{
    decode_onehot, encode_onehot, normalize_features, split_known_novel, MultiViewDataset, NormalizeMode, OneHotLabels,
    ViewMatrix,
};
pub use metrics::{clustering_accuracy, hungarian_match, nmi, purity, ContingencyTable};
pub use solver::{fit, fit_observed, FitEvent, FitResult, ModelState, Problem, SolverConfig};
pub use synthetic::{generate_synthetic, SyntheticSpec};
