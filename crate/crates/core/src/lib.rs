//! Active learning of sparse halfspaces under bounded (Massart) label noise.
//!
//! The learner runs online mirror descent with a `p`-norm regularizer on
//! labels queried from a shrinking margin band, so its label cost grows with
//! the sparsity `s` and only logarithmically with the dimension `d`.
//!
//! Modules, bottom up:
//! - [`linalg`]: vectors, norms, hard thresholding, the `p`-norm mirror map
//! - [`feasible`]: convex constraint sets and Euclidean projection onto them
//! - [`mirror`]: regularizer, Bregman projection, mirror-descent steps
//! - [`oracles`]: synthetic distributions, noise models, label accounting
//! - [`refine`], [`initialize`], [`learner`]: the learning algorithm
//! - [`diagnostics`]: Monte Carlo error estimates and the lemma panel
//! - [`experiment`]: config-driven sweeps with CSV/JSON output

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod feasible;
pub mod initialize;
pub mod learner;
pub mod linalg;
pub mod mirror;
pub mod oracles;
pub mod refine;
pub mod trace;

pub use error::{Error, Result};
pub use learner::{learn, run_seeded, LearnerConfig, OracleSetup, Profile, RunReport};
pub use linalg::Vector;
pub use oracles::{DistributionKind, NoiseModel, Oracles, SamplingMode};
