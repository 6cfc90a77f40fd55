//! Ising measures on the rooted binary tree, the overlapping-cell majority
//! renormalization, conditional magnetizations through transfer-matrix
//! chains, and percolation statistics of image zeros — with brute-force
//! enumeration oracles for everything.

pub mod chain;
pub mod error;
pub mod gibbs;
pub mod oracle;
pub mod perco;
pub mod renorm;
pub mod rng;
pub mod tree;

pub use chain::{ChainEnvironment, RatioTrajectory, TransferMatrix};
pub use error::{Error, Result};
pub use gibbs::{BoundaryCondition, ModelParams, Sampler, SpinField};
pub use oracle::ExactDistribution;
pub use perco::{Classification, PathStats, PathSummary, Verdict, ZebraEstimate};
pub use renorm::ImageField;
pub use tree::VertexAddress;
