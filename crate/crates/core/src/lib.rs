//! Mixed-membership community detection with the SLIM similarity matrix.
//!
//! The pipeline: build the symmetrized SLIM matrix from an adjacency
//! matrix, embed it with its leading eigenvectors, row-normalize, cluster
//! the rows with K-medians and reconstruct memberships from the centers.

pub mod bench;
pub mod dcmm;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod membership;
pub mod seed;
pub mod slim;

pub use dcmm::{DcmmParams, DegreeParams, ExpectedAdjacency, MembershipMatrix, MixingMatrix};
pub use error::{Error, Result};
pub use evaluation::{mixed_hamming_error, ErrorReport};
pub use graph::AdjacencyMatrix;
pub use membership::{mixed_slim, FitOptions, KMediansOptions, NormMode};
pub use slim::{build_slim, SlimConfig, TauRule, Variant};
