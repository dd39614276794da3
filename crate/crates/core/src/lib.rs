//! Multivariate normal approximation via Stein couplings, with two
//! applications: a χ²-type homogeneity test for dense random graphs built from
//! edge and corrected 4-cycle counts, and joint normality of doubly indexed
//! permutation statistics such as descents and inversions.
//!
//! Module map:
//!
//! * [`graph`]: bitset graphs, G(n, p) and graphon sampling, subgraph counts.
//! * [`homogeneity`]: the statistics W₁, W₂, confidence sets over p, the test.
//! * [`permstat`]: permutations, anti-symmetric weight matrices, Fulman's step.
//! * [`coupling`]: Stein couplings, their identity checks and bound ingredients.
//! * [`montecarlo`]: reproducible replication, coverage/power/distance experiments.

pub mod coupling;
pub mod error;
pub mod graph;
pub mod homogeneity;
pub mod montecarlo;
pub mod numeric;
pub mod permstat;
pub mod report;
pub mod rng;

pub use coupling::{CouplingModel, CouplingSample};
pub use error::{Error, Result};
pub use graph::{Graph, GraphonKernel, SubgraphPattern};
pub use homogeneity::{ConfidenceSet, SearchDomain, TestStatistics};
pub use montecarlo::{DistanceReport, ExperimentConfig, FrequencyEstimate};
pub use permstat::{Permutation, StatMatrix};
