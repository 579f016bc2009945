//! Planted geometric community detection in scale-free random graphs.
//!
//! The crate samples inhomogeneous random graphs (the null model) and the same
//! model with a planted geometric community (the alternative), computes
//! weighted-triangle statistics on them, and runs the detection,
//! identification and size-estimation procedures built on those statistics.
//!
//! Module map:
//!
//! - [`weights`]: power-law weight sequences and their moment constants.
//! - [`generators`]: null and planted-community graph samplers.
//! - [`graph`]: immutable compressed adjacency storage and edge-list I/O.
//! - [`triangles`]: forward triangle enumeration, `W(G)` and `W(a)`.
//! - [`inference`]: detection, identification and community-size estimation.
//! - [`oracle`]: brute-force and Monte Carlo verifiers.
//! - [`cli`]: the `geodetect` command-line surface and experiment harness.

pub mod cli;
pub mod error;
pub mod generators;
pub mod graph;
pub mod inference;
pub mod oracle;
pub mod rng;
pub mod sum;
pub mod triangles;
pub mod weights;

pub use error::{Error, Result};
pub use generators::{
    connection_prob, sample_h0, sample_h1, torus_distance, Gamma, GroundTruth, Hypothesis,
    ModelParams, PairContext, Sample, TorusPoint,
};
pub use graph::Graph;
pub use inference::{
    default_t_n, detect, estimate_k, identify, risk_metrics, Decision, DetectionReport, FMode,
    IdentificationReport, SizeEstimateReport,
};
pub use triangles::{
    all_localized, enumerate_triangles, localized_weighted_triangles, triangle_statistics,
    weighted_triangles, TriangleStatistics,
};
pub use weights::{empirical_moments, generate_weights, moments, MomentConstants, WeightMode, WeightSequence};

/// Version tag written into every emitted file header.
pub const FORMAT_TAG: &str = "geodetect v1";
