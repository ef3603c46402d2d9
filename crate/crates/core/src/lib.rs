//! Block-structured learning of large discrete Bayesian networks.
//!
//! The library learns a network in five stages: pairwise divergence
//! (1 − normalized mutual information) between variables, agglomerative
//! clustering of the variables, per-cluster local structure search, lossy
//! compression of each cluster's value combinations into a single code
//! column, a global structure search over the code columns, and a final
//! stitching step that connects the local networks through per-cluster
//! support code nodes. A classical whole-graph Hill-Climbing learner is
//! included as the baseline, together with a benchmark harness surface
//! (time and structural-Hamming-distance ratios) and a single-variable
//! imputation evaluator.
//!
//! Modules:
//! * [`dataio`] — CSV ingestion, equal-frequency discretization, network
//!   files, forward sampling.
//! * [`infotheory`] — entropy / MI / NMI estimators and the divergence
//!   matrix.
//! * [`varcluster`] — agglomerative clustering and threshold selection.
//! * [`graph`] — DAG values, edge moves, topological order, SHD.
//! * [`search`] — BIC/MI scores and greedy Hill-Climbing.
//! * [`compress`] — most-frequent and Hamming-distance combination coding.
//! * [`blockpipeline`] — the five-stage pipeline, support-node stitching,
//!   CPT fitting, and imputation.

pub mod blockpipeline;
pub mod compress;
pub mod dataio;
pub mod error;
pub mod graph;
pub mod infotheory;
pub mod search;
pub mod varcluster;

pub use error::{Error, Result};
