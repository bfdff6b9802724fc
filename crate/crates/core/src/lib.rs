//! Simulation and verification laboratory for two-dimensional
//! Potts/random-cluster interfaces pinned above a wall.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! potts_es  ──►  random_cluster  ──►  cluster_geometry  ──►  effective_walk
//!  (spin sampler   (bond configs,      (cluster, envelopes,   (step laws, DP
//!   + ES map)       exact oracles)      cone-point pieces)     kernels, bridges)
//! ```
//!
//! with [`excursion_ref`] providing the Brownian-excursion reference law and
//! [`monotone_coupling`] an exactly verified sequential coupling of two
//! random-cluster measures with ordered weights.
//!
//! Everything is deterministic given an RNG; samplers own their generator and
//! never share mutable state, so batches parallelise per replica.

pub mod cluster_geometry;
pub mod effective_walk;
pub mod error;
pub mod excursion_ref;
pub mod lattice;
pub mod monotone_coupling;
pub mod potts_es;
pub mod random_cluster;

pub use error::{Error, Result};
