//! Local bootstrap resampling of attributed graphs, graph statistics for
//! validating replicas, and alignment/collapse metrics for scoring
//! unsupervised node embeddings.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`], [`io`] and [`knn`] hold the data types, file formats and
//!   nearest-neighbour constructions everything else builds on.
//! * [`graphon`] samples synthetic graphs with known latent structure.
//! * [`bootstrap`] produces graph replicas.
//! * [`stats`] summarises graphs and compares replicas against an original.
//! * [`metrics`] scores embeddings (CCA alignment, spectral collapse
//!   diagnostics, clustering agreement).
//! * [`tuner`] runs the replica / train / align / screen selection loop.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise; see [`exec`].

pub mod bootstrap;
pub mod error;
pub mod exec;
pub mod graph;
pub mod graphon;
pub mod io;
pub mod knn;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod tuner;

pub use error::{Error, Result};
pub use graph::{Graph, KnnGraph, KnnSource};
pub use nalgebra::DMatrix;
