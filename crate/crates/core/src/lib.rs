//! Toolkit for auditing and correcting lifecycle data in service-ecosystem
//! datasets (APIs, mashups, and their compositions), and for analyzing the
//! ecosystem's evolution as a family of dynamic networks.
//!
//! The pipeline has four stages, each usable as a library module or through
//! the `ecolife` CLI:
//!
//! 1. [`dataset`] — ingest and validate raw API/mashup records.
//! 2. [`liveness`] — classify true availability via text rules and HTTP
//!    probing (live or replayed from a fixture store).
//! 3. [`correction`] — estimate missing death times (normal MLE + clamped
//!    sampling), derive split/transfer end times, and repair mashup
//!    compositions over time.
//! 4. [`networks`] / [`analysis`] — build the mashup-API bipartite network,
//!    derive co-occurrence and category snapshots, and compute the evolution
//!    metrics (counts, degree distributions with power-law goodness-of-fit,
//!    diversity, connected components, pair survival, composition sizes).

pub mod analysis;
pub mod correction;
pub mod dataset;
pub mod date;
pub mod liveness;
pub mod networks;

pub use date::{Cadence, Day};
