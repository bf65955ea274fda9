//! Affine preferential-attachment graph laboratory.
//!
//! Grows the three affine PA models exactly, measures distances and structure
//! on the frozen graphs, evaluates the closed-form quantities of the theory,
//! and checks them against exhaustive enumeration of tiny instances.

pub mod enumeration;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod graph;
pub mod growth;
pub mod metrics;
pub mod params;
pub mod sampler;
pub mod structure;
pub mod theory;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Adjacency, GraphMeta, PAGraph};
pub use growth::{collapse, generate, generate_with, GenerateOptions, GrowthState};
pub use params::{Delta, PAParams, Variant};
pub use sampler::AttachmentSampler;
