//! Story-ending baselines and the harness that evaluates them.
//!
//! The pipeline: ingest five-sentence stories from CSV ([`corpus`]), split
//! them deterministically, generate candidate endings with pluggable
//! backends ([`backends`]), score candidates against the gold fifth
//! sentence ([`metrics`]), and aggregate per-backend reports alongside
//! human ratings ([`harness`], [`humaneval`]). Every seeded draw goes
//! through one PRNG ([`rng`]) so runs reproduce byte-for-byte.

pub mod backends;
pub mod corpus;
pub mod embeddings;
pub mod harness;
pub mod humaneval;
pub mod metrics;
pub mod net;
pub mod ngram;
pub mod rng;
