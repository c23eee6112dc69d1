//! Sensemaking backend for multi-modal personal sensing data.
//!
//! Raw phone and wearable streams are ingested into validated per-person
//! [`model::DayRecord`]s, scanned by rule-based occurrence detectors,
//! rendered as de-identified natural-language narratives, and summarized
//! hour by hour by a pluggable language model. The [`eval`] module holds
//! the offline quality and cost measurements.

pub mod config;
pub mod encoder;
pub mod eval;
pub mod ingest;
pub mod llm;
pub mod model;
pub mod occurrence;
pub mod store;
pub mod synthetic;
