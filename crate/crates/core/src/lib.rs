//! Training-dynamics cartography for NLI prediction logs.
//!
//! The pipeline reads a dataset of premise/hypothesis pairs and per-epoch
//! gold-label probabilities, then
//!
//! 1. tags each pair with the lexical-overlap heuristic ([`heuristics`]),
//! 2. tracks running confidence and variability per sample and places it in
//!    an easy / hard / ambiguous region ([`dynamics`]),
//! 3. correlates overlap with confidence per split and class across epochs
//!    ([`correlation`]),
//! 4. draws cartography maps and trend charts ([`render`]).
//!
//! [`synth`] produces corpora with known answers for end-to-end checks and
//! [`cli`] wires everything into the `cartography` binary.

pub mod cli;
pub mod correlation;
pub mod dynamics;
pub mod heuristics;
pub mod ingest;
pub mod pipeline;
pub mod render;
pub mod synth;
