//! Discovers shared latent activity steps across collections of multi-modal
//! sequences, temporally parses every sequence over the discovered steps,
//! generates a short textual description per step, and scores parses against
//! ground truth with cluster-matched metrics.
//!
//! The pipeline, end to end:
//!
//! 1. [`lang_atoms`] selects salient words from subtitles (tf-idf) — the
//!    language half of the atom vocabulary.
//! 2. [`joint_cluster`] clusters object proposals jointly over sequences
//!    (single-cluster graph partitioning plus a coupled multi-sequence
//!    objective) — the visual half. It also filters outlier sequences.
//! 3. [`corpus`] turns raw frames into binary atom-occurrence vectors.
//! 4. [`bphmm`] runs MCMC over a beta-process HMM: every sequence runs an HMM
//!    restricted to its own subset of globally shared activity steps.
//! 5. [`describe`] ranks Markov-model samples against each step's language
//!    parameters to caption it.
//! 6. [`eval`] scores a parse with label-matched IOU and mAP.
//!
//! [`synth`] samples from the generative model exactly and is the primary
//! correctness oracle for the sampler.

pub mod bphmm;
pub mod corpus;
pub mod describe;
mod error;
pub mod eval;
pub mod joint_cluster;
pub mod lang_atoms;
pub mod rng;
pub mod storyline;
pub mod synth;

pub use error::{Error, Result};
