//! Certification of polynomial innermost runtime complexity for constructor
//! rewrite systems via small polynomial path orders.
//!
//! The crate provides:
//!
//! - [`term`], [`prec`]: terms, signatures, precedences, and the tiering of
//!   argument positions into normal and safe ones;
//! - [`trs`]: rewrite systems, the innermost engine, derivation heights,
//!   pattern coverage, and garbage completion;
//! - [`order`]: the path orders (with and without parameter substitution),
//!   certificate checking, and replayable orientation proofs;
//! - [`seq`]: the sequence world — normalized terms, the flattening
//!   interpretation, the width-bounded order on sequences, descent lengths,
//!   and the embedding verifier;
//! - [`synth`]: automatic certificate search and the lower-bound family
//!   generator;
//! - [`bwsc`]: the tiered function algebra on binary words, its evaluator,
//!   and the compiler to certified rewrite systems;
//! - [`syntax`]: the textual formats for systems, certificates, programs,
//!   and measurement patterns.

pub mod bwsc;
pub mod order;
pub mod prec;
pub mod seq;
pub mod synth;
pub mod syntax;
pub mod term;
pub mod trs;

#[cfg(test)]
pub(crate) mod fixtures;
