//! Toolkit for a four-valued quantified modal logic.
//!
//! The logic extends classical first-order modal K with a strong
//! (constructive) negation `~` that is evaluated by its own clauses rather
//! than by complementation: a model assigns every predicate an independent
//! positive and negative extension at each world, so a ground atom may be
//! verified, falsified, both, or neither. On top of that core the crate
//! covers:
//!
//! * [`syntax`]: terms, formulas, signatures, substitution;
//! * [`parser`] / [`printer`]: a round-tripping concrete syntax;
//! * [`nnf`]: negation normal form, driving `~` down to atoms;
//! * [`semantics`]: expanding-domain Kripke models, evaluation in both
//!   polarities, model classes, bounded model enumeration and countermodel
//!   search;
//! * [`calculus`]: Hilbert-style derivations, axiom-scheme matching, proof
//!   checking and the deduction theorem transformation;
//! * [`nelson`]: embeddings of constructive logic with strong negation into
//!   the modal language, and the derived-model construction that connects
//!   the two semantics;
//! * [`formats`]: JSON documents for models and derivations;
//! * [`gen`]: bounded exhaustive and seeded random generators used by the
//!   test suites.

pub mod calculus;
pub mod formats;
pub mod gen;
pub mod nelson;
pub mod nnf;
pub mod parser;
pub mod printer;
pub mod semantics;
pub mod syntax;
