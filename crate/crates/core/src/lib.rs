//! Feature-model SAT laboratory.
//!
//! Encodes feature models to CNF, measures clause-class statistics, runs a
//! fixed-point simplification pipeline, solves with a CDCL solver whose main
//! features can be switched off, profiles restricted and unrestricted
//! variables along the solver's search, and searches weak/strong backdoors.
//!
//! Interchangeable procedures (SAT oracles, simplification passes, weak
//! backdoor searches, instance generators) sit behind small traits and are
//! looked up by name in registries, so the CLI and the experiment drivers
//! select them at runtime.

pub mod backdoor;
pub mod cnf;
pub mod feature_model;
pub mod generate;
pub mod profile;
pub mod report;
pub mod simplify;
pub mod solver;

pub use cnf::{Assignment, Clause, Formula, Lit, Var};
