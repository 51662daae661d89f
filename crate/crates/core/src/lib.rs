//! Genetic algorithms for weekly nurse rostering.
//!
//! The crate is organised around the problem model ([`instance`]), the
//! penalised objective ([`evaluation`]), a single-population GA
//! ([`engine`]), the grade-based cooperative sub-populations ([`coop`]),
//! fitness shaping and local improvement ([`improvement`]) and the
//! experiment harness with an exhaustive oracle ([`harness`]).

pub mod coop;
pub mod engine;
pub mod evaluation;
pub mod harness;
pub mod improvement;
pub mod instance;
pub mod report;

pub use evaluation::{evaluate, Balance, Evaluation, GradeSet, PenaltyShape, Schedule};
pub use instance::{parse_instance, serialize_instance, Instance};
