//! Turn Stack Overflow code snippets into reusable, compilable APIs.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] streams a StackExchange posts dump into question/answer
//!   contexts and filters them down to APIzation candidates.
//! * [`prompt`] renders the six-part chain-of-thought + few-shot prompt.
//! * [`backend`] sends prompts to a chat-completion provider (or a replay mock).
//! * [`extract`] pulls the structured API out of the model's formatted answer.
//! * [`code_model`] parses Java/Python method signatures for comparison.
//! * [`equivalence`] classifies generated APIs against human ground truth and
//!   aggregates P-Acc / R-Acc / M-Acc / PR-Acc.
//! * [`compile`] compiles generated sources and drives the repair loop.
//! * [`eval`] runs whole benchmarks and writes reports.
//! * [`service`] exposes single-snippet APIzation over HTTP.

pub mod backend;
pub mod code_model;
pub mod compile;
pub mod corpus;
pub mod equivalence;
pub mod eval;
pub mod extract;
mod language;
pub mod prompt;
pub mod service;

pub use language::{Language, UnsupportedLanguage};
