//! Set semantics for regular tree grammars of imperative programs.
//!
//! Programs are drawn from a small imperative language; a grammar denotes a
//! possibly infinite set of programs. The crate evaluates such sets under
//! several semantics (per-state, per-vector, with or without divergence),
//! checks unrealizability triples, and compares semantic granularity.

pub mod ast;
mod compile;
pub mod concrete;
pub mod domain;
pub mod error;
mod fixpoint;
pub mod formula;
pub mod grammar;
pub mod granularity;
pub mod loopfree;
pub mod replicate;
pub mod triples;
mod vector;
pub mod vector_agnostic;
pub mod vector_aware;

pub use ast::{Sort, Term};
pub use domain::{DVState, DomainConfig, State, VState};
pub use error::{Error, Result};
pub use fixpoint::SolverStats;
pub use grammar::Rtg;
pub use vector::{EngineStats, LoopParts};
