//! Graph-based topological coding with parameterized total colorings.
//!
//! The crate models bipartite graphs together with `(k,d)`-total colorings,
//! where every color is an integer linear form `alpha*k + a*d` in two
//! symbolic parameters. On top of that sit:
//!
//! - Topcode-matrices (3 x q matrices of linear forms) and their algebra:
//!   union, subtraction, intersection, coincidence, exchanges, similarity;
//! - constructive coloring algorithms for trees and complete bipartite
//!   graphs in six constraint families, plus leaf-adding recursions;
//! - number-based strings read off Topcode-matrices, and the inverse
//!   search that reconstructs `(k, d, matrix)` from a digit string;
//! - every-zero matrix groups, colored graph homomorphisms, and
//!   set-colorings whose values are sets of linear forms (hypergraphs).
//!
//! Everything is exact integer arithmetic; no floats anywhere. All
//! iteration orders are deterministic so that equal inputs produce
//! byte-equal outputs, including JSON.

pub mod cli;
pub mod coloring_engine;
pub mod constructors;
pub mod graph_core;
pub mod groups_homo;
pub mod keystrings;
pub mod set_colorings;
pub mod topcode_matrix;

use thiserror::Error;

/// Crate-wide error type.
///
/// Operations that can fail on malformed input (parse errors, scale
/// limits, broken preconditions) return `Result<T>`; pure total
/// functions return values directly.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition of the operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A size limit meant to keep exhaustive searches at desk scale.
    #[error("size limit exceeded: {0}")]
    TooLarge(String),

    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),

    /// The question is well-posed but this implementation cannot decide
    /// it within its documented bounds (for example isomorphism beyond
    /// the supported vertex count).
    #[error("undecided: {0}")]
    Undecided(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
