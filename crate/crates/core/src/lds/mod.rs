//! Uniform streams on `[0,1)^d` and star discrepancy.
//!
//! Three generators sit behind [`UniformStream`]:
//!
//! * `srs` - i.i.d. uniforms from the counter-based [`CounterRng`].
//! * `lhs` - Latin hypercube blocks, served row by row.
//! * `sobol` - the Sobol sequence (Gray-code order, Joe-Kuo direction
//!   numbers), optionally digitally shifted and/or served in shuffled blocks.

mod discrepancy;
mod lhs;
mod rng;
mod sobol;
mod stream;

pub use discrepancy::{star_discrepancy_1d, star_discrepancy_grid, DiscrepancyBracket};
pub use lhs::lhs_block;
pub use rng::{derive_seed, CounterRng};
pub use sobol::{direction_table, DirectionEntry, DirectionTable, SobolGenerator, SOBOL_BITS, SOBOL_MAX_DIM};
pub use stream::{StreamKind, StreamSpec, UniformSource, UniformStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdsError {
    #[error("sobol dimension {0} unsupported (1..={max})", max = SOBOL_MAX_DIM)]
    SobolDimension(usize),
    #[error("sobol index overflow: more than 2^32 - 1 points requested")]
    SobolIndexOverflow,
    #[error("latin hypercube block exhausted after {0} points and refill is disabled")]
    LhsExhausted(usize),
    #[error("stream dimension must be at least 1")]
    ZeroDimension,
    #[error("output buffer has length {got}, stream dimension is {expected}")]
    BufferLength { expected: usize, got: usize },
    #[error("discrepancy needs at least one point")]
    EmptyPointSet,
    #[error("grid discrepancy supports dimension 1..=3, got {0}")]
    DimensionTooLarge(usize),
    #[error("point {index} has {got} coordinates, expected {expected}")]
    RaggedPoints { index: usize, expected: usize, got: usize },
    #[error("direction-number table: {0}")]
    DirectionTable(String),
    #[error("invalid stream option: {0}")]
    InvalidOption(String),
}
