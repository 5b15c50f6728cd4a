//! Command-line front end, output formats and parallel drivers for
//! [`rabi_core`].

// `!(a > b)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod cli;
pub mod commands;
mod error;
pub mod parallel;
pub mod records;

pub use error::{CliError, CliResult};

use rabi_core::Error;

/// Exit status for a failed run: 1 when the computation itself gave up on
/// convergence or data quality, 2 for invalid input and I/O problems.
pub fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::Model(
            Error::NonConvergence { .. }
            | Error::TooManyFlaggedCells { .. }
            | Error::WindowExhausted { .. }
            | Error::IterationCap { .. },
        ) => 1,
        _ => 2,
    }
}
