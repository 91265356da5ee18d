//! Minimal reverse-mode differentiation over dense 2-D tensors.
//!
//! A [`Tape`] records every operation in execution order. Leaves are either
//! constants ([`Tape::constant`]) or trainable [`Parameter`]s bound by slot
//! ([`Tape::param`]). A single [`Tape::backward`] call walks the record in
//! reverse and accumulates gradients into the parameter slots.
//!
//! Only the operations the forecasting model needs are provided. The one
//! broadcast is [`Tape::add_row`], which adds a `1 x c` tensor to every row.

mod gradcheck;
mod tape;

pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use tape::{Parameter, Tape, Var};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward requires a 1x1 loss, got {0:?}")]
    NotScalar((usize, usize)),
    #[error("tape already consumed by a previous backward pass")]
    StaleTape,
    #[error("parameter slot {slot} out of range ({available} parameters supplied)")]
    UnknownParameter { slot: usize, available: usize },
    #[error("column range {from}..{to} out of bounds for {cols} columns")]
    BadSlice { from: usize, to: usize, cols: usize },
}
