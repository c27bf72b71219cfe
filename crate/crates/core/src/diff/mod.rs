//! Differentiable compute substrate: a flat-tensor expression graph with
//! forward evaluation and reverse-mode gradients.
//!
//! Complex quantities are carried as (re, im) pairs of real tensors; see
//! [`CVar`]. Every operation with a gradient rule is verifiable against
//! central finite differences via [`finite_difference_check`].

mod check;
mod cvar;
mod graph;

pub use check::finite_difference_check;
pub use cvar::CVar;
pub use graph::{Graph, Tensor, VarId};
