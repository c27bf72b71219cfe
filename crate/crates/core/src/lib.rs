//! Simulation library for an OFDM-based deep joint source-channel coding
//! link, the eavesdropping attacks it is exposed to, and a preamble
//! perturbation defense that degrades eavesdroppers while preserving the
//! legitimate receiver.
//!
//! The crate is generic over the scalar type via [`Real`] (`f32` for
//! training speed, `f64` for tight numerical invariants); concrete aliases
//! for the common instantiations live at the crate root.

pub mod attacks;
pub mod channel;
pub mod diff;
pub mod guard;
pub mod harness;
pub mod jscc;
pub mod ofdm;
pub mod pipeline;

mod error;
mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type Graph32 = diff::Graph<f32>;
pub type Graph64 = diff::Graph<f64>;
pub type Tensor32 = diff::Tensor<f32>;
pub type Tensor64 = diff::Tensor<f64>;
pub type OfdmConfig32 = ofdm::OfdmConfig<f32>;
pub type OfdmConfig64 = ofdm::OfdmConfig<f64>;
pub type ChannelModel32 = channel::ChannelModel<f32>;
pub type ChannelModel64 = channel::ChannelModel<f64>;
pub type JsccModel32 = jscc::JsccModel<f32>;
pub type Perturbation32 = guard::Perturbation<f32>;
pub type Codebook32 = guard::Codebook<f32>;
