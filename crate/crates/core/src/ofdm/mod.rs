//! OFDM baseband chain: numerology, standard preamble, frame mapping,
//! modulation, synchronization, CFO handling, channel estimation and
//! equalization. Everything here operates on plain complex sample buffers;
//! the differentiable mirror of the transmit/receive chain lives in
//! [`crate::pipeline`].

mod chanest;
mod config;
mod fourier;
mod grid;
mod modem;
mod preamble;
mod receiver;
mod sync;

pub use chanest::{equalize, estimate_channel};
pub use config::OfdmConfig;
pub use fourier::{dft, idft};
pub use grid::{extract_features, map_to_grid, FrameGrid};
pub use modem::{build_packet, demodulate, dump_iq, modulate, read_iq};
pub use preamble::{build_preamble, Preamble};
pub use receiver::{receive, receive_ideal, RxConfig, RxResult};
pub use sync::{coarse_cfo, correct_cfo, detect_packet, fine_cfo, fine_timing_sync, SyncResult};
