//! Eavesdropping attacks against the link, all operating on intercepted
//! sample buffers with the standard-format preamble as the receiver
//! reference: full white-box decoding, a surrogate decoder trained with
//! encoder access only, decoder-only (identical evaluation path to
//! white-box), and a black-box surrogate trained from captured
//! input/feature pairs.

mod pairs;
mod surrogate;

pub use pairs::{load_pairs, save_pairs, SurrogatePairSet};
pub use surrogate::{
    collect_blackbox_pairs, mirror_decoder, train_surrogate_blackbox,
    train_surrogate_semi_whitebox,
};

use num_complex::Complex;

use crate::error::Result;
use crate::jscc::{decode, JsccModel};
use crate::ofdm::{build_preamble, receive, OfdmConfig, RxConfig, RxResult};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Whitebox,
    /// Encoder-only white-box: a surrogate decoder trained through the
    /// chain with the true encoder frozen.
    SemiWhitebox,
    /// Full decoder knowledge; evaluation path is identical to white-box.
    DecoderOnly,
    Blackbox,
}

impl AttackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Whitebox => "whitebox",
            AttackKind::SemiWhitebox => "semi_whitebox",
            AttackKind::DecoderOnly => "decoder_only",
            AttackKind::Blackbox => "blackbox",
        }
    }
}

/// Run the standard-reference receive chain on an intercepted buffer.
pub fn eve_receive<T: Real>(
    rx: &[Complex<T>],
    cfg: &OfdmConfig<T>,
    payload_len: usize,
) -> Result<RxResult<T>> {
    let p = build_preamble(cfg, None)?;
    let rxc = RxConfig {
        cfg,
        timing_ref: &p.lts_time,
        chanest_ref: &cfg.lts_freq,
        payload_len,
        eq_floor: T::of(1e-6),
    };
    receive(rx, &rxc)
}

/// White-box attack: full receive chain with the standard preamble
/// reference, then the known decoder. The decoder-only attack evaluates
/// through this same path.
pub fn attack_whitebox<T: Real>(
    rx: &[Complex<T>],
    decoder: &JsccModel<T>,
    cfg: &OfdmConfig<T>,
) -> Result<Vec<T>> {
    let out = eve_receive(rx, cfg, decoder.arch.feature_dim)?;
    decode(&out.features, decoder)
}
