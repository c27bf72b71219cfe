//! Compact JSCC encoder/decoder/classifier models, their losses, and
//! end-to-end training through the OFDM chain and simulated channel.

mod arch;
mod checkpoint;
mod loss;
mod model;
mod train;

pub use arch::{
    blackbox_decoder, cifar_decoder, cifar_encoder, mnist_classifier, mnist_decoder,
    mnist_encoder, Act, ArchKind, LayerSpec, ModelArch,
};
pub use checkpoint::{load_model, save_model};
pub use loss::{loss_reconstruction, loss_total, papr};
pub use model::{
    build_forward, classify, decode, encode, feature_split_indices, features_to_input,
    power_normalize, JsccModel,
};
pub use train::{train_classifier, train_end_to_end, Adam, TrainConfig, TrainReport};
