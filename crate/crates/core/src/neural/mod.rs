//! Learned demodulation: network definitions, checkpoints, and training.

pub mod model;
pub mod train;

pub use model::{
    cnn1_forward, cnn2_forward, demod_direct, demod_neural, load_cnn2, load_resstack, save_cnn2,
    save_resstack, Cnn1Config, Cnn2Config, Normalization, ResStackNet, TwoScaleNet, ARCH_CNN1,
    ARCH_CNN2, ARCH_DIRECT,
};
pub use train::{
    resume_cnn1, resume_cnn2, resume_direct, split_indices, train_cnn1, train_cnn2, train_direct,
    EpochStats, History, TrainConfig,
};
