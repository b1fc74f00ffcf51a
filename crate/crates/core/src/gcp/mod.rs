//! Global covariance pooling: feature ingestion, covariance pooling, the
//! head-plus-FC training loop and top-k evaluation.

mod bench;
mod data;
mod io;
mod train;

pub use bench::{lr_grid_search, BenchmarkShape, GridResult, LR_GRID};
pub use data::{covariance_pool, raw_covariance, ridge, synth_dataset, Dataset, FeatureSample};
pub use io::{
    decode_bin, decode_csv, encode_bin, encode_csv, load_features, save_features, write_atomic, FeatureFormat,
};
pub use train::{
    evaluate, topk_accuracy, train, train_with, EpochRecord, FcInit, GcpModel, RunRecord, TrainConfig,
};
