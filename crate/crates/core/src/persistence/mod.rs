//! File formats: binary datasets and models, CSV tables, report directories.

pub mod binary;
pub mod report;
pub mod tables;

pub use binary::{
    decode_dataset, decode_model, encode_dataset, encode_model, load_dataset, load_model, save_dataset, save_model,
};
pub use report::{read_norm_stats, write_report};
pub use tables::{read_loss_history, read_roc, read_scores, write_loss_history, write_roc, write_scores, ScoreRow};
