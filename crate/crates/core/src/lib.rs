//! Detection of abusive language across heterogeneous online sources.
//!
//! The pipeline: ingest three source datasets into a unified labeled
//! corpus, turn text into features (TF-IDF, static word embeddings, or
//! contextual embedding sequences), train a hybrid
//! convolutional-recurrent classifier or one of five baselines, and
//! evaluate everything under stratified k-fold cross-validation with
//! confusion-matrix metrics, ROC/AUC and timing.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod persist;

pub use error::{Error, Result};
