//! Core library for an SDN-enabled industrial network security toolkit.
//!
//! Pieces: SCADA traffic preprocessing and a from-scratch 1-D CNN payload
//! classifier with decision-tree / random-subspace-KNN baselines; a
//! hash-chained append-only ledger of controller-issued flow rules; a
//! deterministic switch/controller simulation; a read-only detection node
//! that audits switch flow tables against the ledger; and report emitters.

pub mod attack;
pub mod baselines;
pub mod dataset;
pub mod detection;
pub mod error;
pub mod ledger;
pub mod model_io;
pub mod nn;
pub mod report;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
