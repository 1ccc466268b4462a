//! Statevector simulation and training of a fully quantum GAN for 28×28
//! grayscale images, with a measured two-circuit baseline, PCA feature
//! compression and Fréchet-distance scoring.

pub mod circuit;
pub mod cli;
pub mod data;
pub mod encode;
pub mod error;
pub mod gan;
pub mod grad;
pub mod linalg;
pub mod metrics;
pub mod pca;
pub mod statevector;

pub use error::{Error, Result};
