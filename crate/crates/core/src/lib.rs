//! Zero-shot policy stitching through latent-space alignment.

pub mod alignment;
pub mod anchors;
#[cfg(feature = "cli")]
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod policy;
pub mod training;

pub use error::{Error, Result};
