//! Quantum transfer learning on classical convolutional classifiers.
//!
//! A trained network's dense tail is replaced by a dressed quantum network
//! (dense pre-net, variational circuit simulated on an exact statevector,
//! dense post-net) while the convolutional feature extractor stays frozen.

pub mod autonet;
pub mod datapipe;
pub mod dressed;
pub mod error;
pub mod harness;
pub mod io;
pub mod qsim;
pub mod surgery;
pub mod vqc;

pub use error::{Error, Result};
