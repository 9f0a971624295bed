//! Neuroevolution toolkit for joint discrete-phase RIS configuration and
//! codebook precoder selection in MISO links.

pub mod error;
pub mod harness;
pub mod baselines;
pub mod channel;
pub mod cosyne;
pub mod mbacnn;
pub mod multiris;
pub mod numerics;
pub mod system;

pub use error::{Error, Result};
