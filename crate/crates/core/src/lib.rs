#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bayes;
pub mod error;
pub mod features;
pub mod math;
pub mod moe;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
