#![doc = include_str!("../README.md")]

pub mod codec;
pub mod construction;
pub mod error;
pub mod gf2;
pub mod hash;
pub mod montecarlo;
pub mod puf;
pub mod scheme;

pub use error::{Error, Result};
