//! Local solubility and local densities of diagonal cubic and quartic
//! surfaces over `Q`.

pub mod cubic;
pub mod density;
pub mod enumeration;
pub mod error;
pub mod mc;
pub mod padic;
pub mod quartic;
pub mod report;
pub mod search;
pub mod transversality;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
