// mdbook cannot test listings that use an external crate, so every chapter is
// pulled in as a doc comment and `cargo test` runs the listings as doc-tests.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/padic.md")]
pub mod padic {}
#[doc = include_str!("src/search.md")]
pub mod search {}
#[doc = include_str!("src/cubic.md")]
pub mod cubic {}
#[doc = include_str!("src/densities.md")]
pub mod densities {}
#[doc = include_str!("src/monte-carlo.md")]
pub mod monte_carlo {}
#[doc = include_str!("src/quartic.md")]
pub mod quartic {}
#[doc = include_str!("src/heights.md")]
pub mod heights {}
#[doc = include_str!("src/transversality.md")]
pub mod transversality {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
