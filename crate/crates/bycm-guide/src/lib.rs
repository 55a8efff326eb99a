//! The chapters of the guide in `book/src`, compiled so that `cargo test --doc`
//! runs every Rust block in them.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/probability.md")]
pub mod probability {}
#[doc = include_str!("../../../book/src/typicality.md")]
pub mod typicality {}
#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}
#[doc = include_str!("../../../book/src/region.md")]
pub mod region {}
#[doc = include_str!("../../../book/src/codec.md")]
pub mod codec {}
#[doc = include_str!("../../../book/src/duality.md")]
pub mod duality {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
