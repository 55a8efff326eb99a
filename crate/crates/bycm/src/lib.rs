pub mod bigraph;
pub mod codec;
pub mod duality;
pub mod error;
pub mod prob;
pub mod region;
pub mod seed;
pub mod typicality;

pub use error::{Error, Result};
