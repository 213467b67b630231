pub mod equivalence;
pub mod error;
pub mod framechange;
pub mod frames;
pub mod groups;
pub mod operators;
pub mod phaselab;
pub mod relativization;
pub mod representations;
pub mod sampling;

pub use error::{Error, Result};
