pub mod dynamics;
pub mod experiments;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod models;
pub mod oracles;
pub mod qops;

pub use error::{Error, Result};
