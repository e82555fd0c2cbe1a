pub mod error;
pub mod model_io;
pub mod bench;
pub mod cells;
pub mod data;
pub mod numerics;
pub mod plot;
pub mod cli;
pub mod training;

pub use error::{Error, Result};
