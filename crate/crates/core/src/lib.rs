pub mod diagnostics;
pub mod error;
pub mod features;
pub mod frac;
pub mod io;
pub mod kernel;
pub mod estimation;
pub mod evaluation;
pub mod models;
pub mod stats;

pub use error::{Error, Result};
