pub mod approx;
pub mod cahc;
pub mod cbs;
pub mod collision;
pub mod error;
pub mod grid;
pub mod hybrid;
pub mod io;
pub mod lowlevel;
pub mod reeds_shepp;
pub mod types;
pub mod validate;

pub use error::{Error, Result};
pub use types::*;
