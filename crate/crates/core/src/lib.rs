pub mod asymptotics;
pub mod charnum;
pub mod config;
pub mod error;
pub mod geometry;
pub mod heat;
pub mod numeric;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
