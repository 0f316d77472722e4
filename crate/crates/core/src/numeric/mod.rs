//! Extended-precision arithmetic, summation, least squares and exact values.

pub mod dd;
pub mod exact;
pub mod linalg;
pub mod sum;

pub use dd::{Dd, DD_DIGITS, DD_EPS};
pub use exact::PiPoly;
pub use sum::CompensatedSum;
