//! Effective noncommutative Nevanlinna–Pick interpolation in the row ball.

pub mod asymptotics;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod ncpoly;
pub mod pick;
pub mod sampling;
pub mod schema;
pub mod search;
pub mod tensor;
pub mod verify;
pub mod zoo;

pub use error::{Error, Result};
