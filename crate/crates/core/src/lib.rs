pub mod error;
pub mod exactpoly;
pub mod funcfield;
pub mod galois;
pub mod job;
pub mod numroots;
pub mod continuation;
pub mod monodromy;
pub mod permgroup;
pub mod verify;

pub use error::{Error, Result};
