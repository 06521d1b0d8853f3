pub mod analysis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod harmonics;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod model;
pub mod study;
pub mod system;

pub use error::{Error, Result};
