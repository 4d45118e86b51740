pub mod boundary;
pub mod error;
pub mod field;
pub mod fit;
pub mod flow;
pub mod geom;
pub mod glue;
pub mod grid;
pub mod linalg;
pub mod litam;
pub mod pipeline;
pub mod snapshot;
pub mod tension;
pub mod verify;

pub use error::{Error, Result};

/// Largest supported target dimension `n + 1` (ball `B^{n+1}`).
pub const MAX_TARGET_DIM: usize = 8;
