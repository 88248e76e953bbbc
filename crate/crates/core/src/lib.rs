pub mod error;
pub mod generators;
pub mod hardy;
pub mod io;
pub mod linalg;
pub mod pair;
pub mod phase;
pub mod report;
pub mod tuple;

pub use error::{DilationError, Result};
pub use linalg::{ComplexMatrix, ToleranceConfig, C64};
