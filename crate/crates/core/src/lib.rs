pub mod chaos;
pub mod colloc;
pub mod error;
pub mod linalg;
pub mod model;
pub mod reference;
pub mod sinc;
pub mod study;

pub use error::{Error, Result};
